//! Atomic file output: write to a temporary file in the target directory,
//! then rename over the destination, so failures leave no partial files.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {dir:?}"))?;
    tmp.write_all(bytes).with_context(|| format!("writing {path:?}"))?;
    tmp.persist(path).with_context(|| format!("renaming into {path:?}"))?;
    Ok(())
}
