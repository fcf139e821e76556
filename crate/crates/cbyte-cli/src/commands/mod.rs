pub mod eval;
pub mod render;
pub mod synth;
pub mod track;
