//! Shared independent oracles for integration tests. These deliberately use
//! different algorithms than the library code they check.

#![allow(dead_code)]

/// Eigenvalues of a symmetric matrix via the cyclic Jacobi method.
pub fn symmetric_eigenvalues(matrix: &[[f64; 8]; 8]) -> [f64; 8] {
    let mut a = *matrix;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..8 {
            for j in (i + 1)..8 {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..8 {
            for q in (p + 1)..8 {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..8 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..8 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig = [0.0; 8];
    for i in 0..8 {
        eig[i] = a[i][i];
    }
    eig
}

/// Minimum total cost over every complete injection of the smaller dimension
/// into the larger, by exhaustive recursion.
pub fn brute_force_min_cost(rows: usize, cols: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    if rows <= cols {
        let mut used = vec![false; cols];
        recurse_rows(0, rows, cols, cost, &mut used)
    } else {
        let swapped = |i: usize, j: usize| cost(j, i);
        let mut used = vec![false; rows];
        recurse_rows(0, cols, rows, &swapped, &mut used)
    }
}

fn recurse_rows(
    row: usize,
    rows: usize,
    cols: usize,
    cost: &dyn Fn(usize, usize) -> f64,
    used: &mut [bool],
) -> f64 {
    if row == rows {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for col in 0..cols {
        if used[col] {
            continue;
        }
        used[col] = true;
        let v = cost(row, col) + recurse_rows(row + 1, rows, cols, cost, used);
        used[col] = false;
        if v < best {
            best = v;
        }
    }
    best
}

/// Maximum total overlap over every partial injective matching of ground
/// truth identities to result identities, by exhaustive recursion.
pub fn brute_force_max_overlap(
    gt_ids: usize,
    res_ids: usize,
    overlap: &dyn Fn(usize, usize) -> usize,
) -> usize {
    let mut used = vec![false; res_ids];
    recurse_overlap(0, gt_ids, res_ids, overlap, &mut used)
}

fn recurse_overlap(
    g: usize,
    gt_ids: usize,
    res_ids: usize,
    overlap: &dyn Fn(usize, usize) -> usize,
    used: &mut [bool],
) -> usize {
    if g == gt_ids {
        return 0;
    }
    // Leaving this gt identity unmatched is always an option.
    let mut best = recurse_overlap(g + 1, gt_ids, res_ids, overlap, used);
    for r in 0..res_ids {
        if used[r] {
            continue;
        }
        used[r] = true;
        let v = overlap(g, r) + recurse_overlap(g + 1, gt_ids, res_ids, overlap, used);
        used[r] = false;
        best = best.max(v);
    }
    best
}
