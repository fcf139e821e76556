//! Cost matrix construction, thresholded linear assignment, and detection
//! score splitting.

use crate::types::{iou, BBox, Detection};
use crate::{real, Real};

/// Row-major matrix of association costs `c_ij = 1 - IoU(track_i, det_j)`,
/// rows indexing tracks and columns detections.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Real> CostMatrix<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Self {
        assert_eq!(values.len(), rows * cols, "cost matrix shape mismatch");
        Self { rows, cols, values }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Result of a gated one-to-one matching. Every row index appears exactly
/// once across `pairs` and `unmatched_rows`, and likewise for columns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

/// Builds the `1 - IoU` cost matrix between track and detection boxes.
pub fn cost_matrix<T: Real>(track_boxes: &[BBox<T>], det_boxes: &[BBox<T>]) -> CostMatrix<T> {
    CostMatrix::from_fn(track_boxes.len(), det_boxes.len(), |i, j| {
        T::one() - iou(&track_boxes[i], &det_boxes[j])
    })
}

/// Minimum-total-cost one-to-one matching with a cost gate.
///
/// Entries above `max_cost` are treated as forbidden: they are replaced by a
/// large constant before solving, and any pair still landing on one is
/// reported unmatched. The solver is a deterministic rectangular
/// shortest-augmenting-path method, so ties resolve identically on every run.
pub fn linear_assignment<T: Real>(costs: &CostMatrix<T>, max_cost: T) -> Assignment {
    let rows = costs.rows();
    let cols = costs.cols();
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        };
    }

    let forbidden = real::<T>(1e6);
    let gated: Vec<T> =
        costs.values().iter().map(|&c| if c > max_cost { forbidden } else { c }).collect();
    let full = solve_lsap(rows, cols, &gated);

    let mut row_taken = vec![false; rows];
    let mut col_taken = vec![false; cols];
    let mut pairs = Vec::with_capacity(full.len());
    for (i, j) in full {
        if costs.get(i, j) <= max_cost {
            row_taken[i] = true;
            col_taken[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    Assignment {
        pairs,
        unmatched_rows: (0..rows).filter(|&i| !row_taken[i]).collect(),
        unmatched_cols: (0..cols).filter(|&j| !col_taken[j]).collect(),
    }
}

/// Splits detections into high-score and low-score lists; scores below
/// `tau_low` are dropped. Input order is preserved within each list.
pub fn split_detections<T: Real>(
    detections: &[Detection<T>],
    tau_high: T,
    tau_low: T,
) -> (Vec<Detection<T>>, Vec<Detection<T>>) {
    debug_assert!(tau_low <= tau_high);
    let mut high = Vec::new();
    let mut low = Vec::new();
    for det in detections {
        if det.score >= tau_high {
            high.push(*det);
        } else if det.score >= tau_low {
            low.push(*det);
        }
    }
    (high, low)
}

const UNSET: usize = usize::MAX;

/// Solves the rectangular linear sum assignment problem, returning one
/// `(row, col)` pair per row of the smaller dimension.
///
/// Shortest-augmenting-path algorithm with dual variables (Jonker-Volgenant
/// family, following the formulation by Crouse, IEEE TAES 2016). Costs must
/// be finite.
fn solve_lsap<T: Real>(rows: usize, cols: usize, values: &[T]) -> Vec<(usize, usize)> {
    if rows > cols {
        // The path search requires rows <= cols; transpose and swap back.
        let mut transposed = vec![T::zero(); values.len()];
        for i in 0..rows {
            for j in 0..cols {
                transposed[j * rows + i] = values[i * cols + j];
            }
        }
        return solve_lsap(cols, rows, &transposed)
            .into_iter()
            .map(|(j, i)| (i, j))
            .collect();
    }

    let cost = |i: usize, j: usize| values[i * cols + j];

    let mut u = vec![T::zero(); rows];
    let mut v = vec![T::zero(); cols];
    let mut shortest_path_costs = vec![T::infinity(); cols];
    let mut path = vec![UNSET; cols];
    let mut col4row = vec![UNSET; rows];
    let mut row4col = vec![UNSET; cols];
    let mut scanned_rows = vec![false; rows];
    let mut scanned_cols = vec![false; cols];
    let mut remaining = vec![0usize; cols];

    for cur_row in 0..rows {
        let mut min_val = T::zero();
        let mut i = cur_row;
        let mut num_remaining = cols;
        for it in 0..cols {
            remaining[it] = cols - it - 1;
        }
        scanned_rows.iter_mut().for_each(|s| *s = false);
        scanned_cols.iter_mut().for_each(|s| *s = false);
        shortest_path_costs.iter_mut().for_each(|c| *c = T::infinity());

        // Dijkstra-style search for the shortest augmenting path from
        // cur_row to an unassigned column.
        let mut sink = UNSET;
        while sink == UNSET {
            let mut index = UNSET;
            let mut lowest = T::infinity();
            scanned_rows[i] = true;

            for it in 0..num_remaining {
                let j = remaining[it];
                let r = min_val + cost(i, j) - u[i] - v[j];
                if r < shortest_path_costs[j] {
                    path[j] = i;
                    shortest_path_costs[j] = r;
                }
                // On ties, prefer a column that immediately finishes the
                // path; this keeps tie-breaking deterministic.
                if shortest_path_costs[j] < lowest
                    || (shortest_path_costs[j] == lowest && row4col[j] == UNSET)
                {
                    lowest = shortest_path_costs[j];
                    index = it;
                }
            }

            min_val = lowest;
            debug_assert!(min_val.is_finite(), "infeasible assignment input");

            let j = remaining[index];
            if row4col[j] == UNSET {
                sink = j;
            } else {
                i = row4col[j];
            }
            scanned_cols[j] = true;
            num_remaining -= 1;
            remaining[index] = remaining[num_remaining];
        }

        u[cur_row] += min_val;
        for (row, scanned) in scanned_rows.iter().enumerate() {
            if *scanned && row != cur_row {
                u[row] += min_val - shortest_path_costs[col4row[row]];
            }
        }
        for (col, scanned) in scanned_cols.iter().enumerate() {
            if *scanned {
                v[col] -= min_val - shortest_path_costs[col];
            }
        }

        // Augment along the found path.
        let mut j = sink;
        loop {
            let i = path[j];
            row4col[j] = i;
            std::mem::swap(&mut col4row[i], &mut j);
            if i == cur_row {
                break;
            }
        }
    }

    col4row.into_iter().enumerate().collect()
}
