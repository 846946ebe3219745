//! Optimal assignment between a ground-truth list and a prediction list.
//!
//! The solver is the shortest-augmenting-path form of the Hungarian method
//! on a square matrix: rectangular inputs are padded with zero-score dummy
//! rows or columns, so the shorter side is always fully matched. It only
//! needs field operations and an ordering on the score type, which lets the
//! same code run on floats and on exact rationals.
//!
//! Ties are resolved deterministically. Several objectives can be ranked
//! lexicographically: each one is maximized over the assignments that are
//! optimal for all previous ones. Among the survivors the assignment whose
//! sequence of `(gt, pred)` pairs is lexicographically smallest wins.

use crate::scalar::Scalar;

/// A dense `rows x cols` matrix of pairwise scores, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> ScoreMatrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        &self.data[row * self.cols + col]
    }
}

/// Which ground-truth element was paired with which prediction element.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchAssignment {
    /// `(gt_index, pred_index)`, ascending by `gt_index`.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

impl MatchAssignment {
    /// Sum of `matrix` over the matched pairs, in pair order.
    pub fn total<T: Scalar>(&self, matrix: &ScoreMatrix<T>) -> T {
        self.pairs
            .iter()
            .fold(T::zero(), |acc, &(i, j)| acc + matrix.get(i, j).clone())
    }
}

/// Maximum-score assignment between `gt` and `pred` under `scorer`.
pub fn match_lists<A, B, T, F>(gt: &[A], pred: &[B], mut scorer: F) -> MatchAssignment
where
    T: Scalar,
    F: FnMut(&A, &B) -> T,
{
    let scores = ScoreMatrix::from_fn(gt.len(), pred.len(), |i, j| scorer(&gt[i], &pred[j]));
    maximize_lexicographic(std::slice::from_ref(&scores))
}

/// Assignment maximizing `objectives[0]`, then `objectives[1]` among the
/// optima of the first, and so on. All matrices must have the same shape.
pub fn maximize_lexicographic<T: Scalar>(objectives: &[ScoreMatrix<T>]) -> MatchAssignment {
    let (rows, cols) = objectives
        .first()
        .map(|m| (m.rows, m.cols))
        .expect("at least one objective");
    assert!(
        objectives.iter().all(|m| m.rows == rows && m.cols == cols),
        "objective matrices differ in shape"
    );
    let n = rows.max(cols);
    let mut allowed = vec![true; n * n];
    let mut row_to_col: Vec<usize> = (0..n).collect();

    for objective in objectives {
        let cost = |i: usize, j: usize| -> T {
            if i < rows && j < cols {
                T::zero() - objective.get(i, j).clone()
            } else {
                T::zero()
            }
        };
        let solution = min_cost_assignment(n, |i, j| allowed[i * n + j].then(|| cost(i, j)));
        // Complementary slackness: an assignment is optimal exactly when it
        // only uses edges with zero reduced cost under the optimal duals.
        for i in 0..n {
            for j in 0..n {
                let edge = &mut allowed[i * n + j];
                if *edge && solution.row_to_col[i] != j {
                    let reduced = cost(i, j) - solution.row_dual[i].clone() - solution.col_dual[j].clone();
                    *edge = reduced.is_negligible();
                }
            }
        }
        row_to_col = solution.row_to_col;
    }

    let row_to_col = lexicographic_min(n, rows, &allowed, row_to_col);
    let mut assignment = MatchAssignment::default();
    let mut pred_matched = vec![false; cols];
    for (i, &j) in row_to_col.iter().enumerate().take(rows) {
        if j < cols {
            assignment.pairs.push((i, j));
            pred_matched[j] = true;
        } else {
            assignment.unmatched_gt.push(i);
        }
    }
    assignment.unmatched_pred = (0..cols).filter(|&j| !pred_matched[j]).collect();
    assignment
}

struct Solution<T> {
    row_to_col: Vec<usize>,
    row_dual: Vec<T>,
    col_dual: Vec<T>,
}

/// Minimum-cost perfect matching on an `n x n` matrix, `None` marking a
/// forbidden edge. The allowed edges must admit a perfect matching.
///
/// Keeps duals with `cost(i, j) >= row_dual[i] + col_dual[j]` on every
/// allowed edge, with equality on the returned matching.
fn min_cost_assignment<T: Scalar>(n: usize, cost: impl Fn(usize, usize) -> Option<T>) -> Solution<T> {
    // 1-based, index 0 is the virtual source column.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut min_slack: Vec<Option<T>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                if let Some(c) = cost(i0 - 1, j - 1) {
                    let slack = c - u[i0].clone() - v[j].clone();
                    if min_slack[j].as_ref().is_none_or(|m| slack < *m) {
                        min_slack[j] = Some(slack);
                        way[j] = j0;
                    }
                }
                if let Some(m) = &min_slack[j] {
                    if delta.as_ref().is_none_or(|d| m < d) {
                        delta = Some(m.clone());
                        j1 = j;
                    }
                }
            }
            let delta = delta.expect("allowed edges admit a perfect matching");
            for j in 0..=n {
                if used[j] {
                    let owner = col_owner[j];
                    u[owner] = u[owner].clone() + delta.clone();
                    v[j] = v[j].clone() - delta.clone();
                } else if let Some(m) = min_slack[j].as_mut() {
                    *m = m.clone() - delta.clone();
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    u.remove(0);
    v.remove(0);
    Solution {
        row_to_col,
        row_dual: u,
        col_dual: v,
    }
}

/// Rewrites a perfect matching of the `allowed` graph into the one whose
/// rows `0..real_rows` take the smallest possible columns, row by row.
fn lexicographic_min(n: usize, real_rows: usize, allowed: &[bool], mut row_to_col: Vec<usize>) -> Vec<usize> {
    let mut col_to_row = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut fixed = vec![false; n];
    for i in 0..real_rows {
        for j in 0..n {
            if row_to_col[i] == j {
                break;
            }
            if !allowed[i * n + j] || fixed[col_to_row[j]] {
                continue;
            }
            if reroute(n, allowed, &fixed, &mut row_to_col, &mut col_to_row, i, j) {
                break;
            }
        }
        fixed[i] = true;
    }
    row_to_col
}

/// Tries to give column `j` to row `i`: the current owner of `j` must reach
/// `i`'s column through an alternating path of allowed edges that avoids
/// fixed rows. Applies the exchange and returns `true` on success.
fn reroute(
    n: usize,
    allowed: &[bool],
    fixed: &[bool],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
    i: usize,
    j: usize,
) -> bool {
    let start = col_to_row[j];
    let target = row_to_col[i];
    // came_from[c] = row that takes column c if the path goes through c.
    let mut came_from: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::from([start]);
    visited[start] = true;
    visited[i] = true;

    while let Some(row) = queue.pop_front() {
        for c in 0..n {
            if c == j || c == row_to_col[row] || came_from[c].is_some() || !allowed[row * n + c] {
                continue;
            }
            came_from[c] = Some(row);
            if c == target {
                let mut col = target;
                loop {
                    let taker = came_from[col].expect("path is connected");
                    let released = row_to_col[taker];
                    row_to_col[taker] = col;
                    col_to_row[col] = taker;
                    if taker == start {
                        break;
                    }
                    col = released;
                }
                row_to_col[i] = j;
                col_to_row[j] = i;
                return true;
            }
            let next = col_to_row[c];
            if !fixed[next] && !visited[next] {
                visited[next] = true;
                queue.push_back(next);
            }
        }
    }
    false
}
