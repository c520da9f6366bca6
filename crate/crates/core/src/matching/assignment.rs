//! Rectangular linear assignment.
//!
//! The matrix is padded to square with zero-cost dummy rows or columns and
//! solved with the shortest-augmenting-path Hungarian method, which also
//! yields optimal dual potentials. Every optimal assignment uses only tight
//! edges (zero reduced cost) under those potentials, so the
//! lexicographically smallest optimum is found by a greedy pass over the
//! tight-edge graph that re-routes the current perfect matching along
//! alternating paths.

use std::collections::VecDeque;

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
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

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn total(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(i, j)| self.get(i, j)).sum()
    }
}

struct Square {
    n: usize,
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
}

impl Square {
    fn pad(m: &CostMatrix) -> Self {
        let n = m.rows.max(m.cols);
        let mut cost = vec![0.0; n * n];
        for i in 0..m.rows {
            cost[i * n..i * n + m.cols].copy_from_slice(&m.data[i * m.cols..(i + 1) * m.cols]);
        }
        Self {
            n,
            rows: m.rows,
            cols: m.cols,
            cost,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }
}

/// Returns `(row_to_col, u, v)` with `cost[i][j] - u[i] - v[j] >= 0` and
/// equality on the matching.
fn hungarian(sq: &Square) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = sq.n;
    // 1-based with a virtual column 0, as in the classical formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = sq.at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Greedy lexicographic refinement over the tight-edge graph.
fn lexicographic(sq: &Square, mut row_to_col: Vec<usize>, u: &[f64], v: &[f64]) -> Vec<usize> {
    let n = sq.n;
    let scale = sq.cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-12 * scale * n as f64;
    let tight = |i: usize, j: usize| sq.at(i, j) - u[i] - v[j] <= tol;

    let mut col_to_row = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut row_fixed = vec![false; n];
    let mut col_fixed = vec![false; n];

    for i in 0..sq.rows {
        // Real columns first, ascending. Dummy columns mean "unmatched",
        // which ranks after every real column.
        let current = row_to_col[i];
        let mut chosen = current;
        for j in 0..n {
            if col_fixed[j] || !tight(i, j) {
                continue;
            }
            if j >= sq.cols && current >= sq.cols {
                break;
            }
            if current == j
                || reroute(
                    i,
                    j,
                    &mut row_to_col,
                    &mut col_to_row,
                    &row_fixed,
                    &col_fixed,
                    &tight,
                )
            {
                chosen = j;
                break;
            }
        }
        row_fixed[i] = true;
        col_fixed[chosen] = true;
    }
    row_to_col
}

/// Moves row `i` onto column `j` by finding an alternating path from the
/// row currently holding `j` to the column `i` releases.
fn reroute(
    i: usize,
    j: usize,
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
    row_fixed: &[bool],
    col_fixed: &[bool],
    tight: &impl Fn(usize, usize) -> bool,
) -> bool {
    let n = row_to_col.len();
    let released = row_to_col[i];
    let displaced = col_to_row[j];
    // BFS over rows; parent_col[c] = row that reached column c.
    let mut parent_col = vec![usize::MAX; n];
    let mut queue = VecDeque::from([displaced]);
    let mut seen_row = vec![false; n];
    seen_row[displaced] = true;
    let mut found = false;
    'search: while let Some(r) = queue.pop_front() {
        for c in 0..n {
            if c == j || col_fixed[c] || parent_col[c] != usize::MAX || !tight(r, c) {
                continue;
            }
            if c == row_to_col[r] {
                continue;
            }
            parent_col[c] = r;
            if c == released {
                found = true;
                break 'search;
            }
            let next = col_to_row[c];
            if next != i && !row_fixed[next] && !seen_row[next] {
                seen_row[next] = true;
                queue.push_back(next);
            }
        }
    }
    if !found {
        return false;
    }
    // Flip the path back from the released column.
    let mut c = released;
    loop {
        let r = parent_col[c];
        let prev = row_to_col[r];
        row_to_col[r] = c;
        col_to_row[c] = r;
        if r == displaced {
            break;
        }
        c = prev;
    }
    row_to_col[i] = j;
    col_to_row[j] = i;
    true
}

/// Minimum-cost rectangular assignment.
///
/// Returns `min(rows, cols)` pairs `(row, col)` sorted by row, each row and
/// column used at most once. Among equal-cost optima the lexicographically
/// smallest sorted pair list is returned.
pub fn solve_assignment(cost: &CostMatrix) -> Vec<(usize, usize)> {
    if cost.rows == 0 || cost.cols == 0 {
        return Vec::new();
    }
    let sq = Square::pad(cost);
    let (first, u, v) = hungarian(&sq);
    let refined = lexicographic(&sq, first.clone(), &u, &v);

    let pairs = |assign: &[usize]| -> Vec<(usize, usize)> {
        (0..sq.rows)
            .filter(|&i| assign[i] < sq.cols)
            .map(|i| (i, assign[i]))
            .collect()
    };
    let base = pairs(&first);
    let lex = pairs(&refined);
    // Tolerance-based tightness can in principle admit a marginally worse
    // edge; never return something costlier than the solver's own optimum.
    if cost.total(&lex) <= cost.total(&base) + 1e-12 * (1.0 + cost.total(&base).abs()) {
        lex
    } else {
        base
    }
}
