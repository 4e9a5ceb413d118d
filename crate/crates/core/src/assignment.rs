//! Rectangular linear assignment (Hungarian / Kuhn-Munkres with potentials).
//!
//! The solver returns `min(n, m)` row/column pairs optimising the total.
//! Forbidden entries (`-inf` when maximising, `+inf` when minimising, or NaN)
//! are never paired: the solver first maximises the number of allowed pairs
//! and then optimises the total over them, so a row may end up unassigned.
//!
//! Among equally good assignments the lexicographically smallest one is
//! returned, comparing the column chosen for row 0, then row 1, and so on,
//! with "unassigned" ordered after every column.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the original matrix entries over `pairs`.
    pub total: f64,
}

impl Assignment {
    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }
}

struct Square {
    n: usize,
    cost: Vec<f64>,
}

impl Square {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }
}

/// Optimal perfect matching restricted to `rows x cols`.
struct Solution {
    /// Column chosen for each listed row, same order as `rows`.
    row_to_col: Vec<usize>,
    total: f64,
    /// Feasible duals (`cost - u - v >= 0`), indexed like `rows` / `cols`.
    u: Vec<f64>,
    v: Vec<f64>,
}

fn solve_square(sq: &Square, rows: &[usize], cols: &[usize]) -> Solution {
    let k = rows.len();
    debug_assert_eq!(k, cols.len());
    let c = |i: usize, j: usize| sq.at(rows[i - 1], cols[j - 1]);
    let mut u = vec![0.0f64; k + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = c(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; k];
    let mut total = 0.0;
    for j in 1..=k {
        row_to_col[p[j] - 1] = cols[j - 1];
        total += c(p[j], j);
    }
    Solution {
        row_to_col,
        total,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
    }
}

/// Solves the assignment problem on an `n x m` matrix given as rows.
pub fn hungarian(matrix: &[Vec<f64>], objective: Objective) -> Assignment {
    let n = matrix.len();
    let m = matrix.first().map_or(0, Vec::len);
    assert!(matrix.iter().all(|r| r.len() == m), "ragged matrix");
    if n == 0 || m == 0 {
        return Assignment {
            pairs: Vec::new(),
            total: 0.0,
        };
    }
    let forbidden = |v: f64| match objective {
        Objective::Maximize => v.is_nan() || v == f64::NEG_INFINITY,
        Objective::Minimize => v.is_nan() || v == f64::INFINITY,
    };
    let sign = match objective {
        Objective::Minimize => 1.0,
        Objective::Maximize => -1.0,
    };
    let max_abs = matrix
        .iter()
        .flatten()
        .filter(|v| !forbidden(**v))
        .fold(0.0f64, |a, v| {
            assert!(v.is_finite(), "only the forbidden infinity is allowed");
            a.max(v.abs())
        });
    let size = n.max(m);
    // Any assignment using one fewer forbidden pair is strictly cheaper.
    let big = 4.0 * (size as f64) * (max_abs + 1.0);
    let mut cost = vec![0.0; size * size];
    for i in 0..n {
        for j in 0..m {
            let v = matrix[i][j];
            cost[i * size + j] = if forbidden(v) { big } else { sign * v };
        }
    }
    let sq = Square { n: size, cost };
    let all: Vec<usize> = (0..size).collect();
    let first = solve_square(&sq, &all, &all);
    let best = first.total;
    let tol = 1e-9 * (1.0 + big * size as f64);

    // Lexicographic refinement: fix rows in order to the smallest column that
    // still admits an optimal completion. Reduced costs against optimal duals
    // prune columns that cannot be part of any optimal assignment.
    let (u, v) = (first.u, first.v);
    let mut fixed_cost = 0.0;
    let mut free_rows: Vec<usize> = all.clone();
    let mut free_cols: Vec<usize> = all.clone();
    let mut choice = vec![usize::MAX; size];
    let mut current = first.row_to_col;
    for i in 0..n {
        let pos = free_rows
            .iter()
            .position(|&r| r == i)
            .expect("row still free");
        let incumbent = current[pos];
        let mut chosen = incumbent;
        let mut seen_dummy = false;
        for &j in free_cols.iter().filter(|&&j| j < canonical(incumbent, m)) {
            if j >= m {
                if seen_dummy {
                    continue;
                }
                seen_dummy = true;
            }
            if sq.at(i, j) - u[i] - v[j] > tol {
                continue;
            }
            let rows: Vec<usize> = free_rows.iter().copied().filter(|&r| r != i).collect();
            let cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            let rest = solve_square(&sq, &rows, &cols).total;
            if fixed_cost + sq.at(i, j) + rest <= best + tol {
                chosen = j;
                break;
            }
        }
        fixed_cost += sq.at(i, chosen);
        choice[i] = chosen;
        free_rows.remove(pos);
        free_cols.retain(|&c| c != chosen);
        if chosen != incumbent {
            current = solve_square(&sq, &free_rows, &free_cols).row_to_col;
        } else {
            current.remove(pos);
        }
    }

    let mut pairs = Vec::new();
    let mut total = 0.0;
    for (i, &j) in choice.iter().enumerate().take(n) {
        if j < m && !forbidden(matrix[i][j]) {
            pairs.push((i, j));
            total += matrix[i][j];
        }
    }
    Assignment { pairs, total }
}

/// Dummy columns sort after every real column.
fn canonical(j: usize, m: usize) -> usize {
    j.min(m)
}
