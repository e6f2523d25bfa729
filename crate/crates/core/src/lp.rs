//! Dense simplex solver for the convex-hull feasibility problem.
//!
//! Minimizes the L1 misfit `sum |P lambda - p|` over convex weights `lambda`,
//! i.e. the L1 distance from `p` to the convex hull of the columns of `P`.
//! Bland's rule keeps the pivoting finite on degenerate clouds.

const PIVOT_EPS: f64 = 1e-12;

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    costs: Vec<f64>,
}

impl Tableau {
    fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, &r)| self.costs[b] * r)
            .sum()
    }

    fn reduced_cost(&self, col: usize) -> f64 {
        let z: f64 = self
            .basis
            .iter()
            .zip(&self.rows)
            .map(|(&b, row)| self.costs[b] * row[col])
            .sum();
        self.costs[col] - z
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let f = self.rows[r][col];
            if f == 0.0 {
                continue;
            }
            for (v, pv) in self.rows[r].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.rhs[r] -= f * pivot_rhs;
        }
        self.basis[row] = col;
    }

    fn solve(&mut self, max_iter: usize) -> f64 {
        let n_cols = self.costs.len();
        for _ in 0..max_iter {
            let entering = (0..n_cols)
                .filter(|c| !self.basis.contains(c))
                .find(|&c| self.reduced_cost(c) < -PIVOT_EPS);
            let Some(col) = entering else {
                break;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[r] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - PIVOT_EPS
                                || (ratio <= best + PIVOT_EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            // Unbounded cannot happen: the objective is bounded below by zero.
            let Some((row, _)) = leave else {
                break;
            };
            self.pivot(row, col);
        }
        self.objective().max(0.0)
    }
}

/// L1 distance from `target` to the convex hull of `points` (all of dimension `D`).
pub(crate) fn l1_distance_to_hull<const D: usize>(points: &[[f64; D]], target: [f64; D]) -> f64 {
    assert!(!points.is_empty());
    let n = points.len();
    // columns: lambda_0..lambda_{n-1}, s+_0..s+_{D-1}, s-_0..s-_{D-1}
    let n_cols = n + 2 * D;
    let mut rows = Vec::with_capacity(D + 1);
    let mut rhs = Vec::with_capacity(D + 1);
    let mut basis = Vec::with_capacity(D + 1);
    let p0 = points[0];
    for r in 0..D {
        let mut row = vec![0.0; n_cols];
        for (i, q) in points.iter().enumerate() {
            row[i] = q[r] - p0[r];
        }
        row[n + r] = 1.0;
        row[n + D + r] = -1.0;
        let mut b = target[r] - p0[r];
        if b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            b = -b;
            basis.push(n + D + r);
        } else {
            basis.push(n + r);
        }
        rows.push(row);
        rhs.push(b);
    }
    let mut convexity = vec![0.0; n_cols];
    convexity[..n].fill(1.0);
    rows.push(convexity);
    rhs.push(1.0);
    basis.push(0);

    let mut costs = vec![0.0; n_cols];
    costs[n..].fill(1.0);

    let mut tableau = Tableau {
        rows,
        rhs,
        basis,
        costs,
    };
    tableau.solve(50 * n_cols + 100)
}
