//! Dense primal simplex for small linear programs
//!
//! ```text
//! maximize cᵀx  subject to  A x ≤ b,  x ≥ 0,  with b ≥ 0.
//! ```
//!
//! The origin is feasible, so no phase one is needed. Pivoting uses the
//! largest reduced cost and switches to Bland's rule after a run of
//! degenerate pivots.

use crate::{Error, Result};

const DEGENERATE_RUN: usize = 50;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn constraints(&self) -> usize {
        self.rows.len()
    }

    /// Adds Σ coef·x_index ≤ rhs.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let mut row = vec![0.0; self.variables()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.variables();
        let m = self.rows.len();
        if self.rhs.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return Err(Error::Lp(
                "right-hand sides must be finite and nonnegative".into(),
            ));
        }
        if self.objective.iter().any(|c| !c.is_finite())
            || self.rows.iter().flatten().any(|a| !a.is_finite())
        {
            return Err(Error::Lp("non-finite coefficient".into()));
        }

        // Dictionary: x_basis[i] = rhs[i] − Σ_j a[i][j]·x_nonbasis[j],
        //             z = z0 + Σ_j c[j]·x_nonbasis[j].
        let mut a = self.rows.clone();
        let mut rhs = self.rhs.clone();
        let mut c = self.objective.clone();
        let mut z0 = 0.0;
        let mut nonbasis: Vec<usize> = (0..n).collect();
        let mut basis: Vec<usize> = (n..n + m).collect();

        let cscale = c.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let ascale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        let ctol = 1e-11 * (1.0 + cscale);
        let ptol = 1e-12 * (1.0 + ascale);

        let mut degenerate = 0usize;
        let mut bland = false;
        let mut pivots = 0usize;
        loop {
            let entering = if bland {
                (0..n).filter(|&j| c[j] > ctol).min_by_key(|&j| nonbasis[j])
            } else {
                let mut best: Option<usize> = None;
                for j in 0..n {
                    if c[j] > ctol && best.is_none_or(|b| c[j] > c[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(s) = entering else { break };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if a[i][s] > ptol {
                    let ratio = rhs[i].max(0.0) / a[i][s];
                    let better = match leave {
                        None => true,
                        Some((r, best)) => ratio < best || (ratio == best && basis[i] < basis[r]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Lp("objective is unbounded".into()));
            };

            if ratio <= 0.0 {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }

            pivot(&mut a, &mut rhs, &mut c, &mut z0, r, s);
            std::mem::swap(&mut basis[r], &mut nonbasis[s]);
            pivots += 1;
            if pivots > MAX_PIVOTS {
                return Err(Error::Lp(format!(
                    "no convergence after {MAX_PIVOTS} pivots"
                )));
            }
        }

        let mut x = vec![0.0; n];
        for (i, &b) in basis.iter().enumerate() {
            if b < n {
                x[b] = rhs[i].max(0.0);
            }
        }
        let value = self.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpSolution { x, value, pivots })
    }
}

fn pivot(a: &mut [Vec<f64>], rhs: &mut [f64], c: &mut [f64], z0: &mut f64, r: usize, s: usize) {
    let n = c.len();
    let p = a[r][s];
    for j in 0..n {
        if j != s {
            a[r][j] /= p;
        }
    }
    a[r][s] = 1.0 / p;
    rhs[r] /= p;
    let row_r = a[r].clone();
    let rhs_r = rhs[r];
    for (i, row) in a.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[s];
        if f == 0.0 {
            continue;
        }
        for j in 0..n {
            if j != s {
                row[j] -= f * row_r[j];
            }
        }
        row[s] = -f / p;
        rhs[i] -= f * rhs_r;
    }
    let f = c[s];
    for j in 0..n {
        if j != s {
            c[j] -= f * row_r[j];
        }
    }
    c[s] = -f / p;
    *z0 += f * rhs_r;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(vec![3.0, 5.0]);
        lp.add_sparse(&[(0, 1.0)], 4.0);
        lp.add_sparse(&[(1, 2.0)], 12.0);
        lp.add_sparse(&[(0, 3.0), (1, 2.0)], 18.0);
        let s = lp.solve().unwrap();
        assert!((s.value - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_sparse(&[(0, 1.0), (1, -1.0)], 1.0);
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance (written with b ≥ 0).
        let mut lp = LinearProgram::new(vec![0.75, -150.0, 0.02, -6.0]);
        lp.add_sparse(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0);
        lp.add_sparse(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0);
        lp.add_sparse(&[(2, 1.0)], 1.0);
        let s = lp.solve().unwrap();
        assert!((s.value - 0.05).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_rejected() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_sparse(&[(0, 1.0)], -1.0);
        assert!(lp.solve().is_err());
    }

    proptest! {
        // Box-constrained problems: optimum is Σ max(c_j, 0)·u_j.
        #[test]
        fn box_optimum(c in proptest::collection::vec(-5.0f64..5.0, 1..8), u in proptest::collection::vec(0.1f64..3.0, 8)) {
            let mut lp = LinearProgram::new(c.clone());
            for j in 0..c.len() {
                lp.add_sparse(&[(j, 1.0)], u[j]);
            }
            let s = lp.solve().unwrap();
            let expect: f64 = c.iter().zip(&u).map(|(c, u)| c.max(0.0) * u).sum();
            prop_assert!((s.value - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }

        // Weak duality against random feasible dual points and primal feasibility.
        #[test]
        fn solution_feasible_and_dominates_feasible_points(
            c in proptest::collection::vec(0.0f64..3.0, 3),
            rows in proptest::collection::vec((proptest::collection::vec(0.0f64..2.0, 3), 0.5f64..4.0), 3..7),
            probe in proptest::collection::vec(0.0f64..1.0, 3),
        ) {
            let mut lp = LinearProgram::new(c.clone());
            for (r, b) in &rows {
                lp.add_sparse(&r.iter().copied().enumerate().collect::<Vec<_>>(), *b);
            }
            // Keep the problem bounded.
            for j in 0..3 {
                lp.add_sparse(&[(j, 1.0)], 10.0);
            }
            let s = lp.solve().unwrap();
            for (r, b) in &rows {
                let lhs: f64 = r.iter().zip(&s.x).map(|(a, x)| a * x).sum();
                prop_assert!(lhs <= b + 1e-9);
            }
            // scale the probe into the feasible region
            let mut t: f64 = 10.0;
            for (r, b) in &rows {
                let lhs: f64 = r.iter().zip(&probe).map(|(a, x)| a * x).sum();
                if lhs > 0.0 { t = t.min(b / lhs); }
            }
            let pv: f64 = c.iter().zip(&probe).map(|(c, x)| c * x * t.min(10.0)).sum();
            prop_assert!(s.value >= pv - 1e-9);
        }
    }
}
