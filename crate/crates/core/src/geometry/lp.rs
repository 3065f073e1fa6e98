//! Dense two-phase simplex with Bland's rule.
//!
//! Sized for the desk-scale problems in this crate (a handful of variables,
//! at most a few hundred rows); no sparsity, no scaling, fully deterministic.

use super::{BoxRegion, GeometryError, Halfspace, Point};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;
const TIE_EPS: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub optimum: f64,
    pub argmin: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpFailure {
    Infeasible,
    Unbounded,
    PivotLimit,
}

impl From<LpFailure> for GeometryError {
    fn from(f: LpFailure) -> Self {
        match f {
            LpFailure::Infeasible => GeometryError::Infeasible,
            LpFailure::Unbounded => GeometryError::Unbounded,
            LpFailure::PivotLimit => GeometryError::PivotLimit,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>, // last column is the right-hand side
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&prow) {
                        *v -= f * pv;
                    }
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row (reduced costs, last entry = -value) over
    /// the columns allowed by `allowed`.
    fn run(&mut self, obj: &mut [f64], allowed: &dyn Fn(usize) -> bool) -> Result<(), LpFailure> {
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index improving column.
            let Some(c) = (0..self.ncols).find(|&j| allowed(j) && obj[j] < -PIVOT_EPS) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-13
                                || (ratio <= br + 1e-13 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return Err(LpFailure::Unbounded);
            };
            self.pivot(r, c, obj);
        }
        Err(LpFailure::PivotLimit)
    }
}

/// Minimizes `c . y` subject to `a y <= b`, `y >= 0`.
pub(crate) fn simplex_nonneg(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
) -> Result<(f64, Vec<f64>), LpFailure> {
    let n = c.len();
    let m = a.len();
    let n_art = b.iter().filter(|&&v| v < 0.0).count();
    let ncols = n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + m;
    for i in 0..m {
        let mut row = vec![0.0; ncols + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = sign;
        row[ncols] = sign * b[i];
        if b[i] < 0.0 {
            row[art] = 1.0;
            basis.push(art);
            art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, ncols };

    if n_art > 0 {
        let mut obj = vec![0.0; ncols + 1];
        for j in n + m..ncols {
            obj[j] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] >= n + m {
                let row = t.rows[i].clone();
                for (o, v) in obj.iter_mut().zip(&row) {
                    *o -= v;
                }
            }
        }
        t.run(&mut obj, &|_| true)?;
        if -obj[ncols] > FEAS_EPS * (1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Err(LpFailure::Infeasible);
        }
        // Drive artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= n + m {
                if let Some(c) = (0..n + m).find(|&j| t.rows[i][j].abs() > 1e-9) {
                    t.pivot(i, c, &mut obj);
                }
            }
        }
    }

    let mut obj = vec![0.0; ncols + 1];
    obj[..n].copy_from_slice(c);
    for i in 0..m {
        let bv = t.basis[i];
        if bv < n && c[bv] != 0.0 {
            let f = c[bv];
            let row = t.rows[i].clone();
            for (o, v) in obj.iter_mut().zip(&row) {
                *o -= f * v;
            }
        }
    }
    t.run(&mut obj, &|j| j < n + m)?;
    let mut y = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            y[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    let value = c.iter().zip(&y).map(|(a, b)| a * b).sum();
    Ok((value, y))
}

/// Minimizes `objective . x` over `{x in bounds : h.normal . x <= h.offset}`
/// with box bounds taken as closed. Strictness flags on halfspaces are
/// ignored (the LP works on closures).
pub(crate) fn lp_solve_raw(
    objective: &[f64],
    constraints: &[Halfspace],
    bounds: &BoxRegion,
) -> Result<(f64, Vec<f64>), LpFailure> {
    let n = objective.len();
    let lo = &bounds.lo;
    let mut a = Vec::with_capacity(constraints.len() + n);
    let mut b = Vec::with_capacity(constraints.len() + n);
    for h in constraints {
        a.push(h.normal.clone());
        let shift: f64 = h.normal.iter().zip(lo).map(|(x, l)| x * l).sum();
        b.push(h.offset - shift);
    }
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        a.push(row);
        b.push(bounds.hi[i] - lo[i]);
    }
    let (_, y) = simplex_nonneg(objective, &a, &b)?;
    let x: Vec<f64> = y.iter().zip(lo).map(|(v, l)| v + l).collect();
    let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok((value, x))
}

/// Linear program over a box with lexicographically smallest optimal argmin.
pub fn lp_solve(
    objective: &[f64],
    constraints: &[Halfspace],
    bounds: &BoxRegion,
) -> Result<LpSolution, GeometryError> {
    let n = objective.len();
    if bounds.dim() != n || constraints.iter().any(|h| h.normal.len() != n) {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            found: bounds.dim(),
        });
    }
    if bounds.lo.iter().chain(&bounds.hi).any(|v| !v.is_finite()) {
        return Err(GeometryError::Unbounded);
    }
    let (opt, _) = lp_solve_raw(objective, constraints, bounds)?;

    // Tie-break: fix the optimal face, then minimize coordinates in order.
    let slack = TIE_EPS * (1.0 + opt.abs());
    let mut cons: Vec<Halfspace> = constraints.to_vec();
    cons.push(Halfspace::closed(objective.to_vec(), opt + slack));
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let (vi, xi) = lp_solve_raw(&e, &cons, bounds)?;
        x = xi;
        cons.push(Halfspace::closed(e, vi + TIE_EPS));
    }
    Ok(LpSolution {
        optimum: opt,
        argmin: Point::from_vec_unchecked(x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(n: usize) -> BoxRegion {
        BoxRegion::closed(vec![0.0; n], vec![1.0; n])
    }

    #[test]
    fn minimize_first_coordinate_breaks_ties_lexicographically() {
        let sol = lp_solve(&[1.0, 0.0], &[], &unit_box(2)).unwrap();
        assert!(sol.optimum.abs() < 1e-12);
        assert!(sol.argmin[0].abs() < 1e-9 && sol.argmin[1].abs() < 1e-9);
    }

    #[test]
    fn simplex_corner() {
        let cons = vec![Halfspace::closed(vec![1.0, 1.0], 1.0)];
        let sol = lp_solve(&[-1.0, -1.0], &cons, &unit_box(2)).unwrap();
        assert!((sol.optimum + 1.0).abs() < 1e-9);
        // lexicographically smallest point on the face x1 + x2 = 1
        assert!(sol.argmin[0].abs() < 1e-8 && (sol.argmin[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_is_reported() {
        let cons = vec![Halfspace::closed(vec![1.0], -1.0)];
        assert_eq!(
            lp_solve(&[0.0], &cons, &unit_box(1)),
            Err(GeometryError::Infeasible)
        );
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // x1 + x2 >= 1.5 on the unit square, minimize x1 + 2 x2
        let cons = vec![Halfspace::closed(vec![-1.0, -1.0], -1.5)];
        let sol = lp_solve(&[1.0, 2.0], &cons, &unit_box(2)).unwrap();
        assert!((sol.optimum - 2.0).abs() < 1e-9);
        assert!((sol.argmin[0] - 1.0).abs() < 1e-8 && (sol.argmin[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn shifted_box() {
        let bounds = BoxRegion::closed(vec![-2.0, 3.0], vec![-1.0, 5.0]);
        let sol = lp_solve(&[1.0, -1.0], &[], &bounds).unwrap();
        assert!((sol.optimum - (-2.0 - 5.0)).abs() < 1e-9);
    }
}
