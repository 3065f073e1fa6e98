use super::dd::cone_generators;
use super::linalg::{dot, norm, normalized, scale};
use super::lp::lp_solve_raw;
use super::minnorm::min_norm_point;
use super::{check_dim, BoxRegion, GeometryError, Halfspace};

#[derive(Clone, Debug, PartialEq)]
enum ConeTest {
    Full,
    /// `row . s <= 0` for every (unit) row.
    Rows(Vec<Vec<f64>>),
    /// `<s, axis> + ratio |s| <= 0`.
    Circular { axis: Vec<f64>, ratio: f64 },
}

/// Finitely generated convex cone, or the whole space.
#[derive(Clone, Debug, PartialEq)]
pub struct Cone {
    dim: usize,
    generators: Vec<Vec<f64>>,
    full_space: bool,
    test: ConeTest,
}

impl Cone {
    pub fn full(dim: usize) -> Self {
        Cone {
            dim,
            generators: Vec::new(),
            full_space: true,
            test: ConeTest::Full,
        }
    }

    pub fn zero(dim: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            rows.push(e.clone());
            e[i] = -1.0;
            rows.push(e);
        }
        Cone {
            dim,
            generators: Vec::new(),
            full_space: false,
            test: ConeTest::Rows(rows),
        }
    }

    /// The polar cone `{s : row . s <= 0}`; generators come from the double
    /// description method (lineality vectors appear with both signs).
    pub fn from_rows(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .filter(|r| norm(r) > 1e-12)
            .filter_map(|r| normalized(r))
            .collect();
        let g = cone_generators(dim, &rows);
        let mut generators = g.rays;
        for l in g.lineality {
            generators.push(scale(&l, -1.0));
            generators.push(l);
        }
        Cone {
            dim,
            generators,
            full_space: false,
            test: ConeTest::Rows(rows),
        }
    }

    pub(crate) fn circular(dim: usize, generators: Vec<Vec<f64>>, axis: Vec<f64>, ratio: f64) -> Self {
        Cone {
            dim,
            generators,
            full_space: false,
            test: ConeTest::Circular { axis, ratio },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Unit generators; meaningless when [`is_full_space`](Self::is_full_space).
    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn is_full_space(&self) -> bool {
        self.full_space
    }

    pub fn contains(&self, s: &[f64], tol: f64) -> bool {
        match &self.test {
            ConeTest::Full => true,
            ConeTest::Rows(rows) => rows.iter().all(|r| dot(r, s) <= tol),
            ConeTest::Circular { axis, ratio } => dot(axis, s) + ratio * norm(s) <= tol,
        }
    }

    pub fn has_nonzero(&self) -> bool {
        self.full_space || !self.generators.is_empty()
    }

    /// A generator `g` with `-g` also in the cone, if any.
    pub fn lineality_witness(&self, tol: f64) -> Option<Vec<f64>> {
        if self.full_space {
            let mut e = vec![0.0; self.dim];
            e[0] = 1.0;
            return Some(e);
        }
        self.generators
            .iter()
            .find(|g| self.contains(&scale(g, -1.0), tol))
            .cloned()
    }

    /// `{s in cone : <a, s> = level}` for a pointed cone whose generators all
    /// have `<a, g> > 0`; the slice is the hull of the scaled generators. The
    /// full space is sliced inside the box `[-1, 1]^n`.
    pub fn slice(&self, a: &[f64], level: f64) -> Result<CompactConvexSet, GeometryError> {
        check_dim(self.dim, a.len())?;
        if self.full_space {
            let region = super::ConvexRegion::h_polytope(
                self.dim,
                vec![
                    Halfspace::closed(a.to_vec(), level),
                    Halfspace::closed(scale(a, -1.0), -level),
                ],
                Some(&BoxRegion::closed(vec![-1.0; self.dim], vec![1.0; self.dim])),
            )?;
            let v = region.closure_vertices();
            if v.is_empty() {
                return Err(GeometryError::EmptyRegion);
            }
            return CompactConvexSet::hull(self.dim, v);
        }
        let mut pts = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            let ag = dot(a, g);
            if ag <= 1e-12 {
                return Err(GeometryError::Unbounded);
            }
            pts.push(scale(g, level / ag));
        }
        if pts.is_empty() {
            return Err(GeometryError::EmptyRegion);
        }
        CompactConvexSet::hull(self.dim, pts)
    }
}

/// Convex hull of finitely many generators, or the closed unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactConvexSet {
    dim: usize,
    generators: Vec<Vec<f64>>,
    unit_ball: bool,
}

impl CompactConvexSet {
    pub fn unit_ball(dim: usize) -> Self {
        CompactConvexSet {
            dim,
            generators: Vec::new(),
            unit_ball: true,
        }
    }

    pub fn hull(dim: usize, generators: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        if generators.is_empty() {
            return Err(GeometryError::EmptyRegion);
        }
        for g in &generators {
            check_dim(dim, g.len())?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
        }
        Ok(CompactConvexSet {
            dim,
            generators,
            unit_ball: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_unit_ball(&self) -> bool {
        self.unit_ball
    }

    /// Hull generators (empty for the unit ball).
    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    /// Points whose hull is used in linear programs. For the unit ball these
    /// are `+-e_i`: the cross-polytope sits inside the ball and contains the
    /// origin, which is all the variational checks need.
    pub fn lp_vertices(&self) -> Vec<Vec<f64>> {
        if !self.unit_ball {
            return self.generators.clone();
        }
        let mut out = Vec::with_capacity(2 * self.dim);
        for i in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[i] = 1.0;
            out.push(e.clone());
            e[i] = -1.0;
            out.push(e);
        }
        out
    }

    pub fn scaled(&self, lambda: f64) -> CompactConvexSet {
        if self.unit_ball {
            return self.clone();
        }
        CompactConvexSet {
            dim: self.dim,
            generators: self.generators.iter().map(|g| scale(g, lambda)).collect(),
            unit_ball: false,
        }
    }

    pub fn max_norm(&self) -> f64 {
        if self.unit_ball {
            1.0
        } else {
            self.generators.iter().map(|g| norm(g)).fold(0.0, f64::max)
        }
    }

    pub fn support(&self, d: &[f64]) -> f64 {
        if self.unit_ball {
            norm(d)
        } else {
            self.generators
                .iter()
                .map(|g| dot(g, d))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }

    pub fn min_norm_point(&self) -> Vec<f64> {
        if self.unit_ball {
            vec![0.0; self.dim]
        } else {
            min_norm_point(&self.generators).0
        }
    }

    /// Hull membership decided by an LP on convex weights: the smallest
    /// uniform deviation `max_i |(sum l_j g_j - s)_i|` must be `<= tol`.
    pub fn contains(&self, s: &[f64], tol: f64) -> Result<bool, GeometryError> {
        check_dim(self.dim, s.len())?;
        if self.unit_ball {
            return Ok(norm(s) <= 1.0 + tol);
        }
        let k = self.generators.len();
        let n = self.dim;
        // variables: weights (k) then deviation t
        let mut cons = Vec::with_capacity(2 * n + 2);
        for i in 0..n {
            let mut row: Vec<f64> = self.generators.iter().map(|g| g[i]).collect();
            row.push(-1.0);
            cons.push(Halfspace::closed(row.clone(), s[i]));
            let neg: Vec<f64> = row[..k].iter().map(|v| -v).chain([-1.0]).collect();
            cons.push(Halfspace::closed(neg, -s[i]));
        }
        let mut ones = vec![1.0; k];
        ones.push(0.0);
        cons.push(Halfspace::closed(ones.clone(), 1.0));
        cons.push(Halfspace::closed(scale(&ones, -1.0), -1.0));
        let big = s.iter().map(|v| v.abs()).fold(0.0, f64::max) + self.max_norm() + 1.0;
        let mut lo = vec![0.0; k + 1];
        let mut hi = vec![1.0; k + 1];
        lo[k] = 0.0;
        hi[k] = big;
        let mut obj = vec![0.0; k + 1];
        obj[k] = 1.0;
        let (t, _) = lp_solve_raw(&obj, &cons, &BoxRegion::closed(lo, hi)).map_err(GeometryError::from)?;
        Ok(t <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_of_orthant_is_negative_orthant() {
        let c = Cone::from_rows(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(c.generators().len(), 2);
        assert!(c.contains(&[-1.0, -2.0], 0.0));
        assert!(!c.contains(&[1.0, -2.0], 1e-9));
        assert!(c.lineality_witness(1e-9).is_none());
    }

    #[test]
    fn halfplane_polar_has_lineality() {
        let c = Cone::from_rows(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert!(c.lineality_witness(1e-9).is_some());
    }

    #[test]
    fn slice_of_ray() {
        let c = Cone::from_rows(1, vec![vec![1.0]]);
        let s = c.slice(&[-0.5], 0.1).unwrap();
        assert!((s.generators()[0][0] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn hull_membership() {
        let h = CompactConvexSet::hull(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(h.contains(&[0.5, 0.5], 1e-9).unwrap());
        assert!(!h.contains(&[0.0, 0.0], 1e-9).unwrap());
        let m = h.min_norm_point();
        assert!((m[0] - 0.5).abs() < 1e-12);
        assert!(CompactConvexSet::unit_ball(3).contains(&[0.0; 3], 0.0).unwrap());
    }
}
