//! Non-ordered preference maps `P(x, y) = {z : z strictly preferred at (x, y)}`
//! and sampled mid-point continuity verdicts.

mod continuity;
mod utility;

pub use utility::FIT_TOLERANCE;


use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::geometry::{BoxRegion, ConvexRegion, GeometryError, Halfspace};

pub use continuity::{
    check_lower_midpoint, check_midpoint, check_upper_midpoint, classify_sufficient_conditions,
    is_open_in_domain, ClassificationReport, Implication, MidpointKind, MidpointParams,
    MidpointStatus, MidpointVerdict, MidpointWitness, OpennessProbe, LscProbe, LscCounterexample,
    MidpointCounterexample,
};

/// Quasiconcavity spot checks use this many grid points per axis.
const CONVEXITY_GRID: usize = 9;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PreferenceError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("rival profile required (rival dimension {0})")]
    MissingRival(usize),
    #[error("strict upper contour set not convex: at {x:?}, {z1:?} and {z2:?} are preferred but their midpoint is not")]
    ConvexityViolation { x: Vec<f64>, z1: Vec<f64>, z2: Vec<f64> },
    #[error("invalid piecewise table: {0}")]
    InvalidTable(String),
    #[error("unknown fixture '{0}'")]
    UnknownFixture(String),
    #[error("utility expression uses x{used} but the profile has {available} coordinates")]
    ExpressionArity { used: usize, available: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { slope: 0.0, intercept: c }
    }

    pub fn identity() -> Self {
        Affine { slope: 1.0, intercept: 0.0 }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PieceValue {
    Empty,
    Interval {
        lo: Affine,
        hi: Affine,
        #[serde(default)]
        lo_open: bool,
        #[serde(default)]
        hi_open: bool,
    },
}

/// One row of a 1-D table: for `x` in the row's range, `P(x)` is `value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewisePiece {
    pub from: f64,
    pub to: f64,
    #[serde(default)]
    pub from_open: bool,
    #[serde(default)]
    pub to_open: bool,
    pub value: PieceValue,
}

impl PiecewisePiece {
    fn covers(&self, x: f64) -> bool {
        let lo = if self.from_open { x > self.from } else { x >= self.from };
        let hi = if self.to_open { x < self.to } else { x <= self.to };
        lo && hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseTable {
    pub pieces: Vec<PiecewisePiece>,
}

impl PiecewiseTable {
    fn value_at(&self, x: f64) -> Option<ConvexRegion> {
        let piece = self.pieces.iter().find(|p| p.covers(x))?;
        Some(match &piece.value {
            PieceValue::Empty => ConvexRegion::empty(1),
            PieceValue::Interval { lo, hi, lo_open, hi_open } => {
                ConvexRegion::interval(lo.at(x), hi.at(x), *lo_open, *hi_open)
                    .unwrap_or(ConvexRegion::empty(1))
            }
        })
    }
}

/// Piece of a concave piecewise-linear utility
/// `u(z, y) = min_k (own_k . z + rival_k . y + constant_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearPiece {
    pub own: Vec<f64>,
    #[serde(default)]
    pub rival: Vec<f64>,
    pub constant: f64,
}

impl LinearPiece {
    fn value(&self, own: &[f64], rival: &[f64]) -> f64 {
        let a: f64 = self.own.iter().zip(own).map(|(c, v)| c * v).sum();
        let b: f64 = self.rival.iter().zip(rival).map(|(c, v)| c * v).sum();
        a + b + self.constant
    }
}

pub(crate) type UtilityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub(crate) type RegionFn = Arc<dyn Fn(&[f64], &[f64]) -> ConvexRegion + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Source {
    Empty,
    Piecewise(PiecewiseTable),
    /// Utility over the full profile; `expr` kept for export.
    Utility { func: UtilityFn, expr: Option<Expr> },
    ConcavePl(Vec<LinearPiece>),
    Custom(RegionFn),
}

/// How a map was specified; used by exports and reports.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceKind {
    Empty,
    Piecewise(PiecewiseTable),
    Utility(Option<String>),
    ConcavePiecewiseLinear(Vec<LinearPiece>),
    Custom,
}

/// Preference map `P : X x Y => X` with a box domain for the own strategy
/// and an optional box for the rivals' joint strategy.
#[derive(Clone)]
pub struct PreferenceMap {
    own_dim: usize,
    rival_dim: usize,
    own_offset: usize,
    domain: BoxRegion,
    rival_domain: Option<BoxRegion>,
    source: Source,
    fixture: Option<String>,
}

impl fmt::Debug for PreferenceMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreferenceMap")
            .field("own_dim", &self.own_dim)
            .field("rival_dim", &self.rival_dim)
            .field("own_offset", &self.own_offset)
            .field("domain", &self.domain)
            .field("source", &self.source_kind())
            .finish()
    }
}

impl PreferenceMap {
    fn base(domain: BoxRegion, own_offset: usize, rival_domain: Option<BoxRegion>, source: Source) -> Self {
        PreferenceMap {
            own_dim: domain.dim(),
            rival_dim: rival_domain.as_ref().map_or(0, BoxRegion::dim),
            own_offset,
            domain: domain.closure(),
            rival_domain: rival_domain.map(|b| b.closure()),
            source,
            fixture: None,
        }
    }

    /// `P(x) = {}` everywhere.
    pub fn empty(domain: BoxRegion) -> Self {
        Self::base(domain, 0, None, Source::Empty)
    }

    /// Empty map inside a game.
    pub fn empty_in_game(domain: BoxRegion, own_offset: usize, rival_domain: Option<BoxRegion>) -> Self {
        Self::base(domain, own_offset, rival_domain, Source::Empty)
    }

    /// One-dimensional map given by a table of pieces covering the domain.
    pub fn piecewise(table: PiecewiseTable, domain: BoxRegion) -> Result<Self, PreferenceError> {
        if domain.dim() != 1 {
            return Err(PreferenceError::DimensionMismatch {
                expected: 1,
                found: domain.dim(),
            });
        }
        for p in &table.pieces {
            let nums = [p.from, p.to];
            if nums.iter().any(|v| !v.is_finite()) || p.from > p.to {
                return Err(PreferenceError::InvalidTable(format!(
                    "bad range [{}, {}]",
                    p.from, p.to
                )));
            }
            if let PieceValue::Interval { lo, hi, .. } = &p.value {
                if [lo.slope, lo.intercept, hi.slope, hi.intercept]
                    .iter()
                    .any(|v| !v.is_finite())
                {
                    return Err(PreferenceError::InvalidTable("non-finite coefficient".into()));
                }
            }
        }
        let (a, b) = (domain.lo[0], domain.hi[0]);
        for x in crate::geometry::linalg::linspace(a, b, 1001) {
            if !table.pieces.iter().any(|p| p.covers(x)) {
                return Err(PreferenceError::InvalidTable(format!("no piece covers x = {x}")));
            }
        }
        Ok(Self::base(domain, 0, None, Source::Piecewise(table)))
    }

    /// Strict upper contour sets of a single-agent utility on `domain`.
    /// Quasiconcavity is spot-checked on grid triples.
    pub fn from_utility<F>(u: F, domain: BoxRegion) -> Result<Self, PreferenceError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let map = Self::base(
            domain,
            0,
            None,
            Source::Utility {
                func: Arc::new(u),
                expr: None,
            },
        );
        map.spot_check_convexity()?;
        Ok(map)
    }

    /// Utility given by an expression over the full profile; the own block
    /// starts at `own_offset` and rivals fill the remaining coordinates in
    /// order.
    pub fn from_utility_expr(
        expr: &str,
        domain: BoxRegion,
        own_offset: usize,
        rival_domain: Option<BoxRegion>,
    ) -> Result<Self, PreferenceError> {
        let e = Expr::parse(expr)?;
        let total = domain.dim() + rival_domain.as_ref().map_or(0, BoxRegion::dim);
        if e.arity() > total {
            return Err(PreferenceError::ExpressionArity {
                used: e.arity(),
                available: total,
            });
        }
        let f = e.clone();
        let map = Self::base(
            domain,
            own_offset,
            rival_domain,
            Source::Utility {
                func: Arc::new(move |x: &[f64]| f.eval(x)),
                expr: Some(e),
            },
        );
        map.spot_check_convexity()?;
        Ok(map)
    }

    /// Concave piecewise-linear utility; its strict upper contour sets are
    /// computed exactly as polytopes with strict faces.
    pub fn concave_piecewise_linear(
        pieces: Vec<LinearPiece>,
        domain: BoxRegion,
        own_offset: usize,
        rival_domain: Option<BoxRegion>,
    ) -> Result<Self, PreferenceError> {
        let rd = rival_domain.as_ref().map_or(0, BoxRegion::dim);
        if pieces.is_empty() {
            return Err(PreferenceError::InvalidTable("no linear pieces".into()));
        }
        for p in &pieces {
            if p.own.len() != domain.dim() {
                return Err(PreferenceError::DimensionMismatch {
                    expected: domain.dim(),
                    found: p.own.len(),
                });
            }
            if !p.rival.is_empty() && p.rival.len() != rd {
                return Err(PreferenceError::DimensionMismatch {
                    expected: rd,
                    found: p.rival.len(),
                });
            }
            if p.own.iter().chain(&p.rival).chain([&p.constant]).any(|v| !v.is_finite()) {
                return Err(PreferenceError::Geometry(GeometryError::NonFinite));
            }
        }
        Ok(Self::base(domain, own_offset, rival_domain, Source::ConcavePl(pieces)))
    }

    /// Map given directly by a region-valued closure `(own, rival) -> P`.
    pub fn custom<F>(domain: BoxRegion, own_offset: usize, rival_domain: Option<BoxRegion>, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> ConvexRegion + Send + Sync + 'static,
    {
        Self::base(domain, own_offset, rival_domain, Source::Custom(Arc::new(f)))
    }

    /// Same map placed inside a game at a new offset with a rival domain.
    /// Only meaningful for maps that ignore rivals (tables, single-agent
    /// utilities) or were built for the same layout.
    pub fn embedded(&self, own_offset: usize, rival_domain: Option<BoxRegion>) -> Self {
        let mut m = self.clone();
        if let Source::Utility { func, expr: None } = &self.source {
            // Closure utilities read the own block only.
            let f = func.clone();
            let (off, dim) = (own_offset, self.own_dim);
            m.source = Source::Utility {
                func: Arc::new(move |x: &[f64]| f(&x[off..off + dim])),
                expr: None,
            };
        }
        m.own_offset = own_offset;
        m.rival_dim = rival_domain.as_ref().map_or(0, BoxRegion::dim);
        m.rival_domain = rival_domain;
        m
    }

    pub fn with_fixture_name(mut self, name: &str) -> Self {
        self.fixture = Some(name.to_string());
        self
    }

    pub fn fixture_name(&self) -> Option<&str> {
        self.fixture.as_deref()
    }

    pub fn own_dim(&self) -> usize {
        self.own_dim
    }

    pub fn rival_dim(&self) -> usize {
        self.rival_dim
    }

    pub fn own_offset(&self) -> usize {
        self.own_offset
    }

    pub fn domain(&self) -> &BoxRegion {
        &self.domain
    }

    pub fn rival_domain(&self) -> Option<&BoxRegion> {
        self.rival_domain.as_ref()
    }

    pub fn source_kind(&self) -> SourceKind {
        match &self.source {
            Source::Empty => SourceKind::Empty,
            Source::Piecewise(t) => SourceKind::Piecewise(t.clone()),
            Source::Utility { expr, .. } => SourceKind::Utility(expr.as_ref().map(|e| e.to_string())),
            Source::ConcavePl(p) => SourceKind::ConcavePiecewiseLinear(p.clone()),
            Source::Custom(_) => SourceKind::Custom,
        }
    }

    /// True when the map comes from a utility (expression, closure or
    /// concave piecewise-linear).
    pub fn has_utility(&self) -> bool {
        matches!(self.source, Source::Utility { .. } | Source::ConcavePl(_))
    }

    /// Utility value at `(own, rival)` for utility-backed maps.
    pub fn utility_at(&self, own: &[f64], rival: &[f64]) -> Option<f64> {
        match &self.source {
            Source::Utility { func, .. } => Some(func(&self.profile(own, rival))),
            Source::ConcavePl(pieces) => Some(
                pieces
                    .iter()
                    .map(|p| p.value(own, rival))
                    .fold(f64::INFINITY, f64::min),
            ),
            _ => None,
        }
    }

    /// Full profile with the own block inserted at its offset.
    pub fn profile(&self, own: &[f64], rival: &[f64]) -> Vec<f64> {
        let off = self.own_offset.min(rival.len());
        let mut p = Vec::with_capacity(own.len() + rival.len());
        p.extend_from_slice(&rival[..off]);
        p.extend_from_slice(own);
        p.extend_from_slice(&rival[off..]);
        p
    }

    /// `P(x, y)`.
    pub fn eval(&self, x: &[f64], y: Option<&[f64]>) -> Result<ConvexRegion, PreferenceError> {
        if x.len() != self.own_dim {
            return Err(PreferenceError::DimensionMismatch {
                expected: self.own_dim,
                found: x.len(),
            });
        }
        let rival: &[f64] = match (self.rival_dim, y) {
            (0, _) => &[],
            (n, None) => return Err(PreferenceError::MissingRival(n)),
            (n, Some(y)) => {
                if y.len() != n {
                    return Err(PreferenceError::DimensionMismatch {
                        expected: n,
                        found: y.len(),
                    });
                }
                y
            }
        };
        if x.iter().chain(rival).any(|v| !v.is_finite()) {
            return Err(PreferenceError::Geometry(GeometryError::NonFinite));
        }
        if !self.domain.contains(x, 1e-12) {
            return Err(PreferenceError::OutOfDomain { point: x.to_vec() });
        }
        if let Some(rd) = &self.rival_domain {
            if !rd.contains(rival, 1e-12) {
                return Err(PreferenceError::OutOfDomain { point: rival.to_vec() });
            }
        }
        Ok(self.eval_unchecked(x, rival))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], rival: &[f64]) -> ConvexRegion {
        match &self.source {
            Source::Empty => ConvexRegion::empty(self.own_dim),
            Source::Piecewise(t) => t.value_at(x[0]).unwrap_or(ConvexRegion::empty(1)),
            Source::Utility { func, .. } => {
                let level = func(&self.profile(x, rival));
                let g = |z: &[f64]| func(&self.profile(z, rival));
                utility::strict_upper_set(&g, &self.domain, level, Some(x))
            }
            Source::ConcavePl(pieces) => {
                let level = pieces
                    .iter()
                    .map(|p| p.value(x, rival))
                    .fold(f64::INFINITY, f64::min);
                let hs: Vec<Halfspace> = pieces
                    .iter()
                    .map(|p| {
                        let shift = p.value(&vec![0.0; self.own_dim], rival);
                        // own . z + shift > level
                        Halfspace::strict(p.own.iter().map(|v| -v).collect(), shift - level)
                    })
                    .collect();
                ConvexRegion::h_polytope(self.own_dim, hs, Some(&self.domain))
                    .unwrap_or(ConvexRegion::empty(self.own_dim))
            }
            Source::Custom(f) => f(x, rival),
        }
    }

    /// Rival grid points used by spot checks (a single empty profile for
    /// single-agent maps).
    pub(crate) fn rival_samples(&self, k: usize) -> Vec<Vec<f64>> {
        match &self.rival_domain {
            None => vec![Vec::new()],
            Some(rd) => rd.grid(k),
        }
    }

    fn spot_check_convexity(&self) -> Result<(), PreferenceError> {
        let Source::Utility { func, .. } = &self.source else {
            return Ok(());
        };
        let k = if self.own_dim == 1 { CONVEXITY_GRID } else { 5 };
        let grid = self.domain.grid(k);
        for rival in self.rival_samples(3) {
            let vals: Vec<f64> = grid.iter().map(|z| func(&self.profile(z, &rival))).collect();
            for (xi, x) in grid.iter().enumerate() {
                let level = vals[xi];
                for i in 0..grid.len() {
                    if vals[i] <= level {
                        continue;
                    }
                    for j in i + 1..grid.len() {
                        if vals[j] <= level {
                            continue;
                        }
                        let mid: Vec<f64> = grid[i].iter().zip(&grid[j]).map(|(a, b)| 0.5 * (a + b)).collect();
                        if func(&self.profile(&mid, &rival)) <= level {
                            return Err(PreferenceError::ConvexityViolation {
                                x: x.clone(),
                                z1: grid[i].clone(),
                                z2: grid[j].clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Utility of the single-peaked example: `x` below one half, `2 - x` from
/// one half on.
pub fn example_31_utility(x: &[f64]) -> f64 {
    if x[0] < 0.5 {
        x[0]
    } else {
        2.0 - x[0]
    }
}

/// Names accepted by [`fixture`].
pub const FIXTURES: [&str; 2] = ["example-3.1", "example-3.2"];

/// Built-in preference maps on `[0, 1]`.
pub fn fixture(name: &str) -> Result<PreferenceMap, PreferenceError> {
    let domain = BoxRegion::unit(1);
    let rising = |from: f64, to: f64, from_open: bool, to_open: bool| PiecewisePiece {
        from,
        to,
        from_open,
        to_open,
        // (x, 1]
        value: PieceValue::Interval {
            lo: Affine::identity(),
            hi: Affine::constant(1.0),
            lo_open: true,
            hi_open: false,
        },
    };
    let table = match name {
        "example-3.1" => PiecewiseTable {
            pieces: vec![
                rising(0.0, 0.5, false, true),
                PiecewisePiece {
                    from: 0.5,
                    to: 0.5,
                    from_open: false,
                    to_open: false,
                    value: PieceValue::Empty,
                },
                PiecewisePiece {
                    from: 0.5,
                    to: 1.0,
                    from_open: true,
                    to_open: false,
                    // [1/2, x)
                    value: PieceValue::Interval {
                        lo: Affine::constant(0.5),
                        hi: Affine::identity(),
                        lo_open: false,
                        hi_open: true,
                    },
                },
            ],
        },
        "example-3.2" => PiecewiseTable {
            pieces: vec![
                rising(0.0, 0.5, false, false),
                PiecewisePiece {
                    from: 0.5,
                    to: 1.0,
                    from_open: true,
                    to_open: false,
                    value: PieceValue::Interval {
                        lo: Affine::constant(0.5),
                        hi: Affine::constant(0.75),
                        lo_open: false,
                        hi_open: false,
                    },
                },
            ],
        },
        other => return Err(PreferenceError::UnknownFixture(other.to_string())),
    };
    Ok(PreferenceMap::piecewise(table, domain)?.with_fixture_name(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> ConvexRegion {
        ConvexRegion::interval(lo, hi, lo_open, hi_open).unwrap()
    }

    #[test]
    fn example_tables() {
        let p = fixture("example-3.1").unwrap();
        assert_eq!(p.eval(&[0.25], None).unwrap(), iv(0.25, 1.0, true, false));
        assert!(p.eval(&[0.5], None).unwrap().is_empty());
        assert_eq!(p.eval(&[0.75], None).unwrap(), iv(0.5, 0.75, false, true));
        let q = fixture("example-3.2").unwrap();
        assert_eq!(q.eval(&[0.8], None).unwrap(), iv(0.5, 0.75, false, false));
        assert_eq!(q.eval(&[0.5], None).unwrap(), iv(0.5, 1.0, true, false));
        assert!(p.eval(&[1.5], None).is_err());
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn utility_induced_intervals() {
        let p = PreferenceMap::from_utility(example_31_utility, BoxRegion::unit(1)).unwrap();
        assert_eq!(p.eval(&[0.75], None).unwrap(), iv(0.5, 0.75, false, true));
        assert_eq!(p.eval(&[0.25], None).unwrap(), iv(0.25, 1.0, true, false));
        assert!(p.eval(&[0.5], None).unwrap().is_empty());
        let id = PreferenceMap::from_utility(|x: &[f64]| x[0], BoxRegion::unit(1)).unwrap();
        assert_eq!(id.eval(&[0.4], None).unwrap(), iv(0.4, 1.0, true, false));
        let flat = PreferenceMap::from_utility(|_: &[f64]| 3.0, BoxRegion::unit(1)).unwrap();
        assert!(flat.eval(&[0.3], None).unwrap().is_empty());
    }

    #[test]
    fn non_quasiconcave_utility_is_rejected() {
        let err = PreferenceMap::from_utility(|x: &[f64]| (x[0] - 0.5).abs(), BoxRegion::unit(1)).unwrap_err();
        assert!(matches!(err, PreferenceError::ConvexityViolation { .. }));
    }

    #[test]
    fn game_utility_uses_profile_layout() {
        let rd = Some(BoxRegion::unit(1));
        let p = PreferenceMap::from_utility_expr("-(x2 - x1)^2", BoxRegion::unit(1), 1, rd).unwrap();
        // player two at 0.9 with the rival at 0.3 prefers (0.3 - 0.6, 0.9) ∩ [0, 1]
        let r = p.eval(&[0.9], Some(&[0.3])).unwrap();
        assert!(r.contains(&[0.5], 0.0) && r.contains(&[0.0], 0.0));
        assert!(!r.contains(&[0.9], 0.0) && !r.contains(&[0.95], 0.0));
        assert!(p.eval(&[0.9], None).is_err());
        assert!((p.utility_at(&[0.9], &[0.3]).unwrap() + 0.36).abs() < 1e-12);
    }

    #[test]
    fn concave_pl_region_is_exact() {
        // u = -|z1 - 0.5| - |z2 - 0.5| on the unit square
        let mut pieces = Vec::new();
        for s1 in [-1.0, 1.0] {
            for s2 in [-1.0, 1.0] {
                pieces.push(LinearPiece {
                    own: vec![s1, s2],
                    rival: vec![],
                    constant: -0.5 * (s1 + s2),
                });
            }
        }
        let p = PreferenceMap::concave_piecewise_linear(pieces, BoxRegion::unit(2), 0, None).unwrap();
        let r = p.eval(&[0.5, 0.9], None).unwrap();
        assert!(r.contains(&[0.5, 0.5], 0.0));
        assert!(!r.contains(&[0.5, 0.9], 0.0));
        assert!(r.contains(&[0.5, 0.89], 0.0));
        assert!(p.eval(&[0.5, 0.5], None).unwrap().is_empty());
    }
}
