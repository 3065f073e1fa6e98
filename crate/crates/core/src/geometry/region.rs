use super::dd::cone_generators;
use super::linalg::{cartesian, dist, dot, linspace, norm, normalized, rank, scale, solve, sphere_directions, sub};
use super::minnorm::min_norm_point;
use super::{check_dim, Cone, GeometryError, Point, MAX_DIM};

const VERTEX_EPS: f64 = 1e-9;
/// Least slack for a point to pass a strict face. Faces produced from
/// level sets pass through the evaluation point, where rounding leaves
/// slack of order 1e-16.
pub const STRICT_MARGIN: f64 = 1e-12;

/// `normal . x <= offset`, or `<` when `strict`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub strict: bool,
}

impl Halfspace {
    pub fn closed(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset, strict: false }
    }

    pub fn strict(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset, strict: true }
    }

    /// Same halfspace with a unit normal; `None` for a zero normal.
    pub fn normalized(&self) -> Option<Halfspace> {
        let n = norm(&self.normal);
        if n <= 1e-14 {
            return None;
        }
        Some(Halfspace {
            normal: scale(&self.normal, 1.0 / n),
            offset: self.offset / n,
            strict: self.strict,
        })
    }

    pub fn slack(&self, p: &[f64]) -> f64 {
        self.offset - dot(&self.normal, p)
    }

    pub fn admits(&self, p: &[f64], tol: f64) -> bool {
        let s = self.slack(p);
        if self.strict {
            s > tol.max(STRICT_MARGIN)
        } else {
            s >= -tol
        }
    }
}

/// Axis-aligned box with per-endpoint strictness.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub lo_open: Vec<bool>,
    pub hi_open: Vec<bool>,
}

impl BoxRegion {
    pub fn closed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must have equal length");
        let n = lo.len();
        BoxRegion {
            lo,
            hi,
            lo_open: vec![false; n],
            hi_open: vec![false; n],
        }
    }

    pub fn new(
        lo: Vec<f64>,
        hi: Vec<f64>,
        lo_open: Vec<bool>,
        hi_open: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        let n = lo.len();
        if n == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        for len in [hi.len(), lo_open.len(), hi_open.len()] {
            check_dim(n, len)?;
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(GeometryError::InvalidRegion("box with lo > hi".into()));
        }
        Ok(BoxRegion { lo, hi, lo_open, hi_open })
    }

    pub fn unit(dim: usize) -> Self {
        BoxRegion::closed(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn closure(&self) -> BoxRegion {
        BoxRegion::closed(self.lo.clone(), self.hi.clone())
    }

    pub fn is_closed(&self) -> bool {
        !self.lo_open.iter().chain(&self.hi_open).any(|&o| o)
    }

    /// True when strictness flags leave no point (a degenerate axis with an
    /// open end).
    pub fn has_no_points(&self) -> bool {
        (0..self.dim()).any(|i| {
            self.lo[i] > self.hi[i] || (self.lo[i] == self.hi[i] && (self.lo_open[i] || self.hi_open[i]))
        })
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        (0..self.dim()).all(|i| {
            let lo_ok = if self.lo_open[i] {
                p[i] - self.lo[i] > tol
            } else {
                p[i] - self.lo[i] >= -tol
            };
            let hi_ok = if self.hi_open[i] {
                self.hi[i] - p[i] > tol
            } else {
                self.hi[i] - p[i] >= -tol
            };
            lo_ok && hi_ok
        })
    }

    pub fn clamp(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| {
                if self.lo[i] == self.hi[i] {
                    vec![self.lo[i]]
                } else {
                    vec![self.lo[i], self.hi[i]]
                }
            })
            .collect();
        cartesian(&axes)
    }

    pub fn halfspaces(&self) -> Vec<Halfspace> {
        let n = self.dim();
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = -1.0;
            out.push(Halfspace {
                normal: e.clone(),
                offset: -self.lo[i],
                strict: self.lo_open[i],
            });
            e[i] = 1.0;
            out.push(Halfspace {
                normal: e,
                offset: self.hi[i],
                strict: self.hi_open[i],
            });
        }
        out
    }

    /// Grid of `k` points per axis covering the closure.
    pub fn grid(&self, k: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| linspace(self.lo[i], self.hi[i], k))
            .collect();
        cartesian(&axes)
    }
}

/// Euclidean ball, open or closed.
#[derive(Clone, Debug, PartialEq)]
pub struct BallRegion {
    pub center: Vec<f64>,
    pub radius: f64,
    pub open: bool,
}

/// Bounded polyhedron: unit-normal halfspaces (with strictness) plus the
/// vertices of its closure.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    vertices: Vec<Vec<f64>>,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.admits(p, tol))
    }

    fn closure(&self) -> Polytope {
        Polytope {
            dim: self.dim,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace::closed(h.normal.clone(), h.offset))
                .collect(),
            vertices: self.vertices.clone(),
        }
    }

    /// Some strict face covers the whole closure.
    fn strictly_empty(&self) -> bool {
        self.halfspaces.iter().any(|h| {
            h.strict && self.vertices.iter().all(|v| h.slack(v) <= 1e-12)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionKind {
    Empty,
    IntervalProduct,
    HPolytope,
    VPolytope,
    Ball,
}

/// A possibly empty convex region with bounded closure.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexRegion {
    Empty { dim: usize },
    Box(BoxRegion),
    HPolytope(Polytope),
    VPolytope(Polytope),
    Ball(BallRegion),
}

impl ConvexRegion {
    pub fn empty(dim: usize) -> Self {
        ConvexRegion::Empty { dim }
    }

    pub fn from_box(b: BoxRegion) -> Self {
        if b.has_no_points() {
            ConvexRegion::Empty { dim: b.dim() }
        } else {
            ConvexRegion::Box(b)
        }
    }

    /// Closed box `[lo, hi]`.
    pub fn closed_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, GeometryError> {
        let n = lo.len();
        Ok(ConvexRegion::from_box(BoxRegion::new(lo, hi, vec![false; n], vec![false; n])?))
    }

    /// One-dimensional interval with endpoint strictness.
    pub fn interval(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Self, GeometryError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if lo > hi {
            return Ok(ConvexRegion::Empty { dim: 1 });
        }
        Ok(ConvexRegion::from_box(BoxRegion::new(
            vec![lo],
            vec![hi],
            vec![lo_open],
            vec![hi_open],
        )?))
    }

    /// Intersection of halfspaces, optionally clipped by a closed box. The
    /// result must be bounded.
    pub fn h_polytope(
        dim: usize,
        halfspaces: Vec<Halfspace>,
        bounds: Option<&BoxRegion>,
    ) -> Result<Self, GeometryError> {
        check_supported(dim)?;
        if let Some(b) = bounds {
            check_dim(dim, b.dim())?;
        }
        let mut hs = Vec::with_capacity(halfspaces.len());
        for h in &halfspaces {
            check_dim(dim, h.normal.len())?;
            if !h.offset.is_finite() || h.normal.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
            match h.normalized() {
                Some(u) => hs.push(u),
                None => {
                    if h.offset < 0.0 || (h.strict && h.offset <= 0.0) {
                        return Ok(ConvexRegion::Empty { dim });
                    }
                }
            }
        }
        if let Some(b) = bounds {
            hs.extend(b.closure().halfspaces());
        }
        let vertices = if dim == 1 {
            interval_vertices(&hs)?
        } else if dim == 2 && bounds.is_some() {
            clip_polygon(bounds.unwrap(), &hs)
        } else {
            vertices_from_halfspaces(dim, &hs)?
        };
        if vertices.is_empty() {
            return Ok(ConvexRegion::Empty { dim });
        }
        let p = Polytope {
            dim,
            halfspaces: hs,
            vertices,
        };
        if p.strictly_empty() {
            return Ok(ConvexRegion::Empty { dim });
        }
        Ok(ConvexRegion::HPolytope(p))
    }

    /// Convex hull of a finite point set (closed). Redundant points are
    /// dropped.
    pub fn v_polytope(points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let Some(first) = points.first() else {
            return Err(GeometryError::InvalidRegion("empty vertex list".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        check_supported(dim)?;
        for p in &points {
            check_dim(dim, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
        }
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for p in points {
            if !pts.iter().any(|q| dist(q, &p) <= 1e-12) {
                pts.push(p);
            }
        }
        let halfspaces = facets_from_points(dim, &pts);
        let vertices: Vec<Vec<f64>> = pts
            .into_iter()
            .filter(|v| {
                let tight: Vec<Vec<f64>> = halfspaces
                    .iter()
                    .filter(|h| h.slack(v).abs() <= VERTEX_EPS)
                    .map(|h| h.normal.clone())
                    .collect();
                rank(&tight, 1e-9) >= dim
            })
            .collect();
        Ok(ConvexRegion::VPolytope(Polytope {
            dim,
            halfspaces,
            vertices,
        }))
    }

    pub fn ball(center: Vec<f64>, radius: f64, open: bool) -> Result<Self, GeometryError> {
        if center.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        if !radius.is_finite() || center.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if radius < 0.0 {
            return Err(GeometryError::InvalidRegion("negative radius".into()));
        }
        if open && radius == 0.0 {
            return Ok(ConvexRegion::Empty { dim: center.len() });
        }
        Ok(ConvexRegion::Ball(BallRegion { center, radius, open }))
    }

    pub fn kind(&self) -> RegionKind {
        match self {
            ConvexRegion::Empty { .. } => RegionKind::Empty,
            ConvexRegion::Box(_) => RegionKind::IntervalProduct,
            ConvexRegion::HPolytope(_) => RegionKind::HPolytope,
            ConvexRegion::VPolytope(_) => RegionKind::VPolytope,
            ConvexRegion::Ball(_) => RegionKind::Ball,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexRegion::Empty { dim } => *dim,
            ConvexRegion::Box(b) => b.dim(),
            ConvexRegion::HPolytope(p) | ConvexRegion::VPolytope(p) => p.dim,
            ConvexRegion::Ball(b) => b.center.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ConvexRegion::Empty { .. })
    }

    pub fn is_polyhedral(&self) -> bool {
        !matches!(self, ConvexRegion::Ball(_))
    }

    /// Membership honouring strictness: closed faces accept slack `>= -tol`,
    /// strict faces need slack `> tol`.
    pub fn membership(&self, p: &[f64], tol: f64) -> Result<bool, GeometryError> {
        check_dim(self.dim(), p.len())?;
        Ok(self.contains(p, tol))
    }

    /// [`membership`](Self::membership) without the dimension check.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        match self {
            ConvexRegion::Empty { .. } => false,
            ConvexRegion::Box(b) => b.contains(p, tol),
            ConvexRegion::HPolytope(q) | ConvexRegion::VPolytope(q) => q.contains(p, tol),
            ConvexRegion::Ball(b) => {
                let d = dist(p, &b.center);
                if b.open {
                    b.radius - d > tol
                } else {
                    b.radius - d >= -tol
                }
            }
        }
    }

    /// `sup <d, z>` over the closure; `-inf` for the empty region.
    pub fn support(&self, d: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dim(), d.len())?;
        if d.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(match self {
            ConvexRegion::Empty { .. } => f64::NEG_INFINITY,
            ConvexRegion::Box(b) => (0..b.dim())
                .map(|i| (d[i] * b.lo[i]).max(d[i] * b.hi[i]))
                .sum(),
            ConvexRegion::HPolytope(q) | ConvexRegion::VPolytope(q) => q
                .vertices
                .iter()
                .map(|v| dot(d, v))
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexRegion::Ball(b) => dot(&b.center, d) + b.radius * norm(d),
        })
    }

    /// Same set with every strict face closed.
    pub fn closure(&self) -> ConvexRegion {
        match self {
            ConvexRegion::Empty { dim } => ConvexRegion::Empty { dim: *dim },
            ConvexRegion::Box(b) => ConvexRegion::Box(b.closure()),
            ConvexRegion::HPolytope(p) => ConvexRegion::HPolytope(p.closure()),
            ConvexRegion::VPolytope(p) => ConvexRegion::VPolytope(p.clone()),
            ConvexRegion::Ball(b) => ConvexRegion::Ball(BallRegion {
                open: false,
                ..b.clone()
            }),
        }
    }

    /// Vertices of the closure (empty for balls and the empty region).
    pub fn closure_vertices(&self) -> Vec<Vec<f64>> {
        match self {
            ConvexRegion::Box(b) => b.corners(),
            ConvexRegion::HPolytope(p) | ConvexRegion::VPolytope(p) => p.vertices.clone(),
            _ => Vec::new(),
        }
    }

    /// Halfspace description (unit normals) for polyhedral kinds.
    pub fn halfspaces(&self) -> Vec<Halfspace> {
        match self {
            ConvexRegion::Box(b) => b.halfspaces(),
            ConvexRegion::HPolytope(p) | ConvexRegion::VPolytope(p) => p.halfspaces.clone(),
            _ => Vec::new(),
        }
    }

    /// Smallest closed box containing the closure.
    pub fn bounding_box(&self) -> Option<BoxRegion> {
        match self {
            ConvexRegion::Empty { .. } => None,
            ConvexRegion::Box(b) => Some(b.closure()),
            ConvexRegion::HPolytope(p) | ConvexRegion::VPolytope(p) => {
                let mut lo = vec![f64::INFINITY; p.dim];
                let mut hi = vec![f64::NEG_INFINITY; p.dim];
                for v in &p.vertices {
                    for i in 0..p.dim {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                Some(BoxRegion::closed(lo, hi))
            }
            ConvexRegion::Ball(b) => Some(BoxRegion::closed(
                b.center.iter().map(|c| c - b.radius).collect(),
                b.center.iter().map(|c| c + b.radius).collect(),
            )),
        }
    }

    /// Polar of `closure(self) - base`: `{s : <s, w - base> <= 0 for all w}`.
    /// The whole space for the empty region.
    pub fn normal_cone_at(&self, base: &[f64]) -> Result<Cone, GeometryError> {
        let dim = self.dim();
        check_dim(dim, base.len())?;
        check_supported(dim)?;
        if base.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        match self {
            ConvexRegion::Empty { .. } => Ok(Cone::full(dim)),
            ConvexRegion::Ball(b) if dim >= 2 => Ok(ball_cone(b, base)),
            ConvexRegion::Ball(b) => {
                let rows = vec![
                    vec![b.center[0] - b.radius - base[0]],
                    vec![b.center[0] + b.radius - base[0]],
                ];
                Ok(Cone::from_rows(dim, rows))
            }
            _ => {
                let rows: Vec<Vec<f64>> = self
                    .closure_vertices()
                    .iter()
                    .map(|v| sub(v, base))
                    .collect();
                Ok(Cone::from_rows(dim, rows))
            }
        }
    }

    /// Nearest point of the closure.
    pub fn project(&self, p: &[f64]) -> Result<Point, GeometryError> {
        check_dim(self.dim(), p.len())?;
        let x = match self {
            ConvexRegion::Empty { .. } => return Err(GeometryError::EmptyRegion),
            ConvexRegion::Box(b) => b.clamp(p),
            ConvexRegion::Ball(b) => {
                let d = dist(p, &b.center);
                if d <= b.radius {
                    p.to_vec()
                } else {
                    let f = b.radius / d;
                    b.center
                        .iter()
                        .zip(p)
                        .map(|(c, v)| c + f * (v - c))
                        .collect()
                }
            }
            ConvexRegion::HPolytope(q) | ConvexRegion::VPolytope(q) => {
                if q.closure().contains(p, 0.0) {
                    p.to_vec()
                } else {
                    let shifted: Vec<Vec<f64>> = q.vertices.iter().map(|v| sub(v, p)).collect();
                    let (x, _) = min_norm_point(&shifted);
                    x.iter().zip(p).map(|(a, b)| a + b).collect()
                }
            }
        };
        Ok(Point::from_vec_unchecked(x))
    }

    /// Deterministic member points (strictness honoured at zero tolerance):
    /// roughly `k` points per axis for polyhedral kinds, `k` directions for
    /// balls. Empty for the empty region.
    pub fn sample_points(&self, k: usize) -> Vec<Vec<f64>> {
        let k = k.max(2);
        let mut raw: Vec<Vec<f64>> = Vec::new();
        match self {
            ConvexRegion::Empty { .. } => return raw,
            ConvexRegion::Box(b) => {
                raw.push(b.center());
                raw.extend(b.grid(k));
            }
            ConvexRegion::HPolytope(q) | ConvexRegion::VPolytope(q) => {
                let c = centroid(&q.vertices);
                raw.push(c.clone());
                for v in &q.vertices {
                    raw.push(v.clone());
                    raw.push(v.iter().zip(&c).map(|(a, b)| 0.5 * (a + b)).collect());
                }
                if let Some(bb) = self.bounding_box() {
                    raw.extend(bb.grid(k));
                }
            }
            ConvexRegion::Ball(b) => {
                raw.push(b.center.clone());
                let outer = if b.open { 0.999 } else { 1.0 };
                for d in sphere_directions(b.center.len(), k) {
                    for frac in [0.5, outer] {
                        raw.push(
                            b.center
                                .iter()
                                .zip(&d)
                                .map(|(c, v)| c + frac * b.radius * v)
                                .collect(),
                        );
                    }
                }
            }
        }
        let mut out: Vec<Vec<f64>> = Vec::new();
        for p in raw {
            if self.contains(&p, 0.0) && !out.iter().any(|q| dist(q, &p) <= 1e-12) {
                out.push(p);
            }
        }
        out
    }
}

fn check_supported(dim: usize) -> Result<(), GeometryError> {
    if dim > MAX_DIM {
        Err(GeometryError::Unsupported(format!(
            "dimension {dim} exceeds {MAX_DIM}"
        )))
    } else {
        Ok(())
    }
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len() as f64;
    let mut c = vec![0.0; points[0].len()];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi / n;
        }
    }
    c
}

fn ball_cone(b: &BallRegion, base: &[f64]) -> Cone {
    let dim = base.len();
    let diff = sub(&b.center, base);
    let d = norm(&diff);
    if d < b.radius - 1e-12 {
        return Cone::zero(dim);
    }
    let u = scale(&diff, 1.0 / d);
    let ratio = (b.radius / d).min(1.0);
    let across = (1.0 - ratio * ratio).max(0.0).sqrt();
    let inward = scale(&u, -ratio);
    let generators: Vec<Vec<f64>> = if across <= 1e-12 {
        vec![scale(&u, -1.0)]
    } else if dim == 2 {
        let perp = [-u[1], u[0]];
        vec![
            vec![inward[0] + across * perp[0], inward[1] + across * perp[1]],
            vec![inward[0] - across * perp[0], inward[1] - across * perp[1]],
        ]
    } else {
        // Inner polyhedral approximation of the circular cone.
        let mut seed = vec![u.clone()];
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            seed.push(e);
        }
        let basis = super::linalg::orthonormalize(&seed, 1e-9);
        let perp = &basis[1..];
        sphere_directions(dim - 1, 4)
            .into_iter()
            .filter_map(|q| {
                let mut g = inward.clone();
                for (qi, e) in q.iter().zip(perp) {
                    for (gj, ej) in g.iter_mut().zip(e) {
                        *gj += across * qi * ej;
                    }
                }
                normalized(&g)
            })
            .collect()
    };
    Cone::circular(dim, generators, u, ratio)
}

/// Closed interval cut out by 1-D halfspaces.
fn interval_vertices(hs: &[Halfspace]) -> Result<Vec<Vec<f64>>, GeometryError> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for h in hs {
        let a = h.normal[0];
        if a > 0.0 {
            hi = hi.min(h.offset / a);
        } else {
            lo = lo.max(h.offset / a);
        }
    }
    if lo > hi + 1e-12 {
        return Ok(Vec::new());
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(GeometryError::Unbounded);
    }
    let hi = hi.max(lo);
    if hi - lo <= 1e-15 {
        Ok(vec![vec![lo]])
    } else {
        Ok(vec![vec![lo], vec![hi]])
    }
}

/// Vertices of the closed polyhedron via the homogenized cone.
fn vertices_from_halfspaces(dim: usize, hs: &[Halfspace]) -> Result<Vec<Vec<f64>>, GeometryError> {
    let mut rows: Vec<Vec<f64>> = hs
        .iter()
        .map(|h| {
            let mut r = h.normal.clone();
            r.push(-h.offset);
            r
        })
        .collect();
    let mut t = vec![0.0; dim + 1];
    t[dim] = -1.0;
    rows.push(t);
    let gens = cone_generators(dim + 1, &rows);
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut recession = !gens.lineality.is_empty();
    for r in &gens.rays {
        if r[dim] > 1e-12 {
            let v: Vec<f64> = r[..dim].iter().map(|x| x / r[dim]).collect();
            let v = polish_vertex(&v, hs);
            if !vertices.iter().any(|w| dist(w, &v) <= 1e-10) {
                vertices.push(v);
            }
        } else {
            recession = true;
        }
    }
    if recession && !vertices.is_empty() {
        return Err(GeometryError::Unbounded);
    }
    Ok(vertices)
}

/// Least-squares refinement of a vertex on its tight constraints.
fn polish_vertex(v: &[f64], hs: &[Halfspace]) -> Vec<f64> {
    let dim = v.len();
    let tight: Vec<&Halfspace> = hs.iter().filter(|h| h.slack(v).abs() <= 1e-8).collect();
    if tight.len() < dim {
        return v.to_vec();
    }
    let mut ata = vec![vec![0.0; dim]; dim];
    let mut atb = vec![0.0; dim];
    for h in &tight {
        for i in 0..dim {
            atb[i] += h.normal[i] * h.offset;
            for j in 0..dim {
                ata[i][j] += h.normal[i] * h.normal[j];
            }
        }
    }
    match solve(ata, atb) {
        Some(x) if dist(&x, v) <= 1e-7 => x,
        _ => v.to_vec(),
    }
}

/// Sutherland-Hodgman clipping of a 2-D box by closed halfspaces.
fn clip_polygon(bounds: &BoxRegion, hs: &[Halfspace]) -> Vec<Vec<f64>> {
    let (l, h) = (&bounds.lo, &bounds.hi);
    let mut poly: Vec<[f64; 2]> = vec![[l[0], l[1]], [h[0], l[1]], [h[0], h[1]], [l[0], h[1]]];
    for hsp in hs {
        if poly.is_empty() {
            break;
        }
        let a = [hsp.normal[0], hsp.normal[1]];
        let val = |p: &[f64; 2]| hsp.offset - (a[0] * p[0] + a[1] * p[1]);
        let mut next: Vec<[f64; 2]> = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let cur = poly[i];
            let nxt = poly[(i + 1) % poly.len()];
            let (sc, sn) = (val(&cur), val(&nxt));
            let cin = sc >= -1e-12;
            let nin = sn >= -1e-12;
            if cin {
                next.push(cur);
            }
            if cin != nin {
                let s = sc / (sc - sn);
                next.push([cur[0] + s * (nxt[0] - cur[0]), cur[1] + s * (nxt[1] - cur[1])]);
            }
        }
        poly = next;
    }
    // Drop duplicates and collinear points.
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for p in poly {
        if !pts.iter().any(|q| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() <= 1e-12) {
            pts.push(p);
        }
    }
    if pts.len() >= 3 {
        let mut changed = true;
        while changed && pts.len() >= 3 {
            changed = false;
            for i in 0..pts.len() {
                let a = pts[(i + pts.len() - 1) % pts.len()];
                let b = pts[i];
                let c = pts[(i + 1) % pts.len()];
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                let scale = dist(&a, &b).max(dist(&b, &c)).max(1e-300);
                if cross.abs() <= 1e-12 * scale * scale {
                    pts.remove(i);
                    changed = true;
                    break;
                }
            }
        }
    }
    pts.into_iter().map(|p| p.to_vec()).collect()
}

/// Facets (closed, unit normals) of the hull of `pts`; equalities appear as
/// opposite pairs.
fn facets_from_points(dim: usize, pts: &[Vec<f64>]) -> Vec<Halfspace> {
    if dim == 1 {
        let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return vec![Halfspace::closed(vec![-1.0], -lo), Halfspace::closed(vec![1.0], hi)];
    }
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let mut r = p.clone();
            r.push(-1.0);
            r
        })
        .collect();
    let gens = cone_generators(dim + 1, &rows);
    let mut out: Vec<Halfspace> = Vec::new();
    let mut push = |v: &[f64]| {
        let a = &v[..dim];
        let n = norm(a);
        if n > 1e-9 {
            let h = Halfspace::closed(scale(a, 1.0 / n), v[dim] / n);
            if !out
                .iter()
                .any(|o| dot(&o.normal, &h.normal) > 1.0 - 1e-12 && (o.offset - h.offset).abs() < 1e-12)
            {
                out.push(h);
            }
        }
    };
    for r in &gens.rays {
        push(r);
    }
    for l in &gens.lineality {
        push(l);
        push(&scale(l, -1.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_left(lo: f64, hi: f64) -> ConvexRegion {
        ConvexRegion::interval(lo, hi, true, false).unwrap()
    }

    #[test]
    fn membership_honours_strict_endpoints() {
        let r = open_left(0.25, 1.0);
        assert!(r.membership(&[0.5], 0.0).unwrap());
        assert!(!r.membership(&[0.25], 0.0).unwrap());
        assert!(r.membership(&[1.0], 0.0).unwrap());
        assert!(!ConvexRegion::empty(1).membership(&[0.3], 0.0).unwrap());
        assert!(r.membership(&[0.1, 0.2], 0.0).is_err());
    }

    #[test]
    fn support_values() {
        let ball = ConvexRegion::ball(vec![1.0, 0.0], 0.5, false).unwrap();
        assert!((ball.support(&[1.0, 0.0]).unwrap() - 1.5).abs() < 1e-15);
        let r = ConvexRegion::interval(0.5, 0.75, false, true).unwrap();
        assert_eq!(r.support(&[1.0]).unwrap(), 0.75);
        assert_eq!(ConvexRegion::empty(2).support(&[1.0, 0.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn normal_cone_of_interval_and_empty() {
        let c = open_left(0.25, 1.0).normal_cone_at(&[0.25]).unwrap();
        assert_eq!(c.generators(), &[vec![-1.0]]);
        assert!(ConvexRegion::empty(3).normal_cone_at(&[0.0; 3]).unwrap().is_full_space());
    }

    #[test]
    fn normal_cone_of_ball_has_rays_at_120_degrees() {
        let ball = ConvexRegion::ball(vec![1.0, 0.0], 0.5, false).unwrap();
        let c = ball.normal_cone_at(&[0.0, 0.0]).unwrap();
        assert_eq!(c.generators().len(), 2);
        for g in c.generators() {
            assert!((g[0] + 0.5).abs() < 1e-12);
            assert!((g[1].abs() - 0.75f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn projections() {
        let ball = ConvexRegion::ball(vec![0.0, 0.0], 1.0, false).unwrap();
        assert_eq!(ball.project(&[2.0, 0.0]).unwrap().coords(), &[1.0, 0.0]);
        let r = ConvexRegion::closed_box(vec![0.5], vec![1.0]).unwrap();
        assert_eq!(r.project(&[0.3]).unwrap().coords(), &[0.5]);
        let simplex = ConvexRegion::h_polytope(
            2,
            vec![Halfspace::closed(vec![1.0, 1.0], 1.0)],
            Some(&BoxRegion::unit(2)),
        )
        .unwrap();
        let p = simplex.project(&[1.0, 1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert!(ConvexRegion::empty(1).project(&[0.0]).is_err());
    }

    #[test]
    fn h_polytope_in_three_dimensions() {
        let simplex = ConvexRegion::h_polytope(
            3,
            vec![
                Halfspace::closed(vec![1.0, 1.0, 1.0], 1.0),
                Halfspace::closed(vec![-1.0, 0.0, 0.0], 0.0),
                Halfspace::closed(vec![0.0, -1.0, 0.0], 0.0),
                Halfspace::closed(vec![0.0, 0.0, -1.0], 0.0),
            ],
            None,
        )
        .unwrap();
        assert_eq!(simplex.closure_vertices().len(), 4);
        let unbounded = ConvexRegion::h_polytope(3, vec![Halfspace::closed(vec![1.0, 0.0, 0.0], 1.0)], None);
        assert!(unbounded.is_err());
    }

    #[test]
    fn strict_face_covering_closure_is_empty() {
        let r = ConvexRegion::h_polytope(
            2,
            vec![Halfspace::strict(vec![1.0, 0.0], 0.0)],
            Some(&BoxRegion::closed(vec![0.0, 0.0], vec![0.0, 1.0])),
        )
        .unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn v_polytope_drops_redundant_points() {
        let r = ConvexRegion::v_polytope(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.2, 0.2],
            vec![0.5, 0.5],
        ])
        .unwrap();
        assert_eq!(r.closure_vertices().len(), 3);
        assert!(r.contains(&[0.25, 0.25], 0.0));
        assert!(!r.contains(&[0.6, 0.6], 1e-12));
        let seg = ConvexRegion::v_polytope(vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], vec![0.5, 0.5, 0.5]]).unwrap();
        assert_eq!(seg.closure_vertices().len(), 2);
    }
}
