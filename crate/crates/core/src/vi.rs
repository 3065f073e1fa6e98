//! VI and QVI for set-valued operators with polytope values, solved on grids
//! or by a projected fixed-point iteration and always gated by a direct
//! certificate check.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::linalg::{cartesian, dot, linspace, norm};
use crate::geometry::{lp_solve, BoxRegion, CompactConvexSet, ConvexRegion, GeometryError, Halfspace};

/// Largest dimension for grid solvers.
pub const MAX_GRID_DIM: usize = 3;
/// Default verification tolerance on the normalised residual.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ViError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("operator failed at {point:?}: {message}")]
    Operator { point: Vec<f64>, message: String },
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("dimension {0} too large for the grid solver")]
    DimensionTooLarge(usize),
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize, trace: Vec<TraceEntry> },
}

/// Product of compact convex blocks; block `i` acts on coordinates
/// `offsets[i] .. offsets[i] + dim_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSet {
    pub blocks: Vec<CompactConvexSet>,
}

impl ProductSet {
    pub fn single(set: CompactConvexSet) -> Self {
        ProductSet { blocks: vec![set] }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(CompactConvexSet::dim).sum()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        ProductSet {
            blocks: self.blocks.iter().map(|b| b.scaled(lambda)).collect(),
        }
    }
}

pub type OperatorFn = Arc<dyn Fn(&[f64]) -> Result<ProductSet, ViError> + Send + Sync>;
pub type ConstraintFn = Arc<dyn Fn(&[f64]) -> Vec<ConvexRegion> + Send + Sync>;

/// `VI(T, C)`: single-block operator and a polyhedral feasible set.
#[derive(Clone)]
pub struct ViProblem {
    pub operator: OperatorFn,
    pub feasible: ConvexRegion,
}

/// `QVI(T, K)`: block operator and per-block moving feasible sets over the
/// box `C`.
#[derive(Clone)]
pub struct QviProblem {
    pub operator: OperatorFn,
    pub constraint: ConstraintFn,
    pub domain: BoxRegion,
}

impl ViProblem {
    pub fn new(operator: OperatorFn, feasible: ConvexRegion) -> Self {
        ViProblem { operator, feasible }
    }

    /// Same problem with every operator value multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let op = self.operator.clone();
        ViProblem {
            operator: Arc::new(move |x: &[f64]| op(x).map(|s| s.scaled(lambda))),
            feasible: self.feasible.clone(),
        }
    }

    /// Constant feasible set as a QVI.
    pub fn as_qvi(&self) -> Result<QviProblem, ViError> {
        let k = self.feasible.clone();
        let domain = k
            .bounding_box()
            .ok_or_else(|| ViError::Malformed("empty feasible set".into()))?;
        Ok(QviProblem {
            operator: self.operator.clone(),
            constraint: Arc::new(move |_: &[f64]| vec![k.clone()]),
            domain,
        })
    }
}

impl QviProblem {
    pub fn scaled(&self, lambda: f64) -> Self {
        let op = self.operator.clone();
        QviProblem {
            operator: Arc::new(move |x: &[f64]| op(x).map(|s| s.scaled(lambda))),
            constraint: self.constraint.clone(),
            domain: self.domain.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Grid,
    FixedPoint,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionCertificate {
    pub point: Vec<f64>,
    /// Chosen element of `T(x̄)`.
    pub multiplier: Vec<f64>,
    /// `min_{y in K(x̄)} <x̄*, y - x̄>` divided by the largest generator norm
    /// of each block.
    pub residual: f64,
    pub feasible: bool,
    /// Multiplier re-checked inside `T(x̄)` by an LP on hull weights.
    pub multiplier_in_operator: bool,
    /// Feasible point achieving the residual (a descent witness when the
    /// residual is negative).
    pub witness: Vec<f64>,
    pub method: SolveMethod,
    pub verified: bool,
    pub tol: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

/// Best multiplier in one block: maximises `min_v <s, v - x>` over hull
/// weights; returns (normalised residual, multiplier, argmin vertex).
fn block_residual(set: &CompactConvexSet, k: &ConvexRegion, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>), ViError> {
    let verts = k.closure_vertices();
    if verts.is_empty() {
        return Err(match k {
            ConvexRegion::Empty { .. } => ViError::Malformed("empty feasible set".into()),
            _ => ViError::Geometry(GeometryError::Unsupported("feasible sets must be polyhedral".into())),
        });
    }
    let gens = set.lp_vertices();
    if gens.is_empty() {
        return Err(ViError::Malformed("operator value has no generators".into()));
    }
    let scale = set.max_norm();
    if scale <= 0.0 {
        // T(x) = {0}
        return Ok((0.0, vec![0.0; x.len()], verts[0].clone()));
    }
    let m = gens.len();
    let diffs: Vec<Vec<f64>> = verts
        .iter()
        .map(|v| v.iter().zip(x).map(|(a, b)| a - b).collect())
        .collect();
    // variables: weights (m), r
    let mut cons = Vec::with_capacity(diffs.len() + 2);
    for d in &diffs {
        let mut row: Vec<f64> = gens.iter().map(|g| -dot(g, d) / scale).collect();
        row.push(1.0);
        cons.push(Halfspace::closed(row, 0.0));
    }
    let mut ones = vec![1.0; m];
    ones.push(0.0);
    cons.push(Halfspace::closed(ones.clone(), 1.0));
    cons.push(Halfspace::closed(ones.iter().map(|v| -v).collect(), -1.0));
    let big = diffs.iter().map(|d| norm(d)).fold(0.0, f64::max) + 1.0;
    let mut lo = vec![0.0; m + 1];
    let mut hi = vec![1.0; m + 1];
    lo[m] = -big;
    hi[m] = big;
    let mut obj = vec![0.0; m + 1];
    obj[m] = -1.0;
    let sol = lp_solve(&obj, &cons, &BoxRegion::closed(lo, hi))?;
    let lam = &sol.argmin[..m];
    let total: f64 = lam.iter().sum();
    let mut s = vec![0.0; x.len()];
    for (l, g) in lam.iter().zip(&gens) {
        for (a, b) in s.iter_mut().zip(g) {
            *a += l / total * b;
        }
    }
    let (res, arg) = direct_residual(&s, &diffs);
    Ok((res / scale, s, verts[arg].clone()))
}

fn direct_residual(s: &[f64], diffs: &[Vec<f64>]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, d) in diffs.iter().enumerate() {
        let v = dot(s, d);
        if v < best.0 {
            best = (v, i);
        }
    }
    best
}

fn op_at(op: &OperatorFn, x: &[f64]) -> Result<ProductSet, ViError> {
    let t = op(x)?;
    if t.dim() != x.len() {
        return Err(ViError::Malformed(format!(
            "operator value has dimension {}, point has {}",
            t.dim(),
            x.len()
        )));
    }
    Ok(t)
}

/// Certificate at `x` for blocks `t` against per-block feasible sets `k`.
fn certify(t: &ProductSet, k: &[ConvexRegion], x: &[f64], tol: f64, method: SolveMethod) -> Result<SolutionCertificate, ViError> {
    if t.blocks.len() != k.len() {
        return Err(ViError::Malformed(format!(
            "{} operator blocks but {} feasible blocks",
            t.blocks.len(),
            k.len()
        )));
    }
    let mut off = 0;
    let mut multiplier = Vec::with_capacity(x.len());
    let mut witness = Vec::with_capacity(x.len());
    let mut residual = 0.0;
    let mut feasible = true;
    let mut inside = true;
    for (set, kb) in t.blocks.iter().zip(k) {
        let d = set.dim();
        if kb.dim() != d {
            return Err(ViError::Malformed("feasible block dimension mismatch".into()));
        }
        let xb = &x[off..off + d];
        feasible &= kb.contains(xb, tol);
        let (r, s, w) = block_residual(set, kb, xb)?;
        inside &= set.contains(&s, tol.max(1e-12) * set.max_norm().max(1.0))?;
        residual += r;
        multiplier.extend(s);
        witness.extend(w);
        off += d;
    }
    let verified = feasible && inside && residual >= -tol;
    Ok(SolutionCertificate {
        point: x.to_vec(),
        multiplier,
        residual,
        feasible,
        multiplier_in_operator: inside,
        witness,
        method,
        verified,
        tol,
        trace: Vec::new(),
    })
}

/// Direct check of the VI definition at `x`.
pub fn verify_vi(prob: &ViProblem, x: &[f64], tol: f64) -> Result<SolutionCertificate, ViError> {
    let t = op_at(&prob.operator, x)?;
    let t = if t.blocks.len() == 1 { t } else { flatten(&t)? };
    certify(&t, std::slice::from_ref(&prob.feasible), x, tol, SolveMethod::Direct)
}

/// Direct check of the QVI definition at `x`, including `x ∈ K(x)`.
pub fn verify_qvi(prob: &QviProblem, x: &[f64], tol: f64) -> Result<SolutionCertificate, ViError> {
    let t = op_at(&prob.operator, x)?;
    let k = (prob.constraint)(x);
    certify(&t, &k, x, tol, SolveMethod::Direct)
}

/// Problems accepted by [`verify_solution`].
pub enum Problem<'a> {
    Vi(&'a ViProblem),
    Qvi(&'a QviProblem),
}

pub fn verify_solution(prob: Problem<'_>, x: &[f64], tol: f64) -> Result<SolutionCertificate, ViError> {
    match prob {
        Problem::Vi(p) => verify_vi(p, x, tol),
        Problem::Qvi(p) => verify_qvi(p, x, tol),
    }
}

/// Cartesian product of block generators as one hull.
fn flatten(t: &ProductSet) -> Result<ProductSet, ViError> {
    let axes: Vec<Vec<Vec<f64>>> = t.blocks.iter().map(|b| b.lp_vertices()).collect();
    let mut gens: Vec<Vec<f64>> = vec![Vec::new()];
    for a in &axes {
        let mut next = Vec::with_capacity(gens.len() * a.len());
        for g in &gens {
            for v in a {
                let mut h = g.clone();
                h.extend_from_slice(v);
                next.push(h);
            }
        }
        gens = next;
    }
    Ok(ProductSet::single(CompactConvexSet::hull(t.dim(), gens)?))
}

fn grid_points(b: &BoxRegion, per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..b.dim()).map(|i| linspace(b.lo[i], b.hi[i], per_axis)).collect();
    cartesian(&axes)
}

/// Certifies every grid point of the feasible set's bounding box that lies
/// in `C`; returns the verified certificates in lexicographic order.
pub fn solve_vi_grid(prob: &ViProblem, per_axis: usize, tol: f64) -> Result<Vec<SolutionCertificate>, ViError> {
    let dim = prob.feasible.dim();
    if dim > MAX_GRID_DIM {
        return Err(ViError::DimensionTooLarge(dim));
    }
    let b = prob
        .feasible
        .bounding_box()
        .ok_or_else(|| ViError::Malformed("empty feasible set".into()))?;
    let pts: Vec<Vec<f64>> = grid_points(&b, per_axis)
        .into_iter()
        .filter(|p| prob.feasible.contains(p, 0.0))
        .collect();
    let certs: Vec<Result<SolutionCertificate, ViError>> = pts
        .par_iter()
        .map(|x| {
            verify_vi(prob, x, tol).map(|mut c| {
                c.method = SolveMethod::Grid;
                c
            })
        })
        .collect();
    collect_verified(certs)
}

/// Certifies every grid point of `C` with `x ∈ K(x)`.
pub fn solve_qvi_grid(prob: &QviProblem, per_axis: usize, tol: f64) -> Result<Vec<SolutionCertificate>, ViError> {
    let dim = prob.domain.dim();
    if dim > MAX_GRID_DIM {
        return Err(ViError::DimensionTooLarge(dim));
    }
    let pts = grid_points(&prob.domain, per_axis);
    let certs: Vec<Result<SolutionCertificate, ViError>> = pts
        .par_iter()
        .map(|x| {
            verify_qvi(prob, x, tol).map(|mut c| {
                c.method = SolveMethod::Grid;
                c
            })
        })
        .collect();
    collect_verified(certs)
}

fn collect_verified(certs: Vec<Result<SolutionCertificate, ViError>>) -> Result<Vec<SolutionCertificate>, ViError> {
    let mut out = Vec::new();
    for c in certs {
        let c = c?;
        if c.verified {
            out.push(c);
        }
    }
    Ok(out)
}

/// Element of `T(x)` used by the fixed-point iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    MinNorm,
    /// Generator with this index in every block (clamped to the last).
    Generator(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointParams {
    pub step: f64,
    pub max_iters: usize,
    pub selection: Selection,
    /// `||Δx|| <= stall_tol` for `stall_iters` consecutive iterations.
    pub stall_tol: f64,
    pub stall_iters: usize,
    /// Consecutive sign flips of `Δx` that halve the step.
    pub flip_limit: usize,
    pub tol: f64,
    pub trace: bool,
}

impl Default for FixedPointParams {
    fn default() -> Self {
        FixedPointParams {
            step: 0.1,
            max_iters: 10_000,
            selection: Selection::MinNorm,
            stall_tol: 1e-8,
            stall_iters: 10,
            flip_limit: 5,
            tol: DEFAULT_TOL,
            trace: false,
        }
    }
}

fn select(t: &ProductSet, rule: Selection) -> Vec<f64> {
    let mut s = Vec::with_capacity(t.dim());
    for b in &t.blocks {
        match rule {
            Selection::MinNorm => s.extend(b.min_norm_point()),
            Selection::Generator(i) => {
                let g = b.lp_vertices();
                if b.is_unit_ball() {
                    s.extend(vec![0.0; b.dim()]);
                } else {
                    s.extend(g[i.min(g.len() - 1)].clone());
                }
            }
        }
    }
    s
}

fn project_blocks(k: &[ConvexRegion], z: &[f64]) -> Result<Vec<f64>, ViError> {
    let mut out = Vec::with_capacity(z.len());
    let mut off = 0;
    for kb in k {
        let d = kb.dim();
        out.extend(kb.project(&z[off..off + d])?.into_vec());
        off += d;
    }
    Ok(out)
}

/// Round every coordinate to multiples of `q`.
fn snap(x: &[f64], q: f64) -> Vec<f64> {
    x.iter().map(|v| (v / q).round() * q).collect()
}

/// Iterates `x <- proj_{K(x)}(x - τ s)`, `s` selected from `T(x)`. On
/// convergence the limit is certified directly; if that fails the limit is
/// rounded to decimal grids `1e-12 .. 1e-3` and each rounding is certified
/// in turn. The returned certificate is verified only if a check passed.
pub fn solve_qvi_fixed_point(prob: &QviProblem, x0: &[f64], params: &FixedPointParams) -> Result<SolutionCertificate, ViError> {
    let n = x0.len();
    if n != prob.domain.dim() {
        return Err(ViError::Malformed("start point has the wrong dimension".into()));
    }
    let mut x = prob.domain.clamp(x0);
    let mut tau = params.step;
    let mut trace = Vec::new();
    let mut stall = 0;
    let mut flips = vec![0usize; n];
    let mut last_dx = vec![0.0; n];
    let mut converged = false;
    let mut breakdown = None;
    let mut iters = 0;
    for it in 0..params.max_iters {
        iters = it + 1;
        // The operator may be undefined where the cone degenerates
        // numerically, typically right at a maximiser; certify from there.
        let t = match op_at(&prob.operator, &x) {
            Ok(t) => t,
            Err(e) => {
                breakdown = Some(e);
                break;
            }
        };
        let s = select(&t, params.selection);
        let z: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a - tau * b).collect();
        let k = (prob.constraint)(&x);
        let next = prob.domain.clamp(&project_blocks(&k, &z)?);
        let dx: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let mut flipped = false;
        for i in 0..n {
            if dx[i] * last_dx[i] < 0.0 {
                flips[i] += 1;
                if flips[i] >= params.flip_limit {
                    flipped = true;
                }
            } else if dx[i] != 0.0 {
                flips[i] = 0;
            }
        }
        if flipped {
            tau *= 0.5;
            flips.iter_mut().for_each(|f| *f = 0);
        }
        last_dx = dx.clone();
        x = next;
        if params.trace {
            trace.push(TraceEntry {
                iteration: it,
                x: x.clone(),
                step: tau,
            });
        }
        if norm(&dx) <= params.stall_tol {
            stall += 1;
            if stall >= params.stall_iters {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    if !converged && breakdown.is_none() {
        return Err(ViError::NoConvergence { iterations: iters, trace });
    }
    let mut cert = match verify_qvi(prob, &x, params.tol) {
        Ok(c) => Some(c),
        Err(e) => {
            breakdown = Some(e);
            None
        }
    };
    if !cert.as_ref().is_some_and(|c| c.verified) {
        for e in (3..=12).rev() {
            let y = prob.domain.clamp(&snap(&x, 10f64.powi(-e)));
            match verify_qvi(prob, &y, params.tol) {
                Ok(c) if c.verified => {
                    cert = Some(c);
                    break;
                }
                Ok(c) => {
                    cert.get_or_insert(c);
                }
                Err(_) => {}
            }
        }
    }
    let mut cert = match (cert, breakdown) {
        (Some(c), _) => c,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("a failed check records its error"),
    };
    cert.method = SolveMethod::FixedPoint;
    cert.trace = trace;
    Ok(cert)
}
