//! Normal cone operator `N_P(x, y)`, the principal operator `F`, local caps
//! `N_P ∩ H` and sampled checks of their structural properties.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::linalg::{cartesian, dist, dot, linspace, norm, rank, scale, sub};
use crate::geometry::{CompactConvexSet, Cone, ConvexRegion, GeometryError};
use crate::preferences::{PreferenceError, PreferenceMap};

/// Opposite-containment tolerance for the lineality test.
pub const LINEALITY_TOL: f64 = 1e-9;
/// Generators must satisfy `support(P - x, g) <= SUPPORT_TOL`.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Strict negativity threshold for `<s, w - x>`.
pub const NEGATIVITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum NormalConeError {
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("normal cone has a nontrivial lineality space (witness {witness:?})")]
    Lineality { witness: Vec<f64> },
    #[error("normal cone is {{0}} although the value is non-empty")]
    ZeroCone,
    #[error("preferred set is empty at the anchor")]
    EmptyValue,
    #[error("point at distance {distance} lies outside the cap neighbourhood of radius {radius}")]
    OutsideNeighborhood { distance: f64, radius: f64 },
    #[error("no cap witness found at the search resolution")]
    WitnessNotFound,
    #[error("cap slice is empty or unbounded at {point:?}")]
    BadSlice { point: Vec<f64> },
}

/// `N_P(x, y)`: full space when `P(x, y)` is empty, otherwise the polar of
/// `closure(P(x, y)) - x`.
pub fn normal_operator(p: &PreferenceMap, x: &[f64], y: Option<&[f64]>) -> Result<Cone, NormalConeError> {
    let region = p.eval(x, y)?;
    Ok(region.normal_cone_at(x)?)
}

/// Principal operator: the unit ball when `P(x, y)` is empty, otherwise the
/// hull of the normal cone's unit extreme rays.
pub fn f_operator(p: &PreferenceMap, x: &[f64], y: Option<&[f64]>) -> Result<CompactConvexSet, NormalConeError> {
    let region = p.eval(x, y)?;
    f_from_region(&region, x)
}

pub(crate) fn f_from_region(region: &ConvexRegion, x: &[f64]) -> Result<CompactConvexSet, NormalConeError> {
    if region.is_empty() {
        return Ok(CompactConvexSet::unit_ball(x.len()));
    }
    let cone = region.normal_cone_at(x)?;
    if let Some(witness) = cone.lineality_witness(LINEALITY_TOL) {
        return Err(NormalConeError::Lineality { witness });
    }
    if cone.generators().is_empty() {
        return Err(NormalConeError::ZeroCone);
    }
    Ok(CompactConvexSet::hull(x.len(), cone.generators().to_vec())?)
}

/// Cached evaluation of `N_P` for one preference map.
#[derive(Clone, Debug)]
pub struct NormalOperator {
    source: PreferenceMap,
}

impl NormalOperator {
    pub fn new(source: PreferenceMap) -> Self {
        NormalOperator { source }
    }

    pub fn source(&self) -> &PreferenceMap {
        &self.source
    }

    pub fn eval(&self, x: &[f64], y: Option<&[f64]>) -> Result<Cone, NormalConeError> {
        normal_operator(&self.source, x, y)
    }

    pub fn principal(&self, x: &[f64], y: Option<&[f64]>) -> Result<CompactConvexSet, NormalConeError> {
        f_operator(&self.source, x, y)
    }
}

/// True when the closure of `region` has non-empty interior.
pub fn has_interior(region: &ConvexRegion) -> bool {
    match region {
        ConvexRegion::Empty { .. } => false,
        ConvexRegion::Box(b) => b.lo.iter().zip(&b.hi).all(|(l, h)| h - l > 1e-12),
        ConvexRegion::Ball(b) => b.radius > 1e-12,
        _ => {
            let v = region.closure_vertices();
            let Some(v0) = v.first() else { return false };
            let diffs: Vec<Vec<f64>> = v.iter().skip(1).map(|w| sub(w, v0)).collect();
            rank(&diffs, 1e-10) == region.dim()
        }
    }
}

/// Search grid for cap witnesses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapParams {
    pub t_steps: usize,
    /// Radii `eps` tried, largest first (geometric, halving).
    pub eps_max: f64,
    pub eps_min: f64,
    /// Candidate `w` per axis when no `w` is supplied.
    pub w_per_axis: usize,
    /// Ball probes per direction and directions.
    pub ball_radial: usize,
    pub ball_directions: usize,
    /// Neighbour offsets per axis.
    pub neighbor_per_axis: usize,
}

impl Default for CapParams {
    fn default() -> Self {
        CapParams {
            t_steps: 64,
            eps_max: 0.5,
            eps_min: 1e-4,
            w_per_axis: 9,
            ball_radial: 5,
            ball_directions: 16,
            neighbor_per_axis: 5,
        }
    }
}

impl CapParams {
    fn eps_grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.eps_max;
        while e >= self.eps_min {
            out.push(e);
            e *= 0.5;
        }
        out
    }
}

/// Local data of the cap construction at an anchor `(x̄, ȳ)`:
/// the ball of radius `2 eps` around `t x̄ + (1 - t) w̄` lies in `P(x, y)`
/// for every sampled `(x, y)` within `eps` of the anchor, and
/// `H = {s : <s, a> = eps}` with `a = (1 - t)(x̄ - w̄)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapWitness {
    pub anchor_x: Vec<f64>,
    pub anchor_y: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    pub eps: f64,
    /// Hyperplane normal `(1 - t)(x̄ - w̄)`.
    pub normal: Vec<f64>,
    pub params: CapParams,
}

impl CapWitness {
    pub fn center(&self) -> Vec<f64> {
        self.anchor_x
            .iter()
            .zip(&self.w)
            .map(|(a, b)| self.t * a + (1.0 - self.t) * b)
            .collect()
    }

    /// Euclidean distance of `(x, y)` from the anchor in the product space.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let dx = dist(x, &self.anchor_x);
        let dy = if y.is_empty() { 0.0 } else { dist(y, &self.anchor_y) };
        dx.max(dy)
    }

    /// Bound `||s|| <= 1` on the cap, and the lower bound
    /// `||s|| >= eps / ||a||` forced by the hyperplane.
    pub fn norm_bounds(&self) -> (f64, f64) {
        (self.eps / norm(&self.normal), 1.0)
    }
}

/// Unclamped ball probes around `c`; all must lie in the value.
fn ball_probes(c: &[f64], r: f64, params: &CapParams) -> Vec<Vec<f64>> {
    let mut out = vec![c.to_vec()];
    let fr = linspace(0.0, 1.0, params.ball_radial.max(2));
    for d in crate::geometry::linalg::sphere_directions(c.len(), params.ball_directions) {
        for &f in &fr[1..] {
            out.push(c.iter().zip(&d).map(|(a, b)| a + f * r * b).collect());
        }
    }
    out
}

fn neighbors(p: &PreferenceMap, x: &[f64], y: &[f64], eps: f64, k: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let offs = |c: &[f64], dom: &crate::geometry::BoxRegion| -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = c
            .iter()
            .map(|&v| linspace(-eps, eps, k).into_iter().map(|o| v + o).collect())
            .collect();
        let mut pts: Vec<Vec<f64>> = cartesian(&axes).into_iter().map(|q| dom.clamp(&q)).collect();
        pts.push(c.to_vec());
        pts
    };
    let own = offs(x, p.domain());
    let rival = match p.rival_domain() {
        Some(rd) => offs(y, rd),
        None => vec![Vec::new()],
    };
    let mut out = Vec::with_capacity(own.len() * rival.len());
    for a in &own {
        for b in &rival {
            out.push((a.clone(), b.clone()));
        }
    }
    out
}

fn cap_holds(values: &[ConvexRegion], c: &[f64], eps: f64, params: &CapParams) -> bool {
    let probes = ball_probes(c, 2.0 * eps, params);
    values.iter().all(|r| probes.iter().all(|q| r.contains(q, 0.0)))
}

/// Searches `(t, eps)` for the cap construction at `(x̄, ȳ)`. With `w` given,
/// only that preferred point is tried; otherwise sampled points of
/// `P(x̄, ȳ)` are tried and the largest `eps` wins (ties: earliest sample,
/// smallest `t`).
pub fn cap_witness(
    p: &PreferenceMap,
    x: &[f64],
    y: Option<&[f64]>,
    w: Option<&[f64]>,
    params: &CapParams,
) -> Result<CapWitness, NormalConeError> {
    let value = p.eval(x, y)?;
    if value.is_empty() {
        return Err(NormalConeError::EmptyValue);
    }
    let yv: Vec<f64> = y.map(<[f64]>::to_vec).unwrap_or_default();
    let candidates: Vec<Vec<f64>> = match w {
        Some(w) => {
            if !value.contains(w, 0.0) {
                return Err(NormalConeError::Preference(PreferenceError::OutOfDomain { point: w.to_vec() }));
            }
            vec![w.to_vec()]
        }
        None => value.sample_points(params.w_per_axis),
    };
    let eps_grid = params.eps_grid();
    // neighbour values depend on eps only
    let values: Vec<Vec<ConvexRegion>> = eps_grid
        .par_iter()
        .map(|&e| {
            neighbors(p, x, &yv, e, params.neighbor_per_axis.max(2))
                .iter()
                .map(|(xo, yo)| p.eval_unchecked(xo, yo))
                .collect()
        })
        .collect();
    let m = params.t_steps.max(1);
    let best: Vec<Option<(f64, f64)>> = candidates
        .par_iter()
        .map(|w| {
            let mut best: Option<(f64, f64)> = None;
            for k in 0..m {
                let t = k as f64 / m as f64;
                let c: Vec<f64> = x.iter().zip(w).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                for (j, &e) in eps_grid.iter().enumerate() {
                    if best.is_some_and(|(_, be)| e <= be) {
                        break;
                    }
                    if cap_holds(&values[j], &c, e, params) {
                        best = Some((t, e));
                        break;
                    }
                }
            }
            best
        })
        .collect();
    let mut chosen: Option<(usize, f64, f64)> = None;
    for (i, b) in best.iter().enumerate() {
        if let Some((t, e)) = b {
            if chosen.is_none_or(|(_, _, ce)| *e > ce) {
                chosen = Some((i, *t, *e));
            }
        }
    }
    let (i, t, eps) = chosen.ok_or(NormalConeError::WitnessNotFound)?;
    let w = candidates[i].clone();
    let normal = scale(&sub(x, &w), 1.0 - t);
    Ok(CapWitness {
        anchor_x: x.to_vec(),
        anchor_y: yv,
        w,
        t,
        eps,
        normal,
        params: params.clone(),
    })
}

/// `N_P(x, y) ∩ H` for `(x, y)` within `eps` of the witness anchor.
pub fn cap_operator(
    witness: &CapWitness,
    p: &PreferenceMap,
    x: &[f64],
    y: Option<&[f64]>,
) -> Result<CompactConvexSet, NormalConeError> {
    let yv: &[f64] = y.unwrap_or(&[]);
    let d = witness.distance(x, yv);
    if d > witness.eps + 1e-12 {
        return Err(NormalConeError::OutsideNeighborhood {
            distance: d,
            radius: witness.eps,
        });
    }
    let cone = normal_operator(p, x, y)?;
    match cone.slice(&witness.normal, witness.eps) {
        Ok(s) => Ok(s),
        Err(GeometryError::Unbounded) | Err(GeometryError::EmptyRegion) => {
            Err(NormalConeError::BadSlice { point: x.to_vec() })
        }
        Err(e) => Err(e.into()),
    }
}

/// Finite partition-of-unity blend of caps over a fixed anchor set: hat
/// weights `max(0, 1 - d / eps_i)` normalised over the anchors covering the
/// point, and the weighted Minkowski sum of their caps.
#[derive(Clone, Debug)]
pub struct BlendedCapOperator {
    source: PreferenceMap,
    witnesses: Vec<CapWitness>,
}

impl BlendedCapOperator {
    pub fn new(source: PreferenceMap, witnesses: Vec<CapWitness>) -> Self {
        BlendedCapOperator { source, witnesses }
    }

    pub fn witnesses(&self) -> &[CapWitness] {
        &self.witnesses
    }

    /// `None` when no anchor's neighbourhood contains the point.
    pub fn eval(&self, x: &[f64], y: Option<&[f64]>) -> Result<Option<CompactConvexSet>, NormalConeError> {
        let yv: &[f64] = y.unwrap_or(&[]);
        let mut parts: Vec<(f64, CompactConvexSet)> = Vec::new();
        for w in &self.witnesses {
            let d = w.distance(x, yv);
            let f = 1.0 - d / w.eps;
            if f > 0.0 {
                parts.push((f, cap_operator(w, &self.source, x, y)?));
            }
        }
        if parts.is_empty() {
            return Ok(None);
        }
        let total: f64 = parts.iter().map(|(f, _)| f).sum();
        let mut gens: Vec<Vec<f64>> = vec![vec![0.0; x.len()]];
        for (f, set) in &parts {
            let mut next = Vec::new();
            for g in &gens {
                for h in set.generators() {
                    let v: Vec<f64> = g.iter().zip(h).map(|(a, b)| a + f / total * b).collect();
                    if !next.iter().any(|q: &Vec<f64>| dist(q, &v) <= 1e-14) {
                        next.push(v);
                    }
                }
            }
            gens = next;
        }
        Ok(Some(CompactConvexSet::hull(x.len(), gens)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    /// `N_P(x, y)` has a nonzero element.
    NonzeroNormal,
    /// `N_P(x, y) ∩ -N_P(x, y) = {0}`.
    TrivialLineality,
    /// Caps are closed along sampled convergent sequences.
    CapClosedness,
    /// `<s, w - x> < 0` for nonzero normals `s` and preferred `w`.
    StrictNegativity,
}

pub const ALL_PROPERTIES: [Property; 4] = [
    Property::NonzeroNormal,
    Property::TrivialLineality,
    Property::CapClosedness,
    Property::StrictNegativity,
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyViolation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub property: Property,
    pub checked: usize,
    /// Samples skipped because the hypotheses failed.
    pub filtered: usize,
    pub violations: Vec<PropertyViolation>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub outcomes: Vec<PropertyOutcome>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(PropertyOutcome::passed)
    }

    pub fn outcome(&self, p: Property) -> Option<&PropertyOutcome> {
        self.outcomes.iter().find(|o| o.property == p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertySamples {
    /// Sampled `(x, y)`; `y` empty for single-agent maps.
    pub points: Vec<(Vec<f64>, Vec<f64>)>,
    /// Preferred points tried per axis.
    pub w_per_axis: usize,
    /// Convergent sequences per cap (closedness).
    pub sequences: usize,
    /// Terms per sequence.
    pub sequence_len: usize,
    /// Membership tolerance for sequence limits.
    pub limit_tol: f64,
    pub cap: CapParams,
}

impl PropertySamples {
    pub fn new(points: Vec<(Vec<f64>, Vec<f64>)>) -> Self {
        PropertySamples {
            points,
            w_per_axis: 9,
            sequences: 10,
            sequence_len: 40,
            limit_tol: 1e-6,
            cap: CapParams::default(),
        }
    }
}

enum SampleResult {
    Filtered,
    Checked(Option<String>),
}

fn nonzero_normal(value: &ConvexRegion, cone: &Cone, x: &[f64]) -> SampleResult {
    if value.contains(x, 0.0) {
        return SampleResult::Filtered;
    }
    SampleResult::Checked((!cone.has_nonzero()).then(|| "cone is {0}".to_string()))
}

fn trivial_lineality(value: &ConvexRegion, cone: &Cone, x: &[f64]) -> SampleResult {
    if value.is_empty() || value.contains(x, 0.0) || !has_interior(value) {
        return SampleResult::Filtered;
    }
    SampleResult::Checked(
        cone.lineality_witness(LINEALITY_TOL)
            .map(|g| format!("generator {g:?} and its negative both lie in the cone")),
    )
}

fn strict_negativity(value: &ConvexRegion, cone: &Cone, x: &[f64], w_per_axis: usize) -> SampleResult {
    if value.is_empty() || value.contains(x, 0.0) || !has_interior(value) {
        return SampleResult::Filtered;
    }
    let gens = cone.generators();
    let mut normals: Vec<Vec<f64>> = gens.to_vec();
    // pairwise mixtures of extreme rays
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            normals.push(gens[i].iter().zip(&gens[j]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    for s in &normals {
        if norm(s) <= 1e-12 {
            continue;
        }
        if value.support(s).map(|v| v - dot(s, x)).unwrap_or(0.0) > SUPPORT_TOL {
            return SampleResult::Checked(Some(format!("generator {s:?} is not a normal")));
        }
        for w in value.sample_points(w_per_axis) {
            let v = dot(s, &sub(&w, x));
            if v >= -NEGATIVITY_TOL {
                return SampleResult::Checked(Some(format!("<{s:?}, w - x> = {v} at w = {w:?}")));
            }
        }
    }
    SampleResult::Checked(None)
}

/// Closedness of a cap along sequences `z_k -> z` inside its neighbourhood:
/// a fixed-weight selection from `T(z_k)` must converge into `T(z)`.
fn cap_closedness(p: &PreferenceMap, x: &[f64], y: &[f64], samples: &PropertySamples) -> (usize, SampleResult) {
    let yo = (!y.is_empty()).then_some(y);
    let Ok(witness) = cap_witness(p, x, yo, None, &samples.cap) else {
        return (0, SampleResult::Filtered);
    };
    let n = x.len();
    let dirs = crate::geometry::linalg::sphere_directions(n + y.len(), samples.sequences.max(1));
    let mut count = 0;
    for (q, d) in dirs.iter().enumerate().take(samples.sequences) {
        count += 1;
        // limit point halfway out along the opposite direction
        let frac = 0.5 * (q as f64 + 1.0) / (samples.sequences as f64 + 1.0);
        let lim_x: Vec<f64> = p.domain().clamp(
            &x.iter().zip(d).map(|(a, b)| a - frac * witness.eps * b).collect::<Vec<_>>(),
        );
        let lim_y: Vec<f64> = match p.rival_domain() {
            Some(rd) => rd.clamp(
                &y.iter().zip(&d[n..]).map(|(a, b)| a - frac * witness.eps * b).collect::<Vec<_>>(),
            ),
            None => Vec::new(),
        };
        let at = |k: usize| -> (Vec<f64>, Vec<f64>) {
            let h = 0.5f64.powi(k as i32) * 0.25 * witness.eps;
            let xk = p.domain().clamp(&lim_x.iter().zip(d).map(|(a, b)| a + h * b).collect::<Vec<_>>());
            let yk = match p.rival_domain() {
                Some(rd) => rd.clamp(&lim_y.iter().zip(&d[n..]).map(|(a, b)| a + h * b).collect::<Vec<_>>()),
                None => Vec::new(),
            };
            (xk, yk)
        };
        let select = |set: &CompactConvexSet| -> Vec<f64> {
            let g = set.generators();
            let mut s = vec![0.0; n];
            let mut total = 0.0;
            for (i, v) in g.iter().enumerate() {
                let wgt = 1.0 + (i % 3) as f64;
                total += wgt;
                for (a, b) in s.iter_mut().zip(v) {
                    *a += wgt * b;
                }
            }
            scale(&s, 1.0 / total)
        };
        let mut last = None;
        for k in 0..samples.sequence_len {
            let (xk, yk) = at(k);
            let yk_opt = (!yk.is_empty()).then_some(yk.as_slice());
            match cap_operator(&witness, p, &xk, yk_opt) {
                Ok(set) => last = Some(select(&set)),
                Err(e) => {
                    return (count, SampleResult::Checked(Some(format!("cap undefined at {xk:?}: {e}"))));
                }
            }
        }
        let Some(s_lim) = last else { continue };
        let ly = (!lim_y.is_empty()).then_some(lim_y.as_slice());
        let ok = cap_operator(&witness, p, &lim_x, ly)
            .map_err(|e| e.to_string())
            .and_then(|set| set.contains(&s_lim, samples.limit_tol).map_err(|e| e.to_string()));
        match ok {
            Ok(true) => {}
            Ok(false) => {
                return (
                    count,
                    SampleResult::Checked(Some(format!("limit {s_lim:?} outside the cap at {lim_x:?}"))),
                )
            }
            Err(e) => return (count, SampleResult::Checked(Some(e))),
        }
    }
    (count, SampleResult::Checked(None))
}

/// Runs the requested property checks over the sampled points. Samples whose
/// hypotheses fail are counted as filtered, not as violations.
pub fn check_properties(p: &PreferenceMap, which: &[Property], samples: &PropertySamples) -> PropertyReport {
    let outcomes = which
        .iter()
        .map(|&prop| {
            let results: Vec<(usize, SampleResult)> = samples
                .points
                .par_iter()
                .map(|(x, y)| {
                    let yo = (!y.is_empty()).then_some(y.as_slice());
                    let value = match p.eval(x, yo) {
                        Ok(v) => v,
                        Err(_) => return (0, SampleResult::Filtered),
                    };
                    let cone = match value.normal_cone_at(x) {
                        Ok(c) => c,
                        Err(e) => return (1, SampleResult::Checked(Some(e.to_string()))),
                    };
                    match prop {
                        Property::NonzeroNormal => (1, nonzero_normal(&value, &cone, x)),
                        Property::TrivialLineality => (1, trivial_lineality(&value, &cone, x)),
                        Property::StrictNegativity => (1, strict_negativity(&value, &cone, x, samples.w_per_axis)),
                        Property::CapClosedness => {
                            if value.is_empty() || value.contains(x, 0.0) {
                                (0, SampleResult::Filtered)
                            } else {
                                cap_closedness(p, x, y, samples)
                            }
                        }
                    }
                })
                .collect();
            let mut outcome = PropertyOutcome {
                property: prop,
                checked: 0,
                filtered: 0,
                violations: Vec::new(),
            };
            for ((x, y), (count, r)) in samples.points.iter().zip(results) {
                match r {
                    SampleResult::Filtered => outcome.filtered += 1,
                    SampleResult::Checked(v) => {
                        outcome.checked += count.max(1);
                        if let Some(detail) = v {
                            outcome.violations.push(PropertyViolation {
                                x: x.clone(),
                                y: y.clone(),
                                detail,
                            });
                        }
                    }
                }
            }
            outcome
        })
        .collect();
    PropertyReport { outcomes }
}
