//! Sampled mid-point continuity checks.
//!
//! Verdicts are resolution-stamped semi-decisions: a counterexample means no
//! `(t, radius)` pair on the search grid worked for some sampled `w`; a
//! verified verdict carries one witness per sampled `w` that can be re-checked
//! at finer sampling.

use rayon::prelude::*;
use serde::Serialize;

use super::PreferenceMap;
use crate::geometry::linalg::{cartesian, linspace, sphere_directions};
use crate::geometry::{regions_disjoint, BoxRegion, ConvexRegion};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MidpointParams {
    /// `t` ranges over `{0, 1/m, ..., (m-1)/m}`.
    pub t_steps: usize,
    /// Smallest ball / neighbourhood radius tried.
    pub radius_min: f64,
    /// Ratio between consecutive radii (geometric grid from half the
    /// domain width down to `radius_min`).
    pub radius_ratio: f64,
    /// Grid points per axis when sampling `w` in `P(x)`.
    pub w_per_axis: usize,
    /// Radial fractions sampled inside a ball.
    pub ball_radial: usize,
    /// Directions sampled on a ball (2-D and up).
    pub ball_directions: usize,
    /// Neighbour offsets per axis inside a neighbourhood.
    pub neighbor_per_axis: usize,
}

impl Default for MidpointParams {
    fn default() -> Self {
        MidpointParams {
            t_steps: 64,
            radius_min: 1e-4,
            radius_ratio: 0.5,
            w_per_axis: 33,
            ball_radial: 5,
            ball_directions: 16,
            neighbor_per_axis: 9,
        }
    }
}

impl MidpointParams {
    /// Same search grid with `factor` times denser ball and neighbourhood
    /// sampling.
    pub fn finer(&self, factor: usize) -> Self {
        MidpointParams {
            ball_radial: (self.ball_radial - 1) * factor + 1,
            ball_directions: self.ball_directions * factor,
            neighbor_per_axis: (self.neighbor_per_axis - 1) * factor + 1,
            ..self.clone()
        }
    }

    fn t_grid(&self) -> Vec<f64> {
        let m = self.t_steps.max(1);
        (0..m).map(|k| k as f64 / m as f64).collect()
    }

    fn radii(&self, width: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut r = 0.5 * width;
        while r >= self.radius_min {
            out.push(r);
            r *= self.radius_ratio;
        }
        if out.last().is_none_or(|&l| l > self.radius_min) {
            out.push(self.radius_min);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MidpointKind {
    Lower,
    Upper,
    Combined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MidpointStatus {
    VerifiedAtResolution,
    Counterexample,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MidpointWitness {
    pub w: Vec<f64>,
    pub t: f64,
    /// Ball radius (lower), neighbourhood radius (upper) or both (combined).
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MidpointCounterexample {
    pub w: Vec<f64>,
    /// A point outside the required set at `t = 0` and the smallest radius.
    pub escape: Vec<f64>,
    /// The perturbed profile `(x', y')` at which it escapes, when relevant.
    pub perturbed: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MidpointVerdict {
    pub kind: MidpointKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub status: MidpointStatus,
    pub vacuous: bool,
    pub witnesses: Vec<MidpointWitness>,
    pub counterexample: Option<MidpointCounterexample>,
    pub params: MidpointParams,
}

impl MidpointVerdict {
    pub fn verified(&self) -> bool {
        self.status == MidpointStatus::VerifiedAtResolution
    }

    /// Re-checks every witness directly with `factor` times denser sampling.
    pub fn recheck(&self, p: &PreferenceMap, factor: usize) -> bool {
        if !self.verified() {
            return false;
        }
        let params = self.params.finer(factor);
        let ctx = Context::new(p, &self.x, &self.y, &params);
        self.witnesses
            .iter()
            .all(|wit| ctx.attempt(self.kind, &wit.w, wit.t, wit.radius).is_none())
    }
}

struct Context<'a> {
    map: &'a PreferenceMap,
    x: &'a [f64],
    y: &'a [f64],
    px: ConvexRegion,
    params: &'a MidpointParams,
}

impl<'a> Context<'a> {
    fn new(map: &'a PreferenceMap, x: &'a [f64], y: &'a [f64], params: &'a MidpointParams) -> Self {
        Context {
            map,
            x,
            y,
            px: map.eval_unchecked(x, y),
            params,
        }
    }

    fn ball(&self, c: &[f64], r: f64) -> Vec<Vec<f64>> {
        let dom = self.map.domain();
        let mut out = vec![c.to_vec()];
        let fracs = linspace(0.0, 1.0, self.params.ball_radial.max(2));
        for d in sphere_directions(c.len(), self.params.ball_directions) {
            for &f in &fracs[1..] {
                let p: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + f * r * b).collect();
                out.push(dom.clamp(&p));
            }
        }
        out
    }

    /// Perturbed profiles `(x', y')` within `delta` (product neighbourhood,
    /// equal radii) and their preferred sets.
    fn neighbors(&self, delta: f64) -> Vec<(Vec<f64>, Vec<f64>, ConvexRegion)> {
        let k = self.params.neighbor_per_axis.max(2);
        let offs = |center: &[f64], dom: &BoxRegion, k: usize| -> Vec<Vec<f64>> {
            let axes: Vec<Vec<f64>> = center
                .iter()
                .map(|&c| linspace(-delta, delta, k).into_iter().map(|o| c + o).collect())
                .collect();
            let mut pts: Vec<Vec<f64>> = cartesian(&axes).into_iter().map(|p| dom.clamp(&p)).collect();
            pts.push(center.to_vec());
            pts
        };
        let own = offs(self.x, self.map.domain(), k);
        let rival = match self.map.rival_domain() {
            None => vec![Vec::new()],
            Some(rd) => offs(self.y, rd, k.min(5)),
        };
        let mut out = Vec::with_capacity(own.len() * rival.len());
        for xo in &own {
            for yo in &rival {
                let r = self.map.eval_unchecked(xo, yo);
                out.push((xo.clone(), yo.clone(), r));
            }
        }
        out
    }

    /// `None` when `(t, radius)` works for `w`, else a failing point and
    /// perturbed profile.
    fn attempt(&self, kind: MidpointKind, w: &[f64], t: f64, radius: f64) -> Option<(Vec<f64>, Option<Vec<f64>>)> {
        let nb = match kind {
            MidpointKind::Lower => Vec::new(),
            _ => self.neighbors(radius),
        };
        self.attempt_with(kind, w, t, radius, &nb)
    }

    fn attempt_with(
        &self,
        kind: MidpointKind,
        w: &[f64],
        t: f64,
        radius: f64,
        nb: &[(Vec<f64>, Vec<f64>, ConvexRegion)],
    ) -> Option<(Vec<f64>, Option<Vec<f64>>)> {
        let c: Vec<f64> = self.x.iter().zip(w).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        match kind {
            MidpointKind::Lower => self
                .ball(&c, radius)
                .into_iter()
                .find(|p| !self.px.contains(p, 0.0))
                .map(|p| (p, None)),
            MidpointKind::Upper => nb
                .iter()
                .find(|(_, _, r)| !r.contains(&c, 0.0))
                .map(|(xo, yo, _)| (c.clone(), Some(self.map.profile(xo, yo)))),
            MidpointKind::Combined => {
                let ball = self.ball(&c, radius);
                for (xo, yo, r) in nb {
                    if let Some(p) = ball.iter().find(|p| !r.contains(p, 0.0)) {
                        return Some((p.clone(), Some(self.map.profile(xo, yo))));
                    }
                }
                None
            }
        }
    }
}

fn width(map: &PreferenceMap) -> f64 {
    let d = map.domain();
    d.lo.iter().zip(&d.hi).map(|(l, h)| h - l).fold(0.0, f64::max).max(1e-12)
}

fn run(kind: MidpointKind, p: &PreferenceMap, x: &[f64], y: Option<&[f64]>, params: &MidpointParams) -> MidpointVerdict {
    let y: Vec<f64> = y.map(<[f64]>::to_vec).unwrap_or_default();
    let ctx = Context::new(p, x, &y, params);
    let mut verdict = MidpointVerdict {
        kind,
        x: x.to_vec(),
        y: y.clone(),
        status: MidpointStatus::VerifiedAtResolution,
        vacuous: false,
        witnesses: Vec::new(),
        counterexample: None,
        params: params.clone(),
    };
    if ctx.px.is_empty() {
        verdict.vacuous = true;
        return verdict;
    }
    let radii = params.radii(width(p));
    let neighborhoods: Vec<Vec<(Vec<f64>, Vec<f64>, ConvexRegion)>> = match kind {
        MidpointKind::Lower => vec![Vec::new(); radii.len()],
        _ => radii.iter().map(|&r| ctx.neighbors(r)).collect(),
    };
    let ts = params.t_grid();
    let samples = ctx.px.sample_points(params.w_per_axis);
    let results: Vec<Result<MidpointWitness, MidpointCounterexample>> = samples
        .par_iter()
        .map(|w| {
            for &t in &ts {
                for (ri, &r) in radii.iter().enumerate() {
                    if ctx.attempt_with(kind, w, t, r, &neighborhoods[ri]).is_none() {
                        return Ok(MidpointWitness { w: w.clone(), t, radius: r });
                    }
                }
            }
            let last = radii.len() - 1;
            let (escape, perturbed) = ctx
                .attempt_with(kind, w, 0.0, radii[last], &neighborhoods[last])
                .unwrap_or((w.clone(), None));
            Err(MidpointCounterexample {
                w: w.clone(),
                escape,
                perturbed,
            })
        })
        .collect();
    for r in results {
        match r {
            Ok(wit) => verdict.witnesses.push(wit),
            Err(ce) => {
                if verdict.counterexample.is_none() {
                    verdict.counterexample = Some(ce);
                }
                verdict.status = MidpointStatus::Counterexample;
            }
        }
    }
    if !verdict.verified() {
        verdict.witnesses.clear();
    }
    verdict
}

/// Lower mid-point continuity at `(x, y)`: for each sampled `w` in `P(x, y)`
/// some ball around `t x + (1 - t) w` (relative to the domain) lies in
/// `P(x, y)`.
pub fn check_lower_midpoint(p: &PreferenceMap, x: &[f64], y: Option<&[f64]>, params: &MidpointParams) -> MidpointVerdict {
    run(MidpointKind::Lower, p, x, y, params)
}

/// Upper mid-point continuity at `(x, y)`: `t x + (1 - t) w` stays preferred
/// for all sampled perturbations `(x', y')` within some radius.
pub fn check_upper_midpoint(p: &PreferenceMap, x: &[f64], y: Option<&[f64]>, params: &MidpointParams) -> MidpointVerdict {
    run(MidpointKind::Upper, p, x, y, params)
}

/// Mid-point continuity: one `t` and one radius such that every sampled
/// `w'` near `t x + (1 - t) w` is preferred at every sampled perturbation.
pub fn check_midpoint(p: &PreferenceMap, x: &[f64], y: Option<&[f64]>, params: &MidpointParams) -> MidpointVerdict {
    run(MidpointKind::Combined, p, x, y, params)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpennessProbe {
    pub open: bool,
    /// Point of `P(x)` with no relative ball inside `P(x)`, and a point of
    /// the smallest ball that escapes.
    pub counterexample: Option<(Vec<f64>, Vec<f64>)>,
    pub smallest_radius: f64,
}

/// Whether `P(x, y)` is open relative to the domain, probed on sampled
/// points (including closed boundary points).
pub fn is_open_in_domain(p: &PreferenceMap, x: &[f64], y: Option<&[f64]>, params: &MidpointParams) -> OpennessProbe {
    let y: Vec<f64> = y.map(<[f64]>::to_vec).unwrap_or_default();
    let ctx = Context::new(p, x, &y, params);
    let radii = params.radii(width(p));
    let smallest = *radii.last().unwrap();
    for w in ctx.px.sample_points(params.w_per_axis) {
        let ok = radii
            .iter()
            .any(|&r| ctx.ball(&w, r).iter().all(|q| ctx.px.contains(q, 0.0)));
        if !ok {
            let escape = ctx
                .ball(&w, smallest)
                .into_iter()
                .find(|q| !ctx.px.contains(q, 0.0))
                .unwrap_or_else(|| w.clone());
            return OpennessProbe {
                open: false,
                counterexample: Some((w, escape)),
                smallest_radius: smallest,
            };
        }
    }
    OpennessProbe {
        open: true,
        counterexample: None,
        smallest_radius: smallest,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LscCounterexample {
    /// Centre of the open cube `G` meeting `P(x, y)`.
    pub w: Vec<f64>,
    pub half_width: f64,
    /// Perturbed profile at the smallest radius whose value misses `G`.
    pub perturbed: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LscProbe {
    pub lsc: bool,
    pub counterexample: Option<LscCounterexample>,
}

/// Lower semicontinuity of the map at `(x, y)` by the open-set test with
/// small open cubes around sampled points of `P(x, y)`.
fn lsc_probe(ctx: &Context<'_>, radii: &[f64], half_width: f64) -> LscProbe {
    let neighborhoods: Vec<_> = radii.iter().map(|&r| ctx.neighbors(r)).collect();
    for w in ctx.px.sample_points(ctx.params.w_per_axis) {
        let g = ConvexRegion::from_box(BoxRegion {
            lo: w.iter().map(|v| v - half_width).collect(),
            hi: w.iter().map(|v| v + half_width).collect(),
            lo_open: vec![true; w.len()],
            hi_open: vec![true; w.len()],
        });
        let misses = |r: &ConvexRegion| regions_disjoint(r, &g, 0.0).map(|v| v.disjoint).unwrap_or(true);
        let ok = neighborhoods
            .iter()
            .any(|nb| nb.iter().all(|(_, _, r)| !misses(r)));
        if !ok {
            let nb = neighborhoods.last().unwrap();
            let (xo, yo, _) = nb.iter().find(|(_, _, r)| misses(r)).unwrap();
            return LscProbe {
                lsc: false,
                counterexample: Some(LscCounterexample {
                    w,
                    half_width,
                    perturbed: ctx.map.profile(xo, yo),
                }),
            };
        }
    }
    LscProbe {
        lsc: true,
        counterexample: None,
    }
}

/// Every sampled point of `P(x, y)` is internal relative to the domain:
/// towards each sampled domain point some positive step stays in `P(x, y)`.
fn internal_points(ctx: &Context<'_>, radii: &[f64]) -> bool {
    let targets = ctx.map.domain().grid(5);
    ctx.px.sample_points(ctx.params.w_per_axis).iter().all(|w| {
        targets.iter().all(|z| {
            let d: Vec<f64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
            let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len <= 1e-12 {
                return true;
            }
            radii.iter().any(|&r| {
                let s = (r / len).min(1.0);
                let q: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + s * b).collect();
                ctx.px.contains(&q, 0.0)
            })
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Implication {
    pub label: String,
    pub antecedent: bool,
    pub consequent: bool,
    pub holds: bool,
}

impl Implication {
    fn new(label: &str, antecedent: bool, consequent: bool) -> Self {
        Implication {
            label: label.to_string(),
            antecedent,
            consequent,
            holds: !antecedent || consequent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value_empty: bool,
    pub irreflexive: bool,
    pub open_in_domain: OpennessProbe,
    pub internal_points: bool,
    pub lsc: LscProbe,
    pub lower: MidpointVerdict,
    pub upper: MidpointVerdict,
    pub combined: MidpointVerdict,
    /// Sufficient conditions evaluated as material conditionals:
    /// (a) open values give lower continuity, (b) internal points give lower
    /// continuity, (c) lsc with open values gives upper continuity, (d) lsc
    /// with internal points gives upper continuity.
    pub implications: Vec<Implication>,
}

/// Sampled openness, internal-point and lsc probes plus all three mid-point
/// verdicts at `(x, y)`.
pub fn classify_sufficient_conditions(
    p: &PreferenceMap,
    x: &[f64],
    y: Option<&[f64]>,
    params: &MidpointParams,
) -> ClassificationReport {
    let yv: Vec<f64> = y.map(<[f64]>::to_vec).unwrap_or_default();
    let ctx = Context::new(p, x, &yv, params);
    let radii = params.radii(width(p));
    let open = is_open_in_domain(p, x, y, params);
    let internal = internal_points(&ctx, &radii);
    let lsc = lsc_probe(&ctx, &radii, (10.0 * params.radius_min).max(0.01 * width(p)));
    let lower = check_lower_midpoint(p, x, y, params);
    let upper = check_upper_midpoint(p, x, y, params);
    let combined = check_midpoint(p, x, y, params);
    let implications = vec![
        Implication::new("a", open.open, lower.verified()),
        Implication::new("b", internal, lower.verified()),
        Implication::new("c", lsc.lsc && open.open, upper.verified()),
        Implication::new("d", lsc.lsc && internal, upper.verified()),
    ];
    let value_empty = ctx.px.is_empty();
    let irreflexive = !ctx.px.contains(x, 0.0);
    drop(ctx);
    ClassificationReport {
        x: x.to_vec(),
        y: yv,
        value_empty,
        irreflexive,
        open_in_domain: open,
        internal_points: internal,
        lsc,
        lower,
        upper,
        combined,
        implications,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::fixture;

    #[test]
    fn example_one_lower_at_three_quarters() {
        let p = fixture("example-3.1").unwrap();
        let v = check_lower_midpoint(&p, &[0.75], None, &MidpointParams::default());
        assert!(v.verified());
        assert!(v.recheck(&p, 10));
    }

    #[test]
    fn empty_value_is_vacuous() {
        let p = fixture("example-3.1").unwrap();
        let v = check_upper_midpoint(&p, &[0.5], None, &MidpointParams::default());
        assert!(v.verified() && v.vacuous);
    }

    #[test]
    fn singleton_map_fails_lower() {
        let p = PreferenceMap::custom(BoxRegion::unit(1), 0, None, |_, _| {
            ConvexRegion::closed_box(vec![1.0], vec![1.0]).unwrap()
        });
        let v = check_lower_midpoint(&p, &[0.0], None, &MidpointParams::default());
        assert_eq!(v.status, MidpointStatus::Counterexample);
        assert_eq!(v.counterexample.unwrap().w, vec![1.0]);
    }

    #[test]
    fn example_two_upper_at_half() {
        let p = fixture("example-3.2").unwrap();
        let params = MidpointParams::default();
        assert!(check_upper_midpoint(&p, &[0.5], None, &params).verified());
        let r = classify_sufficient_conditions(&p, &[0.5], None, &params);
        assert!(!r.lsc.lsc);
        let r = classify_sufficient_conditions(&p, &[0.8], None, &params);
        assert!(!r.open_in_domain.open);
        assert!(r.upper.verified());
        assert!(!r.lower.verified());
    }

    #[test]
    fn radius_grid_reaches_minimum() {
        let r = MidpointParams::default().radii(1.0);
        assert_eq!(r[0], 0.5);
        assert_eq!(*r.last().unwrap(), 1e-4);
    }
}
