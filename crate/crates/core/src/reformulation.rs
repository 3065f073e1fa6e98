//! Maximal elements and equilibria through the principal operator: VI for a
//! single decision maker, QVI for the game, each solution checked against
//! the defining condition, plus sampled hypothesis audits.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::games::{is_equilibrium, is_maximal, EquilibriumReport, GameError, GameInstance, MaximalityReport};
use crate::geometry::linalg::{dist, sphere_directions};
use crate::geometry::ConvexRegion;
use crate::normal_cones::f_operator;
use crate::preferences::{check_lower_midpoint, check_upper_midpoint, MidpointParams, PreferenceMap};
use crate::vi::{
    solve_qvi_fixed_point, solve_qvi_grid, solve_vi_grid, FixedPointParams, OperatorFn, ProductSet, QviProblem,
    SolutionCertificate, ViError, ViProblem, DEFAULT_TOL, MAX_GRID_DIM,
};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ReformulationError {
    #[error(transparent)]
    Vi(#[from] ViError),
    #[error(transparent)]
    Game(#[from] GameError),
    /// A verified solution failed the downstream check: a bug in the
    /// solver or the checks, not a property of the instance.
    #[error("verified solution {point:?} fails the {check} check")]
    ImplicationViolated { point: Vec<f64>, check: String },
}

/// `𝓕(x) = ∏_ν F_ν(x_ν, x_{-ν})`.
#[derive(Clone, Debug)]
pub struct ProductOperator {
    game: GameInstance,
}

impl ProductOperator {
    pub fn new(game: GameInstance) -> Self {
        ProductOperator { game }
    }

    pub fn game(&self) -> &GameInstance {
        &self.game
    }

    pub fn eval(&self, x: &[f64]) -> Result<ProductSet, ViError> {
        let g = &self.game;
        if x.len() != g.dim() {
            return Err(ViError::Malformed(format!("profile has {} coordinates, game {}", x.len(), g.dim())));
        }
        let mut blocks = Vec::with_capacity(g.players().len());
        for (i, p) in g.players().iter().enumerate() {
            let (own, rival) = g.split(i, x);
            let y = (p.preference.rival_dim() > 0).then_some(rival.as_slice());
            let f = f_operator(&p.preference, &own, y).map_err(|e| ViError::Operator {
                point: x.to_vec(),
                message: format!("player {}: {e}", i + 1),
            })?;
            blocks.push(f);
        }
        Ok(ProductSet { blocks })
    }

    pub fn as_fn(&self) -> OperatorFn {
        let me = self.clone();
        Arc::new(move |x: &[f64]| me.eval(x))
    }

    /// QVI with `K(x) = ∏ K_ν(x)` over the product of strategy boxes.
    pub fn qvi(&self) -> QviProblem {
        let g = self.game.clone();
        QviProblem {
            operator: self.as_fn(),
            constraint: Arc::new(move |x: &[f64]| (0..g.players().len()).map(|i| g.constraint_value(i, x)).collect()),
            domain: self.game.profile_box(),
        }
    }
}

/// `F` of a single preference map as a VI operator.
pub fn principal_fn(p: &PreferenceMap) -> OperatorFn {
    let p = p.clone();
    Arc::new(move |x: &[f64]| {
        f_operator(&p, x, None).map(ProductSet::single).map_err(|e| ViError::Operator {
            point: x.to_vec(),
            message: e.to_string(),
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveParams {
    /// Grid points per axis.
    pub grid: usize,
    pub tol: f64,
    pub fixed_point: FixedPointParams,
    /// Starts for the fixed-point solver above the grid dimension limit.
    pub starts: Vec<Vec<f64>>,
    /// Hypothesis audit attached to the run; the pipeline runs regardless
    /// of its verdicts.
    pub audit: Option<AuditParams>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            grid: 201,
            tol: DEFAULT_TOL,
            fixed_point: FixedPointParams::default(),
            starts: Vec::new(),
            audit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalSolution {
    pub certificate: SolutionCertificate,
    pub maximality: MaximalityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalityRun {
    pub solutions: Vec<MaximalSolution>,
    pub grid: usize,
    pub tol: f64,
    pub audit: Option<AuditReport>,
}

/// Solves `VI(F, K)` and passes every verified solution through
/// [`is_maximal`]. An empty solution list is a result, not an error.
pub fn maximal_via_vi(p: &PreferenceMap, k: &ConvexRegion, params: &SolveParams) -> Result<MaximalityRun, ReformulationError> {
    let prob = ViProblem::new(principal_fn(p), k.clone());
    let certs = if k.dim() <= MAX_GRID_DIM {
        solve_vi_grid(&prob, params.grid, params.tol)?
    } else {
        let q = prob.as_qvi()?;
        fixed_point_batch(&q, params)?
    };
    let mut solutions = Vec::with_capacity(certs.len());
    for c in certs {
        let m = is_maximal(p, k, &c.point, params.tol)?;
        if !m.maximal {
            return Err(ReformulationError::ImplicationViolated {
                point: c.point,
                check: "maximality".into(),
            });
        }
        solutions.push(MaximalSolution {
            certificate: c,
            maximality: m,
        });
    }
    let audit = match &params.audit {
        Some(a) => Some(audit_assumptions(&GameInstance::single(p.clone(), k.clone())?, a)),
        None => None,
    };
    Ok(MaximalityRun {
        solutions,
        grid: params.grid,
        tol: params.tol,
        audit,
    })
}

fn fixed_point_batch(q: &QviProblem, params: &SolveParams) -> Result<Vec<SolutionCertificate>, ViError> {
    let starts = if params.starts.is_empty() {
        vec![q.domain.center()]
    } else {
        params.starts.clone()
    };
    let mut out: Vec<SolutionCertificate> = Vec::new();
    for s in &starts {
        match solve_qvi_fixed_point(q, s, &params.fixed_point) {
            Ok(c) if c.verified => {
                if !out.iter().any(|o| o.point == c.point) {
                    out.push(c);
                }
            }
            Ok(_) | Err(ViError::NoConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    out.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumSolution {
    pub certificate: SolutionCertificate,
    pub equilibrium: EquilibriumReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumRun {
    pub solutions: Vec<EquilibriumSolution>,
    pub grid: Option<usize>,
    pub tol: f64,
    pub audit: Option<AuditReport>,
}

/// Solves `QVI(𝓕, K)` (grid up to total dimension 3, fixed point above)
/// and checks every verified solution with [`is_equilibrium`].
pub fn equilibrium_via_qvi(g: &GameInstance, params: &SolveParams) -> Result<EquilibriumRun, ReformulationError> {
    let op = ProductOperator::new(g.clone());
    let q = op.qvi();
    let (certs, grid) = if g.dim() <= MAX_GRID_DIM {
        (solve_qvi_grid(&q, params.grid, params.tol)?, Some(params.grid))
    } else {
        (fixed_point_batch(&q, params)?, None)
    };
    let mut solutions = Vec::with_capacity(certs.len());
    for c in certs {
        let e = is_equilibrium(g, &c.point, params.tol)?;
        if !e.verdict {
            return Err(ReformulationError::ImplicationViolated {
                point: c.point,
                check: "equilibrium".into(),
            });
        }
        solutions.push(EquilibriumSolution {
            certificate: c,
            equilibrium: e,
        });
    }
    Ok(EquilibriumRun {
        solutions,
        grid,
        tol: params.tol,
        audit: params.audit.as_ref().map(|a| audit_assumptions(g, a)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    ConstraintNonEmpty,
    ConstraintConvex,
    ConstraintClosedGraph,
    ConstraintLsc,
    ConstraintBounded,
    PreferenceIrreflexive,
    PreferenceConvexValued,
    PreferenceLowerMidpoint,
    PreferenceUpperMidpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub player: usize,
    pub hypothesis: Hypothesis,
    pub passed: bool,
    pub checked: usize,
    /// Profile where the check failed.
    pub witness: Option<Vec<f64>>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditParams {
    /// Sampled profiles per axis of the product of strategy boxes.
    pub points_per_axis: usize,
    pub midpoint: MidpointParams,
    /// Sequences per profile for the closed-graph check.
    pub sequences: usize,
    pub sequence_len: usize,
    pub limit_tol: f64,
    /// Perturbation and allowed distance of the lsc probe.
    pub lsc_step: f64,
    pub lsc_tol: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams {
            points_per_axis: 5,
            midpoint: MidpointParams::default(),
            sequences: 8,
            sequence_len: 30,
            limit_tol: 1e-6,
            lsc_step: 1e-6,
            lsc_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub checks: Vec<HypothesisCheck>,
    pub points_per_axis: usize,
    pub midpoint_t_steps: usize,
    pub midpoint_radius_min: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Bounded, non-empty constraint values for every player.
    pub fn compact(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| matches!(c.hypothesis, Hypothesis::ConstraintBounded | Hypothesis::ConstraintNonEmpty))
            .all(|c| c.passed)
    }

    pub fn check(&self, player: usize, h: Hypothesis) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.player == player && c.hypothesis == h)
    }

    pub fn failed(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

struct Tally {
    check: HypothesisCheck,
}

impl Tally {
    fn new(player: usize, hypothesis: Hypothesis) -> Self {
        Tally {
            check: HypothesisCheck {
                player,
                hypothesis,
                passed: true,
                checked: 0,
                witness: None,
                detail: None,
            },
        }
    }

    fn record(&mut self, ok: bool, x: &[f64], detail: impl FnOnce() -> String) {
        self.check.checked += 1;
        if !ok && self.check.passed {
            self.check.passed = false;
            self.check.witness = Some(x.to_vec());
            self.check.detail = Some(detail());
        }
    }
}

fn region_distance(r: &ConvexRegion, z: &[f64]) -> f64 {
    match r.project(z) {
        Ok(p) => dist(p.coords(), z),
        Err(_) => f64::INFINITY,
    }
}

/// Sampled checks of the constraint and preference hypotheses for every
/// player at a grid of profiles.
pub fn audit_assumptions(g: &GameInstance, params: &AuditParams) -> AuditReport {
    let c = g.profile_box();
    let profiles = c.grid(params.points_per_axis);
    let dirs = sphere_directions(g.dim(), params.sequences);
    let mut checks = Vec::new();
    for (i, player) in g.players().iter().enumerate() {
        let mut nonempty = Tally::new(i, Hypothesis::ConstraintNonEmpty);
        let mut convex = Tally::new(i, Hypothesis::ConstraintConvex);
        let mut closed = Tally::new(i, Hypothesis::ConstraintClosedGraph);
        let mut lsc = Tally::new(i, Hypothesis::ConstraintLsc);
        let mut bounded = Tally::new(i, Hypothesis::ConstraintBounded);
        let mut irreflexive = Tally::new(i, Hypothesis::PreferenceIrreflexive);
        let mut lower = Tally::new(i, Hypothesis::PreferenceLowerMidpoint);
        let mut upper = Tally::new(i, Hypothesis::PreferenceUpperMidpoint);
        let anchor = player.strategy.center();
        for x in &profiles {
            let k = g.constraint_value(i, x);
            nonempty.record(!k.is_empty(), x, || "empty constraint value".into());
            if !k.is_empty() {
                let pts = k.sample_points(3);
                let mut ok = true;
                for a in &pts {
                    for b in &pts {
                        let m: Vec<f64> = a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect();
                        ok &= k.contains(&m, 1e-12);
                    }
                }
                convex.record(ok, x, || "midpoint of two members is outside".into());
                let bb = k.bounding_box();
                let inside = bb.as_ref().is_some_and(|b| {
                    b.lo.iter().chain(&b.hi).all(|v| v.is_finite())
                        && player.strategy.contains(&b.lo, 1e-12)
                        && player.strategy.contains(&b.hi, 1e-12)
                });
                bounded.record(inside, x, || "value leaves the strategy box".into());
                // lsc: members stay close under small perturbations
                let mut ok = true;
                for d in &dirs {
                    let xp = c.clamp(&x.iter().zip(d).map(|(a, b)| a + params.lsc_step * b).collect::<Vec<_>>());
                    let kp = g.constraint_value(i, &xp);
                    ok &= pts.iter().all(|z| region_distance(&kp, z) <= params.lsc_tol);
                }
                lsc.record(ok, x, || format!("a member is farther than {} after a {} perturbation", params.lsc_tol, params.lsc_step));
                // closed graph: projections along x_k -> x converge into K(x)
                let mut ok = true;
                for d in &dirs {
                    let mut last = None;
                    for step in 0..params.sequence_len {
                        let h = 0.1 * 0.5f64.powi(step as i32);
                        let xk = c.clamp(&x.iter().zip(d).map(|(a, b)| a + h * b).collect::<Vec<_>>());
                        let kk = g.constraint_value(i, &xk);
                        if let Ok(p) = kk.project(&anchor) {
                            last = Some(p.into_vec());
                        }
                    }
                    if let Some(z) = last {
                        ok &= region_distance(&k.closure(), &z) <= params.limit_tol;
                    }
                }
                closed.record(ok, x, || "a sequence limit leaves the value".into());
            }
            let (own, rival) = g.split(i, x);
            let pref = &player.preference;
            let y = (pref.rival_dim() > 0).then_some(rival.as_slice());
            match pref.eval(&own, y) {
                Ok(v) => irreflexive.record(!v.contains(&own, 0.0), x, || "x lies in P(x)".into()),
                Err(e) => irreflexive.record(false, x, || e.to_string()),
            }
            let lv = check_lower_midpoint(pref, &own, y, &params.midpoint);
            lower.record(lv.verified(), x, || format!("{:?}", lv.counterexample));
            let uv = check_upper_midpoint(pref, &own, y, &params.midpoint);
            upper.record(uv.verified(), x, || format!("{:?}", uv.counterexample));
        }
        let mut convex_valued = Tally::new(i, Hypothesis::PreferenceConvexValued);
        convex_valued.check.detail = Some("values are convex regions by construction".into());
        checks.extend([
            nonempty.check,
            convex.check,
            closed.check,
            lsc.check,
            bounded.check,
            irreflexive.check,
            convex_valued.check,
            lower.check,
            upper.check,
        ]);
    }
    AuditReport {
        checks,
        points_per_axis: params.points_per_axis,
        midpoint_t_steps: params.midpoint.t_steps,
        midpoint_radius_min: params.midpoint.radius_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{tests::quadratic_game, AffineForm, ConstraintMap, Player};
    use crate::geometry::BoxRegion;
    use crate::preferences::{example_31_utility, fixture};

    fn unit_k() -> ConvexRegion {
        ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn maximal_examples() {
        let p = fixture("example-3.1").unwrap();
        let run = maximal_via_vi(&p, &unit_k(), &SolveParams::default()).unwrap();
        assert_eq!(run.solutions.len(), 1);
        assert_eq!(run.solutions[0].certificate.point, vec![0.5]);
        let params = SolveParams {
            grid: 11,
            ..SolveParams::default()
        };
        let e = PreferenceMap::empty(BoxRegion::unit(1));
        assert_eq!(maximal_via_vi(&e, &unit_k(), &params).unwrap().solutions.len(), 11);
        let rising = PreferenceMap::from_utility(|x: &[f64]| x[0], BoxRegion::unit(1)).unwrap();
        let run = maximal_via_vi(&rising, &unit_k(), &params).unwrap();
        assert_eq!(run.solutions.len(), 1);
        assert_eq!(run.solutions[0].certificate.point, vec![1.0]);
    }

    #[test]
    fn quadratic_game_equilibria_are_diagonal() {
        let g = quadratic_game();
        let params = SolveParams {
            grid: 21,
            ..SolveParams::default()
        };
        let run = equilibrium_via_qvi(&g, &params).unwrap();
        assert_eq!(run.solutions.len(), 21);
        assert!(run.solutions.iter().all(|s| s.certificate.point[0] == s.certificate.point[1]));
    }

    fn moving_game() -> GameInstance {
        let u = BoxRegion::unit(1);
        let p1 = PreferenceMap::from_utility(example_31_utility, u.clone()).unwrap();
        GameInstance::new(vec![
            Player {
                name: "one".into(),
                strategy: u.clone(),
                constraint: ConstraintMap::AffineBox {
                    lo: vec![AffineForm {
                        coeffs: vec![0.0, 0.5],
                        constant: 0.0,
                    }],
                    hi: vec![AffineForm::constant(1.0, 2)],
                },
                preference: p1.embedded(0, Some(u.clone())),
            },
            Player {
                name: "two".into(),
                strategy: u.clone(),
                constraint: ConstraintMap::Constant(unit_k()),
                preference: p1.embedded(1, Some(u)),
            },
        ])
        .unwrap()
    }

    #[test]
    fn moving_constraint_game() {
        let run = equilibrium_via_qvi(
            &moving_game(),
            &SolveParams {
                grid: 21,
                ..SolveParams::default()
            },
        )
        .unwrap();
        assert_eq!(run.solutions.len(), 1);
        assert_eq!(run.solutions[0].certificate.point, vec![0.5, 0.5]);
    }

    #[test]
    fn empty_players_everything_solves() {
        let u = BoxRegion::unit(1);
        let mk = |off: usize| Player {
            name: format!("p{off}"),
            strategy: u.clone(),
            constraint: ConstraintMap::Constant(unit_k()),
            preference: PreferenceMap::empty_in_game(u.clone(), off, Some(u.clone())),
        };
        let g = GameInstance::new(vec![mk(0), mk(1)]).unwrap();
        let run = equilibrium_via_qvi(&g, &SolveParams { grid: 5, ..SolveParams::default() }).unwrap();
        assert_eq!(run.solutions.len(), 25);
        assert_eq!(run.solutions[0].certificate.point, vec![0.0, 0.0]);
    }

    #[test]
    fn product_operator_blocks() {
        let g = quadratic_game();
        let op = ProductOperator::new(g);
        let t = op.eval(&[0.2, 0.7]).unwrap();
        assert_eq!(t.blocks[0].generators(), &[vec![-1.0]]);
        assert_eq!(t.blocks[1].generators(), &[vec![1.0]]);
    }

    #[test]
    fn audits() {
        let rep = audit_assumptions(&moving_game(), &AuditParams::default());
        assert!(rep.passed(), "{:?}", rep.failed());
        let u = BoxRegion::unit(1);
        let broken = GameInstance::new(vec![Player {
            name: "broken".into(),
            strategy: u.clone(),
            constraint: ConstraintMap::Constant(ConvexRegion::empty(1)),
            preference: PreferenceMap::empty(u.clone()),
        }])
        .unwrap();
        let rep = audit_assumptions(&broken, &AuditParams::default());
        let c = rep.check(0, Hypothesis::ConstraintNonEmpty).unwrap();
        assert!(!c.passed && c.witness == Some(vec![0.0]));
        let two = GameInstance::single(fixture("example-3.2").unwrap(), unit_k()).unwrap();
        let rep = audit_assumptions(&two, &AuditParams::default());
        assert!(!rep.check(0, Hypothesis::PreferenceLowerMidpoint).unwrap().passed);
        assert!(rep.check(0, Hypothesis::PreferenceUpperMidpoint).unwrap().passed);
        assert!(rep.compact());
    }
}
