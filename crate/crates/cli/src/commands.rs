use std::time::Instant;

use rand::Rng;
use serde_json::{json, Value};

use genvi::fleet::stage_rng;
use genvi::games::{is_equilibrium, is_maximal, profile_grid, GameError, GameInstance};
use genvi::geometry::linalg::sub;
use genvi::preferences::{classify_sufficient_conditions, ClassificationReport, MidpointParams};
use genvi::reformulation::{
    audit_assumptions, equilibrium_via_qvi, maximal_via_vi, principal_fn, AuditParams, ProductOperator,
    ReformulationError, SolveParams,
};
use genvi::vi::{verify_qvi, verify_vi, FixedPointParams, SolutionCertificate, ViError, ViProblem, MAX_GRID_DIM};

use crate::error::CliError;
use crate::instance::{ClassifySpec, ExpectSpec, Instance, SolveExpect};
use crate::report::{to_value, Check, InstanceEcho, Report};

/// Grid cells allowed in one exhaustive solve.
pub const MAX_GRID_CELLS: usize = 10_000_000;

/// Command-line overrides of instance settings.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub trace: bool,
    pub point: Option<Vec<f64>>,
}

impl Overrides {
    fn seed(&self, inst: &Instance) -> u64 {
        self.seed.unwrap_or(inst.file.solver.seed)
    }

    fn tol(&self, inst: &Instance) -> f64 {
        self.tol.unwrap_or(inst.file.solver.tol)
    }
}

fn new_report(command: &str, inst: &Instance, o: &Overrides) -> Report {
    Report::new(
        command,
        Some(InstanceEcho {
            name: inst.file.name.clone(),
            sha256: inst.sha256.clone(),
        }),
        o.seed(inst),
    )
}

fn expectations(inst: &Instance) -> ExpectSpec {
    inst.file.expect.clone().unwrap_or_default()
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

fn vi_error(e: ViError) -> CliError {
    match e {
        ViError::DimensionTooLarge(_) => CliError::Resolution(e.to_string()),
        e => compute(e),
    }
}

fn game_error(e: GameError) -> CliError {
    match e {
        GameError::DimensionTooLarge(_) | GameError::GridTooCoarse { .. } => CliError::Resolution(e.to_string()),
        e => compute(e),
    }
}

fn reformulation_error(e: ReformulationError) -> CliError {
    match e {
        ReformulationError::Vi(v) => vi_error(v),
        ReformulationError::Game(g) => game_error(g),
        e => compute(e),
    }
}

pub fn classify(inst: &Instance, o: &Overrides) -> Result<Report, CliError> {
    let started = Instant::now();
    let spec = inst.file.classify.clone().unwrap_or_default();
    let g = &inst.game;
    let points = classify_points(g, &spec, o, o.seed(inst))?;
    let params = MidpointParams {
        t_steps: spec.t_steps,
        radius_min: spec.radius_min,
        ..MidpointParams::default()
    };
    let multi = g.players().len() > 1;
    let mut rows = Vec::new();
    let mut all = [true; 6];
    for x in &points {
        for (i, p) in g.players().iter().enumerate() {
            let (own, rival) = g.split(i, x);
            let y = multi.then_some(rival.as_slice());
            let r = classify_sufficient_conditions(&p.preference, &own, y, &params);
            let flags = [
                r.lower.verified(),
                r.upper.verified(),
                r.combined.verified(),
                r.lsc.lsc,
                r.open_in_domain.open,
                r.irreflexive,
            ];
            for (a, f) in all.iter_mut().zip(flags) {
                *a &= f;
            }
            rows.push(classification_row(i, &r));
        }
    }
    let mut rep = new_report("classify", inst, o);
    rep.resolutions = json!({
        "points": points.len(),
        "t_steps": params.t_steps,
        "radius_min": params.radius_min,
        "w_per_axis": params.w_per_axis,
    });
    let names = ["lower_midpoint", "upper_midpoint", "midpoint", "lsc", "open", "irreflexive"];
    let summary: serde_json::Map<String, Value> = names.iter().zip(all).map(|(n, v)| (n.to_string(), json!(v))).collect();
    rep.result = json!({ "points": rows, "all": summary });
    let e = expectations(inst).classify.unwrap_or_default();
    let wanted = [e.lower_midpoint, e.upper_midpoint, e.midpoint, e.lsc, e.open, e.irreflexive];
    for ((name, want), got) in names.iter().zip(wanted).zip(all) {
        if let Some(w) = want {
            rep.checks.push(Check::equal(name, w, got));
        }
    }
    rep.notes.push(format!(
        "{} profiles: lower {} upper {} midpoint {} lsc {} open {}",
        points.len(),
        all[0],
        all[1],
        all[2],
        all[3],
        all[4]
    ));
    rep.timings.push(("classify".into(), started.elapsed().as_secs_f64()));
    Ok(rep)
}

fn classify_points(g: &GameInstance, spec: &ClassifySpec, o: &Overrides, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
    let mut pts = match &spec.points {
        Some(list) => {
            if let Some(bad) = list.iter().position(|p| p.len() != g.dim()) {
                return Err(CliError::invalid(
                    format!("classify.points[{bad}]"),
                    format!("expected {} coordinates", g.dim()),
                ));
            }
            list.clone()
        }
        None => {
            let k = o.grid.unwrap_or(spec.points_per_axis);
            check_cells(k, g.dim())?;
            profile_grid(g, k)
        }
    };
    let b = g.profile_box();
    let mut rng = stage_rng(seed, "classify/points");
    for _ in 0..spec.random {
        pts.push(b.lo.iter().zip(&b.hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect());
    }
    Ok(pts)
}

fn classification_row(player: usize, r: &ClassificationReport) -> Value {
    json!({
        "player": player,
        "x": r.x,
        "y": r.y,
        "value_empty": r.value_empty,
        "irreflexive": r.irreflexive,
        "open": r.open_in_domain.open,
        "internal_points": r.internal_points,
        "lsc": r.lsc.lsc,
        "lower_midpoint": r.lower.verified(),
        "upper_midpoint": r.upper.verified(),
        "midpoint": r.combined.verified(),
        "implications_hold": r.implications.iter().all(|i| i.holds),
        "counterexamples": {
            "open": r.open_in_domain.counterexample,
            "lsc": r.lsc.counterexample,
            "lower_midpoint": r.lower.counterexample,
            "upper_midpoint": r.upper.counterexample,
        },
    })
}

fn check_cells(grid: usize, dim: usize) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Resolution(format!("grid {grid} needs at least 2 points per axis")));
    }
    let cells = (grid as f64).powi(dim as i32);
    if cells > MAX_GRID_CELLS as f64 {
        return Err(CliError::Resolution(format!(
            "grid {grid} in {dim} dimensions has {cells:e} cells, limit {MAX_GRID_CELLS}"
        )));
    }
    Ok(())
}

fn solve_params(inst: &Instance, o: &Overrides) -> Result<SolveParams, CliError> {
    let s = &inst.file.solver;
    let grid = o.grid.unwrap_or(s.grid);
    let dim = inst.game.dim();
    if dim <= MAX_GRID_DIM {
        check_cells(grid, dim)?;
    }
    let b = inst.game.profile_box();
    let mut rng = stage_rng(o.seed(inst), "solve/starts");
    let starts = if dim > MAX_GRID_DIM {
        (0..s.starts)
            .map(|_| b.lo.iter().zip(&b.hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect())
            .collect()
    } else {
        Vec::new()
    };
    let tol = o.tol(inst);
    Ok(SolveParams {
        grid,
        tol,
        fixed_point: FixedPointParams {
            step: s.step,
            max_iters: o.max_iters.unwrap_or(s.max_iters),
            tol,
            trace: o.trace,
            ..FixedPointParams::default()
        },
        starts,
        audit: None,
    })
}

fn solve_resolutions(p: &SolveParams, dim: usize) -> Value {
    json!({
        "grid": (dim <= MAX_GRID_DIM).then_some(p.grid),
        "tol": p.tol,
        "fixed_point_starts": p.starts.len(),
        "max_iters": p.fixed_point.max_iters,
        "step": p.fixed_point.step,
    })
}

/// Expected solution list within `tol` per coordinate, same order.
fn solutions_check(expected: &[Vec<f64>], found: &[Vec<f64>], tol: f64) -> Check {
    let passed = expected.len() == found.len()
        && expected
            .iter()
            .zip(found)
            .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol));
    Check {
        name: "solutions".into(),
        expected: to_value(expected),
        observed: to_value(found),
        passed,
    }
}

pub fn solve_vi(inst: &Instance, o: &Overrides) -> Result<Report, CliError> {
    let started = Instant::now();
    let Some((p, k)) = inst.single() else {
        return Err(CliError::Usage(
            "solve-vi needs a single player with a constant constraint; use solve-qvi".into(),
        ));
    };
    let params = solve_params(inst, o)?;
    let mut rep = new_report("solve-vi", inst, o);
    rep.resolutions = solve_resolutions(&params, inst.game.dim());
    let e = expectations(inst);
    match maximal_via_vi(p, k, &params) {
        Ok(run) => {
            let points: Vec<Vec<f64>> = run.solutions.iter().map(|s| s.certificate.point.clone()).collect();
            let all_maximal = run.solutions.iter().all(|s| s.maximality.maximal);
            rep.result = json!({
                "points": points,
                "solutions": run.solutions,
                "all_maximal": all_maximal,
            });
            rep.checks.push(Check::equal("verified-solutions-are-maximal", true, all_maximal));
            push_solution_checks(&mut rep, &e.solve_vi.unwrap_or_default(), &points);
            rep.notes.push(format!("{} verified solutions, all maximal: {all_maximal}", points.len()));
        }
        Err(ReformulationError::ImplicationViolated { point, check }) => {
            rep.result = json!({ "implication_violated": { "point": point, "check": check } });
            rep.checks.push(Check::equal("verified-solutions-are-maximal", true, false));
        }
        Err(err) => return Err(reformulation_error(err)),
    }
    rep.timings.push(("solve-vi".into(), started.elapsed().as_secs_f64()));
    Ok(rep)
}

/// Default per-coordinate tolerance for expected solution points.
pub const SOLUTION_TOL: f64 = 1e-9;

fn push_solution_checks(rep: &mut Report, e: &SolveExpect, points: &[Vec<f64>]) {
    if let Some(want) = &e.solutions {
        rep.checks
            .push(solutions_check(want, points, e.solution_tol.unwrap_or(SOLUTION_TOL)));
    }
    if let Some(v) = e.nonempty {
        rep.checks.push(Check::equal("nonempty", v, !points.is_empty()));
    }
}

pub fn solve_qvi(inst: &Instance, o: &Overrides) -> Result<Report, CliError> {
    let started = Instant::now();
    let params = solve_params(inst, o)?;
    let mut rep = new_report("solve-qvi", inst, o);
    rep.resolutions = solve_resolutions(&params, inst.game.dim());
    let e = expectations(inst);
    match equilibrium_via_qvi(&inst.game, &params) {
        Ok(run) => {
            let points: Vec<Vec<f64>> = run.solutions.iter().map(|s| s.certificate.point.clone()).collect();
            let all_eq = run.solutions.iter().all(|s| s.equilibrium.verdict);
            rep.result = json!({
                "points": points,
                "solutions": run.solutions,
                "all_equilibria": all_eq,
            });
            rep.checks.push(Check::equal("verified-solutions-are-equilibria", true, all_eq));
            push_solution_checks(&mut rep, &e.solve_qvi.unwrap_or_default(), &points);
            rep.notes.push(format!("{} verified solutions, all equilibria: {all_eq}", points.len()));
        }
        Err(ReformulationError::ImplicationViolated { point, check }) => {
            rep.result = json!({ "implication_violated": { "point": point, "check": check } });
            rep.checks.push(Check::equal("verified-solutions-are-equilibria", true, false));
        }
        Err(err) => return Err(reformulation_error(err)),
    }
    rep.timings.push(("solve-qvi".into(), started.elapsed().as_secs_f64()));
    Ok(rep)
}

fn certificate_json(c: &SolutionCertificate) -> Value {
    let mut v = to_value(c);
    // direction from the point to the feasible point that beats it
    let descent = (!c.verified && c.residual < -c.tol).then(|| sub(&c.witness, &c.point));
    v["descent_direction"] = to_value(descent);
    v
}

pub fn verify(inst: &Instance, o: &Overrides) -> Result<Report, CliError> {
    let started = Instant::now();
    let x = match (&o.point, &inst.file.verify) {
        (Some(p), _) => p.clone(),
        (None, Some(v)) => v.point.clone(),
        (None, None) => return Err(CliError::Usage("verify needs --point or a [verify] section".into())),
    };
    let g = &inst.game;
    if x.len() != g.dim() {
        return Err(CliError::invalid(
            "point",
            format!("expected {} coordinates, got {}", g.dim(), x.len()),
        ));
    }
    let tol = o.tol(inst);
    let mut rep = new_report("verify", inst, o);
    rep.resolutions = json!({ "tol": tol });
    let e = expectations(inst).verify.unwrap_or_default();
    let cert;
    let downstream;
    if let Some((p, k)) = inst.single() {
        cert = verify_vi(&ViProblem::new(principal_fn(p), k.clone()), &x, tol).map_err(vi_error)?;
        let m = if cert.feasible {
            Some(is_maximal(p, k, &x, tol).map_err(game_error)?)
        } else {
            None
        };
        let maximal = m.as_ref().is_some_and(|r| r.maximal);
        rep.result = json!({ "certificate": certificate_json(&cert), "maximality": m });
        if let Some(v) = e.maximal {
            rep.checks.push(Check::equal("maximal", v, maximal));
        }
        downstream = format!("maximal {maximal}");
    } else {
        let q = ProductOperator::new(g.clone()).qvi();
        cert = verify_qvi(&q, &x, tol).map_err(vi_error)?;
        let eq = is_equilibrium(g, &x, tol).map_err(game_error)?;
        rep.result = json!({ "certificate": certificate_json(&cert), "equilibrium": eq });
        if let Some(v) = e.equilibrium {
            rep.checks.push(Check::equal("equilibrium", v, eq.verdict));
        }
        downstream = format!("equilibrium {}", eq.verdict);
    }
    if let Some(v) = e.verified {
        rep.checks.push(Check::equal("verified", v, cert.verified));
    }
    rep.notes.push(format!(
        "point {:?}: verified {}, residual {:.3e}, {downstream}",
        x, cert.verified, cert.residual
    ));
    rep.timings.push(("verify".into(), started.elapsed().as_secs_f64()));
    Ok(rep)
}

pub fn audit(inst: &Instance, o: &Overrides) -> Result<Report, CliError> {
    let started = Instant::now();
    let params = AuditParams {
        points_per_axis: o.grid.unwrap_or(AuditParams::default().points_per_axis),
        ..AuditParams::default()
    };
    check_cells(params.points_per_axis, inst.game.dim())?;
    let a = audit_assumptions(&inst.game, &params);
    let mut rep = new_report("audit", inst, o);
    rep.resolutions = json!({
        "points_per_axis": params.points_per_axis,
        "t_steps": params.midpoint.t_steps,
        "radius_min": params.midpoint.radius_min,
        "sequences": params.sequences,
        "sequence_len": params.sequence_len,
    });
    rep.result = json!({ "passed": a.passed(), "compact": a.compact(), "report": a });
    if let Some(v) = expectations(inst).audit.and_then(|e| e.passed) {
        rep.checks.push(Check::equal("passed", v, a.passed()));
    }
    for f in a.failed() {
        rep.notes.push(format!("player {} fails {:?} at {:?}", f.player, f.hypothesis, f.witness));
    }
    rep.notes.push(format!("audit passed: {}", a.passed()));
    rep.timings.push(("audit".into(), started.elapsed().as_secs_f64()));
    Ok(rep)
}
