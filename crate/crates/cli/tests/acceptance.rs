//! Acceptance criteria 1-8, one PASS/FAIL line each. Run with
//! `cargo test --release --test acceptance -- --nocapture` to see the lines.

use std::process::Command;
use std::time::Instant;

use genvi::fleet::{game_fleet, single_agent_fleet};
use genvi::games::{
    brute_force_equilibria, grid_spacing, is_maximal, AffineForm, ConstraintMap, GameInstance, Player,
};
use genvi::geometry::{BoxRegion, ConvexRegion};
use genvi::normal_cones::{check_properties, Property, PropertySamples, ALL_PROPERTIES};
use genvi::preferences::{fixture, MidpointParams, PreferenceMap};
use genvi::reformulation::{
    audit_assumptions, equilibrium_via_qvi, maximal_via_vi, principal_fn, AuditParams, SolveParams,
};
use genvi::vi::{solve_vi_grid, verify_solution, Problem, SolutionCertificate, ViProblem, DEFAULT_TOL};
use genvi_cli::paper;
use serde_json::json;

const SEED: u64 = 20240611;

const C1_LIMIT: f64 = 5.0;
const C2_LIMIT: f64 = 5.0;
const C3_LIMIT: f64 = 60.0;
const C5_LIMIT: f64 = 120.0;
const C3_INSTANCES: usize = 100;
const C3_MIN_SEQUENCES: usize = 1000;
/// Graph-limit membership tolerance for cap sequences.
const C3_LIMIT_TOL: f64 = 1e-6;
const C4_GRID: usize = 2001;
const C4_FLEET: usize = 50;
const C5_GRID: usize = 101;
/// Brute-force equilibria must lie within this many grid cells of the
/// diagonal.
const C5_BAND_CELLS: f64 = 1.5;
const C5_MOVING_TOL: f64 = 0.01;
const C6_GAMES: usize = 6;
const C7_SCALES: [f64; 3] = [0.1, 1.0, 10.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, started: Instant, limit: Option<f64>, o: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let in_time = limit.is_none_or(|l| secs < l);
    let pass = o.pass && in_time;
    let budget = limit.map(|l| format!(" (limit {l} s)")).unwrap_or_default();
    println!(
        "criterion {id}: {} {} [{secs:.2} s{budget}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail
    );
    pass
}

fn criterion_1() -> Outcome {
    let obs = paper::example_31(SEED);
    let mismatches = obs["table-mismatches"].clone();
    let unverified = obs["midpoint-unverified-points"].as_array().map_or(usize::MAX, Vec::len);
    let lsc = obs["relation-lsc"].clone();
    let cex = obs["relation-lsc-counterexample"].clone();
    Outcome {
        pass: mismatches == json!(0) && unverified == 0 && lsc == json!(false) && cex["w"] == json!([0.5]),
        detail: format!(
            "table mismatches {mismatches} over {}^2, {unverified} of {} x without mid-point witness, relation lsc {lsc}, counterexample {cex}",
            paper::TABLE_GRID,
            paper::GRID_POINTS + paper::RANDOM_POINTS
        ),
    }
}

fn criterion_2() -> Outcome {
    let obs = paper::example_32(SEED);
    let unverified = obs["upper-midpoint-unverified-points"].as_array().map_or(usize::MAX, Vec::len);
    Outcome {
        pass: obs["lsc-at-half"] == json!(false)
            && obs["lsc-counterexample-found"] == json!(true)
            && obs["open-valued-points-above-half"] == json!(0)
            && unverified == 0,
        detail: format!(
            "lsc at 1/2 {}, counterexample {}, open values above 1/2 {}, {unverified} x without upper witness",
            obs["lsc-at-half"], obs["lsc-counterexample-found"], obs["open-valued-points-above-half"]
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut violations = 0;
    let mut sequences = 0;
    let mut checked = [0usize; 4];
    let fleet = single_agent_fleet(SEED ^ 3, C3_INSTANCES);
    for inst in &fleet {
        let pts = inst.samples.iter().map(|x| (x.clone(), vec![])).collect();
        let mut samples = PropertySamples::new(pts);
        samples.limit_tol = C3_LIMIT_TOL;
        samples.cap.t_steps = 16;
        samples.cap.w_per_axis = 5;
        let rep = check_properties(&inst.preference, &ALL_PROPERTIES, &samples);
        for (i, o) in rep.outcomes.iter().enumerate() {
            violations += o.violations.len();
            checked[i] += o.checked;
            if o.property == Property::CapClosedness {
                sequences += o.checked;
            }
            if let Some(v) = o.violations.first() {
                println!("  {} {:?}: {}", inst.name, o.property, v.detail);
            }
        }
    }
    Outcome {
        pass: fleet.len() >= C3_INSTANCES && violations == 0 && sequences >= C3_MIN_SEQUENCES,
        detail: format!(
            "{} instances, {violations} violations, checked nonzero/lineality/caps/negativity {checked:?}, {sequences} cap sequences",
            fleet.len()
        ),
    }
}

/// Fleet solutions reused by criteria 4, 6 and 7.
struct FleetRun {
    problems: Vec<ViProblem>,
    certificates: Vec<(ViProblem, SolutionCertificate)>,
    not_maximal: usize,
    compact_without_solution: usize,
    compact: usize,
}

fn light_audit() -> AuditParams {
    AuditParams {
        points_per_axis: 3,
        midpoint: MidpointParams {
            t_steps: 16,
            w_per_axis: 9,
            ..MidpointParams::default()
        },
        ..AuditParams::default()
    }
}

fn fleet_run() -> FleetRun {
    let mut run = FleetRun {
        problems: Vec::new(),
        certificates: Vec::new(),
        not_maximal: 0,
        compact_without_solution: 0,
        compact: 0,
    };
    for inst in single_agent_fleet(SEED, C4_FLEET) {
        let g = GameInstance::single(inst.preference.clone(), inst.feasible.clone()).unwrap();
        let audit = audit_assumptions(&g, &light_audit());
        let solved = maximal_via_vi(&inst.preference, &inst.feasible, &SolveParams::default());
        let Ok(solved) = solved else {
            run.not_maximal += 1;
            println!("  {}: {:?}", inst.name, solved.err());
            continue;
        };
        run.not_maximal += solved.solutions.iter().filter(|s| !s.maximality.maximal).count();
        if audit.passed() && audit.compact() {
            run.compact += 1;
            if solved.solutions.is_empty() {
                run.compact_without_solution += 1;
                println!("  {}: no verified solution", inst.name);
            }
        }
        let prob = ViProblem::new(principal_fn(&inst.preference), inst.feasible.clone());
        for s in solved.solutions {
            run.certificates.push((prob.clone(), s.certificate));
        }
        run.problems.push(prob);
    }
    run
}

fn criterion_4(fleet: &FleetRun) -> Outcome {
    let p = fixture("example-3.1").unwrap();
    let k = ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap();
    let sols = solve_vi_grid(&ViProblem::new(principal_fn(&p), k.clone()), C4_GRID, DEFAULT_TOL).unwrap();
    let points: Vec<f64> = sols.iter().map(|c| c.point[0]).collect();
    let maximal = is_maximal(&p, &k, &[0.5], DEFAULT_TOL).unwrap().maximal;
    Outcome {
        pass: points == [0.5] && maximal && fleet.not_maximal == 0,
        detail: format!(
            "grid {C4_GRID} cluster {points:?}, maximal(0.5) {maximal}, {} non-maximal verified solutions over {C4_FLEET} instances",
            fleet.not_maximal
        ),
    }
}

fn quadratic() -> GameInstance {
    let u = BoxRegion::unit(1);
    let k = ConstraintMap::Constant(ConvexRegion::from_box(u.clone()));
    let players = ["-(x1 - x2)^2", "-(x2 - x1)^2"]
        .iter()
        .enumerate()
        .map(|(i, e)| Player {
            name: format!("p{i}"),
            strategy: u.clone(),
            constraint: k.clone(),
            preference: PreferenceMap::from_utility_expr(e, u.clone(), i, Some(u.clone())).unwrap(),
        })
        .collect();
    GameInstance::new(players).unwrap()
}

fn moving() -> GameInstance {
    let u = BoxRegion::unit(1);
    let p = fixture("example-3.1").unwrap();
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
            preference: p.embedded(0, Some(u.clone())),
        },
        Player {
            name: "two".into(),
            strategy: u.clone(),
            constraint: ConstraintMap::Constant(ConvexRegion::from_box(u.clone())),
            preference: p.embedded(1, Some(u)),
        },
    ])
    .unwrap()
}

fn criterion_5() -> Outcome {
    let params = SolveParams {
        grid: C5_GRID,
        ..SolveParams::default()
    };
    let g = quadratic();
    let run = equilibrium_via_qvi(&g, &params);
    let (qvi_ok, qvi_count) = match &run {
        Ok(r) => (r.solutions.iter().all(|s| s.equilibrium.verdict) && !r.solutions.is_empty(), r.solutions.len()),
        Err(_) => (false, 0),
    };
    let h = grid_spacing(&g.profile_box(), C5_GRID);
    let brute = brute_force_equilibria(&g, C5_GRID).unwrap();
    let in_band = brute.iter().all(|x| (x[0] - x[1]).abs() <= C5_BAND_CELLS * h);
    let diagonal = (0..C5_GRID).all(|i| {
        let v = i as f64 * h;
        brute.iter().any(|x| (x[0] - v).abs() < 1e-12 && (x[1] - v).abs() < 1e-12)
    });
    let m = equilibrium_via_qvi(&moving(), &params);
    let moving_pts: Vec<Vec<f64>> = m
        .as_ref()
        .map(|r| r.solutions.iter().map(|s| s.certificate.point.clone()).collect())
        .unwrap_or_default();
    let moving_ok = !moving_pts.is_empty()
        && m.as_ref().is_ok_and(|r| r.solutions.iter().all(|s| s.certificate.feasible && s.equilibrium.verdict))
        && moving_pts
            .iter()
            .all(|x| x.iter().all(|v| (v - 0.5).abs() <= C5_MOVING_TOL));
    Outcome {
        pass: qvi_ok && in_band && diagonal && moving_ok,
        detail: format!(
            "quadratic {C5_GRID}^2: {qvi_count} verified QVI solutions all equilibria {qvi_ok}, brute force {} points in band {in_band} covering diagonal {diagonal}; moving game {moving_pts:?}",
            brute.len()
        ),
    }
}

fn criterion_6(fleet: &FleetRun) -> Outcome {
    let params = SolveParams {
        grid: C5_GRID,
        ..SolveParams::default()
    };
    let mut games_empty = 0;
    let mut games_compact = 0;
    for (name, g) in game_fleet(SEED, C6_GAMES) {
        let a = audit_assumptions(&g, &light_audit());
        if !(a.passed() && a.compact()) {
            continue;
        }
        games_compact += 1;
        if equilibrium_via_qvi(&g, &params).map_or(true, |r| r.solutions.is_empty()) {
            games_empty += 1;
            println!("  {name}: no verified equilibrium");
        }
    }
    Outcome {
        pass: fleet.compact_without_solution == 0 && games_empty == 0 && fleet.compact > 0 && games_compact > 0,
        detail: format!(
            "{} of {} audited-compact single-agent instances and {games_empty} of {games_compact} games without a verified solution",
            fleet.compact_without_solution, fleet.compact
        ),
    }
}

fn criterion_7(fleet: &FleetRun) -> Outcome {
    let reverified = fleet
        .certificates
        .iter()
        .filter(|(prob, c)| c.verified && verify_solution(Problem::Vi(prob), &c.point, c.tol / 10.0).is_ok_and(|r| r.verified))
        .count();
    let total = fleet.certificates.iter().filter(|(_, c)| c.verified).count();
    let mut mismatched = 0;
    let mut probes = 0;
    for prob in &fleet.problems {
        let b = prob.feasible.bounding_box().unwrap();
        for x in b.grid(if b.dim() == 1 { 101 } else { 21 }) {
            probes += 1;
            let v: Vec<Option<bool>> = C7_SCALES
                .iter()
                .map(|&l| verify_solution(Problem::Vi(&prob.scaled(l)), &x, DEFAULT_TOL).ok().map(|c| c.verified))
                .collect();
            if v.iter().any(|a| *a != v[0]) {
                mismatched += 1;
            }
        }
    }
    Outcome {
        pass: total > 0 && reverified == total && mismatched == 0,
        detail: format!(
            "{reverified}/{total} verified certificates re-verify at tol/10; {mismatched} of {probes} points change verdict under scaling {C7_SCALES:?}"
        ),
    }
}

fn reproduce(seed: u64) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_genvi"))
        .args(["reproduce-paper", "--format", "machine", "--seed", &seed.to_string()])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_8() -> Outcome {
    let a = reproduce(SEED);
    let b = reproduce(SEED);
    Outcome {
        pass: a == b && !a.is_empty(),
        detail: format!("two machine reports of {} bytes identical {}", a.len(), a == b),
    }
}

#[test]
fn acceptance_criteria() {
    let mut all = true;
    let t = Instant::now();
    all &= report(1, t, Some(C1_LIMIT), criterion_1());
    let t = Instant::now();
    all &= report(2, t, Some(C2_LIMIT), criterion_2());
    let t = Instant::now();
    all &= report(3, t, Some(C3_LIMIT), criterion_3());
    let t = Instant::now();
    let fleet = fleet_run();
    all &= report(4, t, None, criterion_4(&fleet));
    let t = Instant::now();
    all &= report(5, t, Some(C5_LIMIT), criterion_5());
    let t = Instant::now();
    all &= report(6, t, None, criterion_6(&fleet));
    let t = Instant::now();
    all &= report(7, t, None, criterion_7(&fleet));
    let t = Instant::now();
    all &= report(8, t, None, criterion_8());
    assert!(all, "at least one acceptance criterion failed");
}
