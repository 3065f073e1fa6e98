use genvi::fleet::{game_fleet, single_agent_fleet, stage_rng};
use genvi::games::{is_equilibrium, GameInstance};
use genvi::geometry::{BoxRegion, ConvexRegion};
use genvi::normal_cones::f_operator;
use genvi::preferences::{fixture, PreferenceMap};
use genvi::reformulation::{principal_fn, ProductOperator};
use genvi::vi::{
    solve_qvi_fixed_point, solve_qvi_grid, solve_vi_grid, verify_solution, FixedPointParams, Problem, ViProblem,
    DEFAULT_TOL,
};
use proptest::prelude::*;
use rand::Rng;

const SCALES: [f64; 3] = [0.1, 1.0, 10.0];

fn example_vi() -> ViProblem {
    let p = fixture("example-3.1").unwrap();
    ViProblem::new(principal_fn(&p), ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap())
}

fn quadratic() -> GameInstance {
    use genvi::games::{ConstraintMap, Player};
    let u = BoxRegion::unit(1);
    let k = ConstraintMap::Constant(ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap());
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

fn vi_problems() -> Vec<ViProblem> {
    let mut out = vec![example_vi()];
    for inst in single_agent_fleet(3, 8) {
        out.push(ViProblem::new(principal_fn(&inst.preference), inst.feasible.clone()));
    }
    out
}

#[test]
fn verified_certificates_reverify_at_finer_tolerance() {
    for prob in vi_problems() {
        for c in solve_vi_grid(&prob, 101, DEFAULT_TOL).unwrap() {
            let again = verify_solution(Problem::Vi(&prob), &c.point, DEFAULT_TOL / 10.0).unwrap();
            assert!(again.verified, "{:?}", c.point);
        }
    }
    let mut games = vec![quadratic()];
    games.extend(game_fleet(3, 2).into_iter().map(|(_, g)| g));
    for g in games {
        let q = ProductOperator::new(g).qvi();
        for c in solve_qvi_grid(&q, 21, DEFAULT_TOL).unwrap() {
            assert!(verify_solution(Problem::Qvi(&q), &c.point, DEFAULT_TOL / 10.0).unwrap().verified);
        }
    }
}

#[test]
fn verdicts_are_scale_invariant() {
    for prob in vi_problems() {
        let b = prob.feasible.bounding_box().unwrap();
        for x in b.grid(if b.dim() == 1 { 101 } else { 21 }) {
            let verdicts: Vec<bool> = SCALES
                .iter()
                .map(|&l| verify_solution(Problem::Vi(&prob.scaled(l)), &x, DEFAULT_TOL).unwrap().verified)
                .collect();
            assert!(verdicts.iter().all(|&v| v == verdicts[0]), "at {x:?}: {verdicts:?}");
        }
    }
}

#[test]
fn fixed_point_lands_in_grid_cluster() {
    let prob = example_vi();
    let sols = solve_vi_grid(&prob, 2001, DEFAULT_TOL).unwrap();
    assert_eq!(sols.len(), 1);
    let centre = sols[0].point[0];
    let q = prob.as_qvi().unwrap();
    let mut rng = stage_rng(42, "vi/starts");
    let mut hits = 0;
    for _ in 0..10 {
        let x0 = [rng.gen_range(0.0..1.0)];
        if let Ok(c) = solve_qvi_fixed_point(&q, &x0, &FixedPointParams::default()) {
            if c.verified && (c.point[0] - centre).abs() <= 1.0 / 2000.0 {
                hits += 1;
            }
        }
    }
    assert!(hits >= 8, "{hits} of 10 starts reached the cluster");
}

#[test]
fn fixed_point_on_quadratic_game_finds_an_equilibrium() {
    let g = quadratic();
    let q = ProductOperator::new(g.clone()).qvi();
    let c = solve_qvi_fixed_point(&q, &[0.2, 0.9], &FixedPointParams::default()).unwrap();
    assert!(c.verified);
    assert!(is_equilibrium(&g, &c.point, DEFAULT_TOL).unwrap().verdict);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_operator_blocks_match_players(x in prop::collection::vec(0.0..1.0f64, 2), which in 0usize..3) {
        let mut games = vec![quadratic()];
        games.extend(game_fleet(9, 2).into_iter().map(|(_, g)| g));
        let g = &games[which];
        let Ok(t) = ProductOperator::new(g.clone()).eval(&x) else { return Ok(()) };
        for (i, p) in g.players().iter().enumerate() {
            let (own, rival) = g.split(i, &x);
            let f = f_operator(&p.preference, &own, Some(&rival)).unwrap();
            prop_assert_eq!(&t.blocks[i], &f);
            prop_assert_eq!(g.offset(i), i);
        }
    }
}
