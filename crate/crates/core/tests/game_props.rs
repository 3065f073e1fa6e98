use genvi::fleet::game_fleet;
use genvi::games::{
    brute_force_equilibria, gnep_best_response_check, grid_spacing, is_equilibrium, profile_grid, GameInstance,
};
use genvi::geometry::BoxRegion;
use genvi::preferences::PreferenceMap;
use proptest::prelude::*;

fn quadratic() -> GameInstance {
    use genvi::games::{ConstraintMap, Player};
    use genvi::geometry::ConvexRegion;
    let u = BoxRegion::unit(1);
    let k = ConstraintMap::Constant(ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap());
    GameInstance::new(vec![
        Player {
            name: "one".into(),
            strategy: u.clone(),
            constraint: k.clone(),
            preference: PreferenceMap::from_utility_expr("-(x1 - x2)^2", u.clone(), 0, Some(u.clone())).unwrap(),
        },
        Player {
            name: "two".into(),
            strategy: u.clone(),
            constraint: k,
            preference: PreferenceMap::from_utility_expr("-(x2 - x1)^2", u.clone(), 1, Some(u)).unwrap(),
        },
    ])
    .unwrap()
}

fn test_games() -> Vec<GameInstance> {
    let mut out = vec![quadratic()];
    out.extend(game_fleet(5, 3).into_iter().map(|(_, g)| g));
    out
}

#[test]
fn equilibrium_check_matches_best_responses() {
    for g in test_games() {
        for x in profile_grid(&g, 21) {
            let a = is_equilibrium(&g, &x, 1e-12).unwrap().verdict;
            let b = gnep_best_response_check(&g, &x, 201, 1e-12).unwrap();
            assert_eq!(a, b, "at {x:?}");
        }
    }
}

#[test]
fn brute_force_points_are_equilibria() {
    for g in test_games() {
        let tol = 1.5 * grid_spacing(&g.profile_box(), 41);
        let pts = brute_force_equilibria(&g, 41).unwrap();
        assert!(!pts.is_empty());
        for x in pts {
            assert!(is_equilibrium(&g, &x, tol).unwrap().verdict);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shrinking_tol_never_creates_equilibria(x in prop::collection::vec(0.0..1.0f64, 2), t in 1e-9..0.2f64, which in 0usize..4) {
        let g = &test_games()[which];
        let loose = is_equilibrium(g, &x, t).unwrap().verdict;
        let tight = is_equilibrium(g, &x, t / 10.0).unwrap().verdict;
        prop_assert!(!tight || loose);
    }
}
