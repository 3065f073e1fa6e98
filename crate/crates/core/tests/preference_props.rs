use genvi::geometry::linalg::linspace;
use genvi::geometry::BoxRegion;
use genvi::preferences::{
    check_lower_midpoint, check_upper_midpoint, example_31_utility, fixture, is_open_in_domain, MidpointParams,
    PreferenceMap, FIXTURES,
};
use proptest::prelude::*;

#[test]
fn example_one_is_irreflexive() {
    let p = fixture("example-3.1").unwrap();
    for x in linspace(0.0, 1.0, 1000) {
        assert!(!p.eval(&[x], None).unwrap().contains(&[x], 0.0), "at {x}");
    }
}

#[test]
fn example_two_is_reflexive_exactly_on_its_constant_piece() {
    // P(x) = [1/2, 3/4] for x > 1/2 contains x up to 3/4
    let p = fixture("example-3.2").unwrap();
    for x in linspace(0.0, 1.0, 1000) {
        let inside = p.eval(&[x], None).unwrap().contains(&[x], 0.0);
        assert_eq!(inside, x > 0.5 && x <= 0.75, "at {x}");
    }
}

#[test]
fn utility_map_matches_table() {
    let table = fixture("example-3.1").unwrap();
    let fitted = PreferenceMap::from_utility(example_31_utility, BoxRegion::unit(1)).unwrap();
    let probes = linspace(0.0, 1.0, 1000);
    for x in linspace(0.0, 1.0, 1000) {
        let a = table.eval(&[x], None).unwrap();
        let b = fitted.eval(&[x], None).unwrap();
        for &z in &probes {
            if a.contains(&[z], 0.0) {
                assert!(b.contains(&[z], 1e-9), "x = {x}, z = {z}");
            }
            if b.contains(&[z], 0.0) {
                assert!(a.contains(&[z], 1e-9), "x = {x}, z = {z}");
            }
        }
    }
}

fn coarse() -> MidpointParams {
    MidpointParams {
        t_steps: 16,
        ..MidpointParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn open_values_give_lower_midpoint(x in 0.0..1.0f64, which in 0..2usize) {
        let p = fixture(FIXTURES[which]).unwrap();
        let params = coarse();
        if is_open_in_domain(&p, &[x], None, &params).open {
            prop_assert!(check_lower_midpoint(&p, &[x], None, &params).verified());
        }
    }

    #[test]
    fn verified_witnesses_survive_refinement(x in 0.0..1.0f64) {
        let p = fixture("example-3.1").unwrap();
        let v = check_lower_midpoint(&p, &[x], None, &coarse());
        prop_assert!(v.verified());
        prop_assert!(v.recheck(&p, 10));
    }

    #[test]
    fn empty_values_are_vacuous(x in 0.0..1.0f64) {
        let p = PreferenceMap::empty(BoxRegion::unit(1));
        let lo = check_lower_midpoint(&p, &[x], None, &coarse());
        let up = check_upper_midpoint(&p, &[x], None, &coarse());
        prop_assert!(lo.verified() && lo.vacuous);
        prop_assert!(up.verified() && up.vacuous);
    }
}
