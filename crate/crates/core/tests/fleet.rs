use genvi::fleet::{game_fleet, single_agent_fleet, SingleInstance};
use genvi::games::GameInstance;
use genvi::normal_cones::{check_properties, PropertySamples, ALL_PROPERTIES};
use genvi::preferences::MidpointParams;
use genvi::reformulation::{audit_assumptions, equilibrium_via_qvi, maximal_via_vi, AuditParams, SolveParams};

const SEED: u64 = 20240611;

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

fn audited(inst: &SingleInstance) -> bool {
    let g = GameInstance::single(inst.preference.clone(), inst.feasible.clone()).unwrap();
    let rep = audit_assumptions(&g, &light_audit());
    assert!(rep.passed(), "{}: {:?}", inst.name, rep.failed());
    rep.compact()
}

#[test]
fn verified_vi_solutions_are_maximal_and_exist() {
    for inst in single_agent_fleet(SEED, 16) {
        let compact = audited(&inst);
        let run = maximal_via_vi(&inst.preference, &inst.feasible, &SolveParams::default())
            .unwrap_or_else(|e| panic!("{}: {e}", inst.name));
        assert!(run.solutions.iter().all(|s| s.maximality.maximal));
        if compact {
            assert!(!run.solutions.is_empty(), "{} has no verified solution", inst.name);
        }
    }
}

#[test]
fn verified_qvi_solutions_are_equilibria_and_exist() {
    let params = SolveParams {
        grid: 101,
        ..SolveParams::default()
    };
    for (name, g) in game_fleet(SEED, 6) {
        let rep = audit_assumptions(&g, &light_audit());
        assert!(rep.passed(), "{name}: {:?}", rep.failed());
        let run = equilibrium_via_qvi(&g, &params).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!run.solutions.is_empty(), "{name}");
        assert!(run.solutions.iter().all(|s| s.equilibrium.verdict));
    }
}

#[test]
fn normal_cone_properties_hold_on_fleet() {
    for inst in single_agent_fleet(SEED ^ 1, 24) {
        let pts = inst.samples.iter().map(|x| (x.clone(), vec![])).collect();
        let mut samples = PropertySamples::new(pts);
        samples.cap.t_steps = 16;
        samples.cap.w_per_axis = 5;
        let rep = check_properties(&inst.preference, &ALL_PROPERTIES, &samples);
        for o in &rep.outcomes {
            assert!(o.passed(), "{} {:?}: {:?}", inst.name, o.property, o.violations.first());
        }
    }
}
