use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use genvi::preferences::FIXTURES;
use genvi_cli::commands::{self, Overrides};
use genvi_cli::instance::{export_fixture, load_str, to_toml, Instance};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_genvi"))
}

fn instances() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn shipped_instances_meet_their_expectations() {
    let cases = [
        ("example-3.1.toml", vec!["classify", "solve-vi", "solve-qvi", "verify", "audit"]),
        ("example-3.2.toml", vec!["classify", "audit"]),
        ("quadratic-game.toml", vec!["solve-qvi", "verify"]),
        ("moving-constraint-game.toml", vec!["solve-qvi"]),
    ];
    for (file, commands) in cases {
        let path = instances().join(file);
        for c in commands {
            let out = run(&[c, path.to_str().unwrap()]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "{c} {file}:\n{}{}",
                String::from_utf8_lossy(&out.stdout),
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
}

#[test]
fn solve_vi_reports_the_unique_maximal_point() {
    let path = instances().join("example-3.1.toml");
    let out = run(&["solve-vi", path.to_str().unwrap(), "--format", "machine"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["points"], serde_json::json!([[0.5]]));
    assert_eq!(v["result"]["all_maximal"], true);
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_at_a_quarter_gives_a_descent_witness() {
    let path = instances().join("example-3.1.toml");
    let out = run(&["verify", path.to_str().unwrap(), "--point", "0.25", "--format", "machine"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = &v["result"]["certificate"];
    assert_eq!(c["verified"], false);
    assert_eq!(c["multiplier"], serde_json::json!([-1.0]));
    assert_eq!(c["descent_direction"], serde_json::json!([0.75]));
}

#[test]
fn machine_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = instances().join("moving-constraint-game.toml");
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let o = run(&["solve-qvi", path.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        files.push(std::fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let a = run(&["reproduce-paper", "--format", "machine", "--seed", "11"]).stdout;
    let b = run(&["reproduce-paper", "--format", "machine", "--seed", "11"]).stdout;
    assert_eq!(a, b);
    let c = run(&["reproduce-paper", "--format", "machine", "--seed", "12"]).stdout;
    assert_ne!(a, c, "seed must reach the sampled points");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "version = 1\nname = \"x\"\nplayers = []\nsurprise = true\n").unwrap();
    let o = run(&["classify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("surprise"), "{err}");

    assert_eq!(run(&["solve-vi"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "/nonexistent.toml"]).status.code(), Some(2));

    let path = instances().join("example-3.1.toml");
    assert_eq!(run(&["solve-vi", path.to_str().unwrap(), "--grid", "1"]).status.code(), Some(2));
    // expectation says 0.25 is not maximal; claiming it is makes a verdict failure
    let text = std::fs::read_to_string(&path).unwrap().replace("maximal = false", "maximal = true");
    let wrong = dir.path().join("wrong.toml");
    std::fs::write(&wrong, text).unwrap();
    assert_eq!(run(&["verify", wrong.to_str().unwrap()]).status.code(), Some(1));
}

fn fixture_instance(name: &str) -> String {
    format!(
        "version = 1\nname = \"{name}\"\n\n[[players]]\nname = \"decision-maker\"\nlo = [0.0]\nhi = [1.0]\n\
         constraint = {{ kind = \"box\", lo = [0.0], hi = [1.0] }}\n\
         preference = {{ kind = \"fixture\", name = \"{name}\" }}\n"
    )
}

fn verdicts(inst: &Instance) -> Vec<serde_json::Value> {
    let o = Overrides {
        grid: Some(201),
        ..Overrides::default()
    };
    // errors count too: Example 3.2 is reflexive, so its operator breaks down
    let outcome = |r: Result<genvi_cli::Report, genvi_cli::CliError>| match r {
        Ok(rep) => rep.result,
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    };
    let mut out = vec![
        outcome(commands::classify(inst, &Overrides::default())),
        outcome(commands::solve_vi(inst, &o)),
        outcome(commands::audit(inst, &Overrides::default())),
    ];
    for x in [0.0, 0.25, 0.5, 0.6, 0.75, 1.0] {
        let o = Overrides {
            point: Some(vec![x]),
            ..Overrides::default()
        };
        out.push(outcome(commands::verify(inst, &o)));
    }
    out
}

#[test]
fn fixtures_round_trip_through_export() {
    for name in FIXTURES {
        let builtin = load_str(&fixture_instance(name), "builtin").unwrap();
        let exported = load_str(&to_toml(&export_fixture(name).unwrap()).unwrap(), "exported").unwrap();
        let (a, b) = (&builtin.game.players()[0].preference, &exported.game.players()[0].preference);
        let grid = genvi::geometry::linalg::linspace(0.0, 1.0, 401);
        for &x in &grid {
            let (va, vb) = (a.eval(&[x], None).unwrap(), b.eval(&[x], None).unwrap());
            for &z in &grid {
                assert_eq!(va.contains(&[z], 0.0), vb.contains(&[z], 0.0), "{name} x = {x} z = {z}");
            }
        }
        assert_eq!(verdicts(&builtin), verdicts(&exported), "{name}");
    }
}

#[test]
fn export_fixture_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.toml");
    let o = run(&["export-fixture", "example-3.2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(load_str(&text, "e.toml").is_ok());
    assert_eq!(run(&["export-fixture", "nope"]).status.code(), Some(2));
}
