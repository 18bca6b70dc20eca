//! End-to-end runs of the installed binary: output contracts, exit codes,
//! and byte-level determinism of the files it writes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn flowsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

#[test]
fn select_reports_the_same_preferred_binding_for_every_solver() {
    let registry = fixture("smart_home_registry.json");
    let workflow = fixture("morning_workflow.json");
    let model = fixture("morning_model.json");
    for solver in ["brute_force", "hill_climbing", "simulated_annealing", "genetic_algorithm"] {
        let out = flowsel(&[
            "select",
            "--registry",
            registry.to_str().unwrap(),
            "--workflow",
            workflow.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--solver",
            solver,
        ]);
        assert!(out.status.success(), "{solver}: {}", stderr(&out));
        assert_eq!(
            stdout(&out),
            "alarm: alarm_brand_a; make_coffee: cm_brand_b; score 0.6\n",
            "solver {solver}"
        );
        assert!(stderr(&out).contains("evaluations"), "stats go to stderr");
    }
}

#[test]
fn policy_files_verify_and_reproduce_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("policy.json");
    let registry = fixture("smart_home_registry.json");
    let workflow = fixture("morning_workflow.json");
    let model = fixture("morning_model.json");
    let args = [
        "policy",
        "--registry",
        registry.to_str().unwrap(),
        "--workflow",
        workflow.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ];

    let first = flowsel(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(
        stdout(&first),
        format!(
            "2 allow rules + default deny -> {}; least-privilege PASS\n",
            out_path.display()
        )
    );
    let bytes = std::fs::read(&out_path).unwrap();

    let second = flowsel(&args);
    assert!(second.status.success());
    assert_eq!(std::fs::read(&out_path).unwrap(), bytes, "policy file changed between runs");

    // A fixed assignment skips selection and moves the rules with it.
    let assignment = dir.path().join("assignment.json");
    std::fs::write(&assignment, r#"{"alarm": "alarm_brand_a", "make_coffee": "cm_brand_a"}"#)
        .unwrap();
    let fixed = flowsel(&[
        "policy",
        "--registry",
        fixture("smart_home_registry.json").to_str().unwrap(),
        "--workflow",
        fixture("morning_workflow.json").to_str().unwrap(),
        "--assignment",
        assignment.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--table",
    ]);
    assert!(fixed.status.success(), "{}", stderr(&fixed));
    assert!(stdout(&fixed).contains("least-privilege PASS"));
    assert!(stdout(&fixed).contains("allow 10.0.0.5 -> 10.0.0.8:443/tcp"));
    assert!(stdout(&fixed).contains("deny *"));
    let moved = std::fs::read(&out_path).unwrap();
    assert_ne!(moved, bytes, "different assignment, same rules");
    assert!(String::from_utf8(moved).unwrap().contains("10.0.0.8"));
}

#[test]
fn unreadable_input_exits_with_the_invalid_input_code() {
    let out = flowsel(&[
        "select",
        "--registry",
        "/no/such/file.json",
        "--workflow",
        fixture("morning_workflow.json").to_str().unwrap(),
        "--model",
        fixture("morning_model.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: "));
}

#[test]
fn unsupported_functions_exit_with_the_infeasible_code() {
    let dir = tempfile::tempdir().unwrap();
    let workflow = dir.path().join("workflow.json");
    std::fs::write(
        &workflow,
        r#"{"functions": ["alarm", "fly"], "edges": [["alarm", "fly"]]}"#,
    )
    .unwrap();
    let out = flowsel(&[
        "select",
        "--registry",
        fixture("smart_home_registry.json").to_str().unwrap(),
        "--workflow",
        workflow.to_str().unwrap(),
        "--model",
        fixture("morning_model.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("fly"));
}

#[test]
fn oversized_search_spaces_exit_with_the_cap_code() {
    let out = flowsel(&[
        "select",
        "--registry",
        fixture("smart_home_registry.json").to_str().unwrap(),
        "--workflow",
        fixture("morning_workflow.json").to_str().unwrap(),
        "--model",
        fixture("morning_model.json").to_str().unwrap(),
        "--brute-force-cap",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn bench_csv_reproduces_exactly_apart_from_wall_time() {
    let args = [
        "bench",
        "--f-counts",
        "2,3",
        "--runs",
        "2",
        "--seed",
        "11",
        "--sa-steps",
        "500",
        "--ga-generations",
        "10",
        "--ga-population",
        "10",
        "--format",
        "csv",
    ];
    let strip = |text: &str| -> Vec<String> {
        text.lines()
            .map(|line| line.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let first = flowsel(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let second = flowsel(&args);
    assert!(second.status.success());

    let rows = strip(&stdout(&first));
    assert_eq!(rows, strip(&stdout(&second)));
    assert_eq!(
        rows[0],
        "f_count,solver,run,seed,best_score,optimal_score,hit,evaluations"
    );
    // 2 sizes x 2 runs x 4 solvers.
    assert_eq!(rows.len(), 1 + 16);
}

#[test]
fn synthesized_instances_validate_and_solve_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowsel(&[
        "synth",
        "--f-count",
        "3",
        "--seed",
        "9",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("planted score 0.421875"), "0.75^3: {}", stdout(&out));

    let registry = dir.path().join("registry.json");
    let workflow = dir.path().join("workflow.json");
    let model = dir.path().join("model.json");

    let validated = flowsel(&[
        "validate",
        "--registry",
        registry.to_str().unwrap(),
        "--workflow",
        workflow.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    assert!(validated.status.success(), "{}", stderr(&validated));
    let log = stdout(&validated);
    for line in ["registry OK", "workflow OK", "model OK", "fit OK", "coverage OK"] {
        assert!(log.contains(line), "missing {line:?} in {log}");
    }

    let selected = flowsel(&[
        "select",
        "--registry",
        registry.to_str().unwrap(),
        "--workflow",
        workflow.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    assert!(selected.status.success(), "{}", stderr(&selected));
    assert!(stdout(&selected).ends_with("score 0.421875\n"), "{}", stdout(&selected));

    let policy = flowsel(&[
        "policy",
        "--registry",
        registry.to_str().unwrap(),
        "--workflow",
        workflow.to_str().unwrap(),
        "--assignment",
        dir.path().join("planted_assignment.json").to_str().unwrap(),
        "--out",
        dir.path().join("policy.json").to_str().unwrap(),
    ]);
    assert!(policy.status.success(), "{}", stderr(&policy));
    assert!(stdout(&policy).contains("least-privilege PASS"));
}

#[test]
fn policy_requires_a_model_or_an_assignment() {
    let out = flowsel(&[
        "policy",
        "--registry",
        fixture("smart_home_registry.json").to_str().unwrap(),
        "--workflow",
        fixture("morning_workflow.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "clap usage errors exit 2");
}
