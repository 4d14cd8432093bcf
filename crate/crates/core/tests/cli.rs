mod common;

use std::process::Command as Process;

use common::{golden_path, problem_path, GOLDEN_CASES};
use deformq::cli::{
    check_gauge_round_trip, load_problem, run_command, Command, CommandResult, Overrides,
    ProblemFile, Report,
};
use deformq::Status;

fn run_binary(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_deformq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to_string(problem: &str, command: &str, extra: &[&str]) -> String {
    let path = problem_path(problem);
    let mut args = vec!["--problem", path.to_str().unwrap(), "--command", command];
    args.extend_from_slice(extra);
    let out = run_binary(&args);
    assert!(
        out.status.success(),
        "{problem} {command}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn golden_reports_are_reproduced_byte_for_byte() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, problem, command, extra) in GOLDEN_CASES {
        let first = run_to_string(problem, command, extra);
        let second = run_to_string(problem, command, extra);
        assert_eq!(first, second, "{name}: two runs differ");
        let golden = golden_path(name);
        if update {
            std::fs::write(&golden, &first).unwrap();
        }
        let expected = std::fs::read_to_string(&golden)
            .unwrap_or_else(|e| panic!("{}: {e} (set UPDATE_GOLDEN=1 to create)", golden.display()));
        assert_eq!(first, expected, "{name}: differs from golden file");
    }
}

#[test]
fn out_flag_matches_stdout_and_sequential_mode() {
    let dir = std::env::temp_dir().join(format!("deformq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("report.json");
    let problem = problem_path("removable");
    let status = run_binary(&[
        "--problem",
        problem.to_str().unwrap(),
        "--command",
        "eliminate",
        "--sequential",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written, run_to_string("removable", "eliminate", &[]));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    let good = problem_path("removable");
    let good = good.to_str().unwrap();
    let code = |args: &[&str]| run_binary(args).status.code().unwrap();
    assert_eq!(code(&["--problem", good, "--command", "eliminate"]), 0);
    assert_eq!(code(&["--problem", good, "--command", "frobnicate"]), 1);
    assert_eq!(code(&["--problem", "/nonexistent.json", "--command", "eliminate"]), 1);
    assert_eq!(code(&["--problem", good]), 1);
    assert_eq!(code(&["--problem", good, "--command", "eliminate", "--order", "9"]), 1);
    // OBSTRUCTED is still a completed computation.
    let obstructed = problem_path("obstructed");
    assert_eq!(code(&["--problem", obstructed.to_str().unwrap(), "--command", "eliminate"]), 0);
    // A star that is not associative is a precondition failure for obstruction.
    let nonassoc = problem_path("nonassoc");
    let out = run_binary(&["--problem", nonassoc.to_str().unwrap(), "--command", "obstruction"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_is_recorded() {
    let report = run_to_string("casimir_r3", "eliminate", &["--seed", "12345"]);
    let report = Report::from_json(&report).unwrap();
    assert_eq!(report.seed, 12345);
    let report = Report::from_json(&run_to_string("casimir_r3", "eliminate", &[])).unwrap();
    assert_eq!(report.seed, 11);
}

#[test]
fn report_round_trip_is_a_fixed_point() {
    for (name, ..) in GOLDEN_CASES {
        let text = std::fs::read_to_string(golden_path(name)).unwrap();
        let parsed = Report::from_json(&text).unwrap();
        assert_eq!(parsed.to_json(), text, "{name}");
    }
}

#[test]
fn problem_round_trip_is_a_fixed_point() {
    for entry in std::fs::read_dir(problem_path("x").parent().unwrap()).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let once = ProblemFile::from_json(&text).unwrap().to_json();
        assert_eq!(ProblemFile::from_json(&once).unwrap().to_json(), once);
    }
}

#[test]
fn removable_report_gauge_round_trips() {
    let p = load_problem(&problem_path("removable")).unwrap();
    let report = run_command(Command::Eliminate, &p, &Overrides::default()).unwrap();
    let CommandResult::Eliminate(e) = &report.result else {
        panic!("wrong result kind");
    };
    assert_eq!(e.status, Status::Trivialized);
    assert!(e.gauge.iter().any(|d| !d.is_empty()));
    assert!(check_gauge_round_trip(&p, &report).unwrap());
    // Tampering with the reported star is detected.
    let mut forged = report.clone();
    if let CommandResult::Eliminate(e) = &mut forged.result {
        e.transformed[1][0].coefficient = "7".into();
    }
    assert!(!check_gauge_round_trip(&p, &forged).unwrap());
}

#[test]
fn spec_level_command_examples() {
    let so3 = Report::from_json(&run_to_string("so3", "check-poisson", &[])).unwrap();
    let CommandResult::CheckPoisson(r) = so3.result else { panic!() };
    assert_eq!(r.summary, "Poisson: yes");

    let na = Report::from_json(&run_to_string("nonassoc", "assoc-check", &[])).unwrap();
    let CommandResult::AssocCheck(r) = na.result else { panic!() };
    let r2 = &r.residuals[1];
    assert!(!r2.zero);
    assert!(r2.witness.is_some());
    assert_eq!(r2.probe.as_ref().unwrap().value, "-12*x^2");

    let ob = Report::from_json(&run_to_string("obstructed", "obstruction", &[])).unwrap();
    let CommandResult::Obstruction(r) = ob.result else { panic!() };
    assert_eq!(serde_json::to_string(&r.class).unwrap(), r#"{"(1,2)":"2"}"#);
}
