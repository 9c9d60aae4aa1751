//! End-to-end checks of the command line interface: frozen golden outputs,
//! byte-for-byte determinism across repeat runs and thread counts, exit
//! code families, and the one-line stderr contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_iwasawa-lab")
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn spec(name: &str) -> String {
    specs_dir().join(name).to_string_lossy().into_owned()
}

fn golden(name: &str) -> String {
    let path = specs_dir().join("golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("missing golden {path:?}: {e}"))
}

fn run_env(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    cmd.env_remove("IWLAB_DEGREE_CAP");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn CLI binary")
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn assert_clean_success(out: &Output, what: &str) {
    assert_eq!(
        out.status.code(),
        Some(0),
        "{what}: exit {:?}, stderr: {}",
        out.status.code(),
        stderr_str(out)
    );
    assert!(stderr_str(out).is_empty(), "{what}: unexpected stderr");
}

fn assert_failure(out: &Output, code: i32, what: &str) -> String {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{what}: exit {:?}, stderr: {}",
        out.status.code(),
        stderr_str(out)
    );
    let err = stderr_str(out);
    assert!(
        err.starts_with("error: "),
        "{what}: stderr does not start with 'error: ': {err}"
    );
    assert_eq!(
        err.trim_end_matches('\n').lines().count(),
        1,
        "{what}: stderr is not a single line: {err}"
    );
    err
}

#[test]
fn golden_outputs_are_reproduced_byte_for_byte() {
    let cases: [(&str, &str, &str); 12] = [
        ("simulate", "lambda-cyclic.json", "lambda-cyclic.simulate.tsv"),
        ("simulate", "direct-sum.json", "direct-sum.simulate.tsv"),
        ("simulate", "y-shifted.json", "y-shifted.simulate.tsv"),
        ("simulate", "glue-collapse.json", "glue-collapse.simulate.tsv"),
        ("fit", "mu-cyclic.json", "mu-cyclic.fit.txt"),
        ("fit", "direct-sum.json", "direct-sum.fit.txt"),
        ("fit", "y-shifted.json", "y-shifted.fit.txt"),
        ("stabilize", "lambda-cyclic.json", "lambda-cyclic.stabilize.txt"),
        ("stabilize", "glue-collapse.json", "glue-collapse.stabilize.txt"),
        ("cohomology", "action-trivial.json", "action-trivial.cohomology.txt"),
        ("cohomology", "action-regular.json", "action-regular.cohomology.txt"),
        ("check-ab", "transition-double.json", "transition-double.check-ab.txt"),
    ];
    for (sub, spec_name, golden_name) in cases {
        let out = run(&[sub, "--spec", &spec(spec_name)]);
        assert_clean_success(&out, &format!("{sub} {spec_name}"));
        assert_eq!(
            stdout_str(&out),
            golden(golden_name),
            "{sub} {spec_name} drifted from {golden_name}"
        );
    }
}

#[test]
fn repeat_runs_and_thread_counts_are_byte_identical() {
    let spec_path = spec("direct-sum.json");
    let first = run(&["simulate", "--spec", &spec_path]);
    let second = run(&["simulate", "--spec", &spec_path]);
    assert_clean_success(&first, "first run");
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stderr, second.stderr);
    let threaded = run(&["simulate", "--spec", &spec_path, "--threads", "4"]);
    assert_clean_success(&threaded, "threaded run");
    assert_eq!(first.stdout, threaded.stdout);
    // Failures are deterministic across thread counts too: the earliest
    // failing level is reported no matter which worker hit it first.
    let bad = spec("infinite-quotient.json");
    let seq = run(&["simulate", "--spec", &bad]);
    let par = run(&["simulate", "--spec", &bad, "--threads", "4"]);
    assert_eq!(seq.status.code(), par.status.code());
    assert_eq!(seq.stderr, par.stderr);
}

#[test]
fn parse_and_validation_problems_exit_2() {
    let out = run(&["simulate", "--spec", "/nonexistent/path.json"]);
    assert_failure(&out, 2, "missing file");

    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown.json");
    std::fs::write(
        &unknown,
        "{\"p\":3,\"precision\":6,\"mu_factors\":[1],\"levels\":[1,3],\"extra\":1}",
    )
    .unwrap();
    let out = run(&["simulate", "--spec", unknown.to_str().unwrap()]);
    let err = assert_failure(&out, 2, "unknown key");
    assert!(err.contains("line"), "no line diagnostic in: {err}");

    let out = run(&[
        "simulate",
        "--spec",
        &spec("mu-cyclic.json"),
        "--levels",
        "5..1",
    ]);
    assert_failure(&out, 2, "inverted level range");

    let out = run_env(
        &["simulate", "--spec", &spec("mu-cyclic.json")],
        &[("IWLAB_DEGREE_CAP", "abc")],
    );
    assert_failure(&out, 2, "bad degree cap env");

    // Clap's own usage errors share the family.
    let out = run(&["simulate"]);
    assert_eq!(out.status.code(), Some(2), "missing required flag");
}

#[test]
fn infinite_quotients_exit_3_and_name_the_level() {
    let out = run(&["simulate", "--spec", &spec("infinite-quotient.json")]);
    let err = assert_failure(&out, 3, "infinite quotient");
    assert!(err.contains("level 1"), "level not named: {err}");
}

#[test]
fn towers_off_the_growth_curve_exit_4() {
    let out = run(&["fit", "--spec", &spec("early-window.json")]);
    assert_failure(&out, 4, "no exact fit");
}

#[test]
fn exhausted_searches_exit_6() {
    let out = run_env(
        &["membership", "--p", "3", "--h", "0,1", "--B", "9"],
        &[("IWLAB_DEGREE_CAP", "27")],
    );
    assert_failure(&out, 6, "membership past the cap");
}

#[test]
fn membership_reports_the_minimum_level() {
    for (bound, expected) in [("1", "m=1\n"), ("4", "m=4\n")] {
        let out = run(&["membership", "--p", "3", "--h", "0,1", "--B", bound]);
        assert_clean_success(&out, "membership");
        assert_eq!(stdout_str(&out), expected, "B={bound}");
    }
    // The explicit flag is accepted and changes nothing.
    let out = run(&[
        "membership",
        "--p",
        "3",
        "--h",
        "0,1",
        "--B",
        "4",
        "--find-min",
    ]);
    assert_clean_success(&out, "membership --find-min");
    assert_eq!(stdout_str(&out), "m=4\n");
}

#[test]
fn nmm_reports_a_verified_witness() {
    let out = run(&["nmm", "--p", "3", "--f", "1", "--B", "2"]);
    assert_clean_success(&out, "nmm");
    let text = stdout_str(&out);
    assert!(text.starts_with("M=2\n"), "unexpected report: {text}");
    assert!(text.contains("\nverified=true\n"), "unexpected report: {text}");
}

#[test]
fn formula_outputs_are_exact() {
    let out = run(&[
        "formulas", "kida", "--degree", "2", "--lambda-minus-k", "0", "--ram-e", "3",
        "--half-degree", "3",
    ]);
    assert_clean_success(&out, "kida");
    assert_eq!(stdout_str(&out), "lambda_minus=6\n");

    let out = run(&["formulas", "hasse", "--n", "4", "--base", "2", "--d", "1", "--p", "3"]);
    assert_clean_success(&out, "hasse");
    assert_eq!(stdout_str(&out), "defect_log_order=9\n");

    let out = run(&["formulas", "rank", "--r2", "2", "--defect", "0"]);
    assert_clean_success(&out, "rank");
    assert_eq!(stdout_str(&out), "omega_rank=3\nm_plus_rank=1\n");

    for p in ["3", "5", "7"] {
        let out = run(&["formulas", "norm", "--p", p]);
        assert_clean_success(&out, "norm");
        let text = stdout_str(&out);
        for line in [
            "unit_constant_is_unit=true",
            "norm_equals_p_unit_plus_s_power=true",
            "norm_equals_p_plus_s_tail=true",
            "s_times_norm_is_zero=true",
        ] {
            assert!(text.contains(line), "p={p}: missing `{line}` in: {text}");
        }
    }
}

#[test]
fn pretty_output_reformats_without_tabs() {
    let out = run(&["simulate", "--spec", &spec("mu-cyclic.json"), "--pretty"]);
    assert_clean_success(&out, "simulate --pretty");
    let text = stdout_str(&out);
    assert!(!text.contains('\t'), "tabs left in pretty table: {text}");
    assert!(text.starts_with('n'), "header missing: {text}");

    let out = run(&["fit", "--spec", &spec("mu-cyclic.json"), "--pretty"]);
    assert_clean_success(&out, "fit --pretty");
    let text = stdout_str(&out);
    assert!(text.contains(" = "), "pairs not aligned: {text}");
}

#[test]
fn level_override_restricts_the_tower() {
    // The document asks for levels 1..3; the flag narrows it to 2..3.
    let out = run(&[
        "simulate",
        "--spec",
        &spec("mu-cyclic.json"),
        "--levels",
        "2..3",
    ]);
    assert_clean_success(&out, "level override");
    let text = stdout_str(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "expected two rows: {text}");
    assert!(rows[0].starts_with("2\t"));
    assert!(rows[1].starts_with("3\t"));
}
