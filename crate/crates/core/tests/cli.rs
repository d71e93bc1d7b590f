//! End-to-end runs of the `varisk` binary.

use std::path::Path;
use std::process::{Command, Output};

use varisk::scenario::{load_scenario, parse_document, FIXTURES};

fn varisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varisk")).args(args).env_remove("VARISK_SCENARIO_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .to_string()
}

fn fixture(name: &str) -> &'static str {
    FIXTURES.iter().find(|(n, _)| *n == name).unwrap().1
}

#[test]
fn norm_of_constant_payoff() {
    let o = varisk(&["norm", "--scenario", "constant", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = field(&stdout(&o), "result.norm.value").parse().unwrap();
    assert!((v - 2.5).abs() <= 1e-9, "{v}");
}

#[test]
fn entropic_risk_of_two_point() {
    let o = varisk(&["risk", "--scenario", "two_point", "--payoff", "f", "--utility", "entropic", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = field(&stdout(&o), "result.rho.value").parse().unwrap();
    assert!((v + 0.379_885_49).abs() < 1e-7, "{v}");
}

#[test]
fn cvar_inconsistency_is_reported_not_failed() {
    let o = varisk(&["consistency", "--scenario", "four_leaf", "--utility", "cvar", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(field(&text, "finding.verdict"), "inconsistent");
    assert!(text.contains("witness.payoff = "));

    let o = varisk(&["consistency", "--scenario", "four_leaf", "--utility", "entropic", "--trials", "500", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "finding.verdict"), "consistent");
}

#[test]
fn invalid_weights_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, fixture("two_point").replace("probability = 0.5\n\n[[outcomes]]", "probability = 0.48\n\n[[outcomes]]"))
        .unwrap();
    let o = varisk(&["risk", "--scenario", path.to_str().unwrap(), "--utility", "entropic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("weights sum"), "{}", stdout(&o));
}

#[test]
fn strict_mode_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.toml");
    std::fs::write(&path, format!("colour = \"red\"\n{}", fixture("minimal"))).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(varisk(&["risk", "--scenario", p]).status.code(), Some(0));
    let o = varisk(&["risk", "--scenario", p, "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("colour"));
}

#[test]
fn exit_codes_separate_input_errors_from_contract_violations() {
    let not_accepted = varisk(&["decompose", "--scenario", "four_leaf", "--utility", "cvar", "--payoff", "h", "--composed"]);
    assert_eq!(not_accepted.status.code(), Some(2));
    let failed = varisk(&["decompose", "--scenario", "four_leaf", "--utility", "cvar", "--payoff", "h"]);
    assert_eq!(failed.status.code(), Some(1));
    let ok = varisk(&["decompose", "--scenario", "four_leaf", "--utility", "entropic", "--payoff", "g"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(varisk(&["risk", "--bogus"]).status.code(), Some(2));
    assert_eq!(varisk(&["risk", "--scenario", "no_such_scenario"]).status.code(), Some(2));
    assert_eq!(varisk(&["risk", "--scenario", "four_leaf", "--utility", "missing"]).status.code(), Some(2));
}

#[test]
fn structured_output_is_deterministic() {
    for args in [
        &["consistency", "--scenario", "four_leaf", "--utility", "cvar", "--trials", "300", "--seed", "3"][..],
        &["dual-check", "--scenario", "two_asset", "--utility", "entropic"][..],
        &["conditional", "--scenario", "four_leaf", "--level", "1", "--density", "q"][..],
    ] {
        let mut args = args.to_vec();
        args.extend(["--format", "structured"]);
        let (a, b) = (varisk(&args), varisk(&args));
        assert_eq!(a.stdout, b.stdout);
        assert!(!stdout(&a).contains("wall"));
    }
}

#[test]
fn scenario_directory_lookup() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("mine.toml"), fixture("two_point").replace("name = \"two_point\"", "name = \"mine\""))
        .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_varisk"))
        .args(["risk", "--scenario", "mine", "--payoff", "f", "--utility", "cvar", "--format", "structured"])
        .env("VARISK_SCENARIO_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(field(&text, "config.scenario").ends_with("mine.toml"), "{text}");
    // CVaR at level 0.5 of (0, 1) with equal weights is the loss of the worse outcome
    assert_eq!(field(&text, "result.rho.value").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn scenario_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in FIXTURES {
        let (doc, _) = parse_document(text, true).unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, doc.to_toml().unwrap()).unwrap();
        let (again, scenario) = load_scenario(Path::new(&path), true).unwrap();
        assert_eq!(doc, again, "{name}");
        assert_eq!(scenario.name, *name);
        let payoff = doc.payoffs.keys().next().unwrap();
        let utility = doc.utilities.keys().next().unwrap();
        let args = |scenario: &str| {
            varisk(&["risk", "--scenario", scenario, "--payoff", payoff, "--utility", utility, "--format", "structured"])
        };
        let (a, b) = (args(name), args(path.to_str().unwrap()));
        assert_eq!(field(&stdout(&a), "result.rho.value"), field(&stdout(&b), "result.rho.value"));
    }
}

#[test]
fn selftest_with_reduced_trials() {
    let o = varisk(&["selftest", "--trials", "50", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("status = ok"));
}
