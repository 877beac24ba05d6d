use std::path::PathBuf;
use std::process::{Command as Proc, Output};

use nfforge_cli::{parse_system, parse_system_str, CliError, SystemFile, EXIT_HYPOTHESIS, EXIT_OK, EXIT_PARSE};
use nfforge_core::spectrum::{classify_spectrum, eigenvalues_numeric, SpectrumCase};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn nfforge(args: &[&str], file: &str) -> (i32, serde_json::Value, Output) {
    let out = Proc::new(env!("CARGO_BIN_EXE_nfforge")).args(args).arg(fixture(file)).output().unwrap();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    (out.status.code().unwrap(), json, out)
}

#[test]
fn hyperbolic_fixture_loads_as_strong_hyperbolic() {
    let loaded = parse_system(&fixture("hyperbolic_2d")).unwrap();
    assert!(loaded.warnings.is_empty());
    let spec = eigenvalues_numeric(&loaded.system.real_linear_part().unwrap()).unwrap();
    let class = classify_spectrum(&spec, 1e-9).unwrap();
    assert_eq!(class.case, SpectrumCase::StrongHyperbolic);
    assert_eq!(class.m, vec![1, -1]);
}

#[test]
fn zero_denominator_is_a_parse_error() {
    let err = parse_system(&fixture("bad_rational")).unwrap_err();
    assert!(matches!(err, CliError::Parse(_)));
    assert_eq!(err.exit_code(), EXIT_PARSE);
}

#[test]
fn malformed_files_are_rejected() {
    let base = r#"{"n": 2, "order": 3, "linear_part": [["1","0"],["0","-1"]]"#;
    let cases = [
        format!(r#"{base}, "terms": [[{{"exponents": [4, 0], "coeff": "1"}}], []]}}"#),
        format!(r#"{base}, "terms": [[{{"exponents": [1, 0], "coeff": "1"}}], []]}}"#),
        format!(r#"{base}, "terms": [[{{"exponents": [2, 0, 0], "coeff": "1"}}], []]}}"#),
        format!(r#"{base}, "unknown": 1}}"#),
        r#"{"n": 2, "order": 3, "linear_part": [["1","0"]]}"#.to_string(),
        r#"{"n": 1, "order": 3, "linear_part": [["1"]]}"#.to_string(),
    ];
    for text in &cases {
        assert!(matches!(parse_system_str(text, "t"), Err(CliError::Parse(_))), "{text}");
    }
}

#[test]
fn wrong_integral_loads_with_warning() {
    let loaded = parse_system(&fixture("wrong_integral_2d")).unwrap();
    assert!(!loaded.warnings.is_empty());
}

#[test]
fn serialize_then_parse_is_identity() {
    for name in ["hyperbolic_2d", "elliptic_2d_sheared", "elliptic_4d", "weak_hyperbolic_3d", "weak_hyperbolic_2d_locus"] {
        let loaded = parse_system(&fixture(name)).unwrap();
        let file = SystemFile::from_system(Some(loaded.name.clone()), &loaded.system, Some(loaded.numeric.clone()));
        let text = serde_json::to_string_pretty(&file).unwrap();
        let again = parse_system_str(&text, "other").unwrap();
        assert_eq!(again, loaded, "{name}");
    }
}

#[test]
fn exit_codes_follow_failure_kind() {
    assert_eq!(nfforge(&["classify"], "bad_rational").0, EXIT_PARSE);
    assert_eq!(nfforge(&["normalize", "--order", "5"], "obstructed_2d").0, EXIT_HYPOTHESIS);
    assert_eq!(nfforge(&["normalize", "--order", "5"], "wrong_integral_2d").0, EXIT_HYPOTHESIS);
    assert_eq!(nfforge(&["normalize", "--order", "5"], "hyperbolic_2d").0, EXIT_OK);
}

#[test]
fn classify_weak_hyperbolic() {
    let (code, json, _) = nfforge(&["classify"], "weak_hyperbolic_3d");
    assert_eq!(code, EXIT_OK);
    assert_eq!(json["classification"]["case"], "WeakHyperbolic");
    assert_eq!(json["classification"]["k"], 1);
    assert_eq!(json["classification"]["m"], serde_json::json!([0, 1, -1]));
}

#[test]
fn invariants_of_elliptic_pair() {
    let (code, json, _) = nfforge(&["invariants"], "elliptic_2d");
    assert_eq!(code, EXIT_OK);
    assert_eq!(json["invariants"]["hilbert_basis"], serde_json::json!([[1, 1]]));
    assert_eq!(json["invariants"]["annihilated_by_linear_part"], true);
}

#[test]
fn non_semisimple_reports_diagnostic() {
    let (code, json, _) = nfforge(&["normalize", "--order", "4"], "non_semisimple_2d");
    assert_eq!(code, EXIT_HYPOTHESIS);
    let diags = json["diagnostics"].to_string();
    assert!(diags.contains("semisimple"), "{diags}");
    assert!(json.get("normal_form").is_none());
}

#[test]
fn report_writes_period_verdict_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json, _) = nfforge(&["report", "--out", dir.path().to_str().unwrap()], "elliptic_2d");
    assert_eq!(code, EXIT_OK);
    assert_eq!(json["verdicts"]["period"], true);
    assert_eq!(json["numeric"]["period"]["pass"], true);
    for scan in ["conjugacy", "period", "period_unscaled"] {
        let path = dir.path().join(format!("scan_{scan}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().count() >= 4, "{scan}: {text}");
    }
}

#[test]
fn verify_accepts_radii_override() {
    let (code, json, _) = nfforge(&["verify", "--radii", "0.1,0.05,0.02", "--seed", "3"], "hyperbolic_2d");
    assert_eq!(code, EXIT_OK);
    assert_eq!(json["numeric"]["conjugacy"]["radii"], serde_json::json!([0.1, 0.05, 0.02]));
    assert_eq!(json["numeric"]["seed"], 3);
}
