//! End-to-end tests of the `bvattack` binary. Golden reports live in
//! `tests/golden`; run with `BVATTACK_BLESS=1` to rewrite them.

use std::path::Path;
use std::process::{Command, Output};

use bvattack::formats::CipherFile;
use bvattack::report::{Report, SCHEMA};
use serde_json::Value;

fn bvattack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvattack"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env_remove("BVATTACK_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str, args: &[&str], code: i32) {
    let out = bvattack(args);
    assert_eq!(out.status.code(), Some(code), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("BVATTACK_BLESS").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert_eq!(text, expected, "report differs from {name}");
    assert_eq!(Report::parse(&text).unwrap().render(), text);
}

#[test]
fn golden_spectrum() {
    golden("spectrum_xor_and.json", &["spectrum", "tests/fixtures/xor_and.boolfn"], 0);
}

#[test]
fn golden_lsfind_boolean() {
    golden("lsfind_xor_and.json", &["lsfind", "tests/fixtures/xor_and.boolfn", "--p", "12", "--seed", "2"], 0);
}

#[test]
fn golden_lsfind_permutation() {
    golden("lsfind_perm4.json", &["lsfind", "tests/fixtures/perm4.vecfn", "--seed", "2"], 1);
}

#[test]
fn golden_attack_em() {
    golden("attack_em.json", &["attack-em", "tests/fixtures/em8.challenge", "--seed", "1"], 0);
}

#[test]
fn golden_attack_diff() {
    golden("attack_diff.json", &["attack-diff", "tests/fixtures/toy4.challenge", "--q", "4", "--seed", "1"], 0);
}

#[test]
fn golden_attack_impossible() {
    golden("attack_impossible.json", &["attack-impossible", "tests/fixtures/toy4.challenge", "--seed", "1"], 0);
}

#[test]
fn golden_distinguisher() {
    golden("distinguish_feistel.json", &["distinguish-feistel", "--n", "4", "--target", "feistel", "--seed", "1"], 0);
}

#[test]
fn recovered_key_matches_generator() {
    let full = CipherFile::parse(&std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/em8.cipher"),
    )
    .unwrap())
    .unwrap();
    let report = Report::parse(&stdout(&bvattack(&["attack-em", "tests/fixtures/em8.challenge", "--seed", "9"]))).unwrap();
    assert_eq!(report.result["verdict"]["Key"], Value::from(full.key("k1").unwrap()));
    assert_eq!(report.queries.unwrap().quantum, 64);
}

#[test]
fn generated_challenge_matches_fixture() {
    let out = bvattack(&["gen-cipher", "--kind", "even-mansour", "--n", "8", "--seed", "7", "--challenge"]);
    let fixture = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/em8.challenge")).unwrap();
    assert_eq!(stdout(&out), fixture);
}

#[test]
fn random_target_is_rejected_with_exit_one() {
    let out = bvattack(&["distinguish-feistel", "--n", "6", "--target", "random", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let report = Report::parse(&stdout(&out)).unwrap();
    assert_eq!(report.schema, SCHEMA);
    assert_eq!(report.result["verdict"], Value::from("No"));
}

#[test]
fn usage_errors_exit_two() {
    let out = bvattack(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());
    assert_eq!(bvattack(&["attack-em", "tests/fixtures/em8.challenge"]).status.code(), Some(2));
    assert_eq!(bvattack(&["attack-em", "tests/fixtures/nope", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(bvattack(&["attack-em", "tests/fixtures/toy4.challenge", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(bvattack(&["spectrum", "tests/fixtures/em8.challenge"]).status.code(), Some(2));
    assert_eq!(bvattack(&["verify-theorems", "--which", "T5", "--trials", "5", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(bvattack(&["verify-theorems", "--which", "T9", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(bvattack(&["verify-theorems", "--which", "T5"]).status.code(), Some(2));
    assert_eq!(bvattack(&["--help"]).status.code(), Some(0));
}

#[test]
fn out_flag_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["attack-em", "tests/fixtures/em8.challenge", "--seed", "1", "--out", path.to_str().unwrap()];
    let out = bvattack(&args);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout(&bvattack(&["attack-em", "tests/fixtures/em8.challenge", "--seed", "1"])));

    let timed = Report::parse(&stdout(&bvattack(&["attack-em", "tests/fixtures/em8.challenge", "--seed", "1", "--timing", "--threads", "2"]))).unwrap();
    assert_eq!(timed.timing.unwrap().threads, 2);
}

#[test]
fn thread_environment_variable() {
    let out = Command::new(env!("CARGO_BIN_EXE_bvattack"))
        .args(["attack-em", "tests/fixtures/em8.challenge", "--seed", "1", "--timing"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("BVATTACK_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(Report::parse(&stdout(&out)).unwrap().timing.unwrap().threads, 3);
    let out = Command::new(env!("CARGO_BIN_EXE_bvattack"))
        .args(["attack-em", "tests/fixtures/em8.challenge", "--seed", "1", "--timing", "--threads", "1"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("BVATTACK_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(Report::parse(&stdout(&out)).unwrap().timing.unwrap().threads, 1);
}

#[test]
fn verify_theorems_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"which": "T5", "n": 6, "trials": 40, "seed": 11}"#).unwrap();
    let out = bvattack(&["verify-theorems", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = Report::parse(&stdout(&out)).unwrap();
    assert_eq!(report.invocation["seed"], Value::from(11));
    assert_eq!(report.result["pass"], Value::from(true));
    let outcome = &report.result["outcomes"][0];
    assert_eq!(outcome["id"], Value::from("T5"));
    assert_eq!(outcome["trials"], Value::from(40));
}

#[test]
fn reports_name_every_parameter() {
    let report = Report::parse(&stdout(&bvattack(&["attack-smallprob", "tests/fixtures/toy4.challenge", "--seed", "2"]))).unwrap();
    for key in ["file", "file_sha256", "q", "l", "p", "seed"] {
        assert!(report.invocation.contains_key(key), "{key}");
    }
    assert_eq!(report.invocation["p"], Value::from(4u64.pow(3) * 16 * 16));
}
