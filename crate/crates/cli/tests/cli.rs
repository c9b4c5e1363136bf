use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tbprim::cipher::CipherFile;
use tbprim::{BitMatrix, Vbf};
use tbprim_cli::fixtures::{bundled_dir, generated_fixtures, serpent_fixtures, TOY_TRAPDOOR_SEED};

fn tbprim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbprim"))
        .args(args)
        .output()
        .expect("run tbprim")
}

fn fixture(name: &str) -> String {
    bundled_dir().join(name).display().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn bundled_fixtures_match_generators() {
    let mut files = generated_fixtures(TOY_TRAPDOOR_SEED).unwrap();
    files.extend(serpent_fixtures().unwrap());
    for f in files {
        let on_disk = fs::read_to_string(bundled_dir().join(&f.path)).unwrap();
        assert_eq!(on_disk, f.contents, "{} is stale; rerun `tbprim fixtures write`", f.path);
    }
}

fn round_trip_dir(dir: &Path) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(_) => {
                round_trip_dir(&path);
                continue;
            }
        };
        match path.extension().and_then(|e| e.to_str()) {
            Some("sbox") => {
                let f = Vbf::parse_sbox(&text).unwrap();
                assert_eq!(Vbf::parse_sbox(&f.to_sbox_text()).unwrap(), f);
            }
            Some("mat") => {
                let m = BitMatrix::parse_text(&text).unwrap();
                assert_eq!(m.to_text(), text);
            }
            Some("json") => {
                let c = CipherFile::parse(&text).unwrap();
                assert_eq!(CipherFile::parse(&c.to_json().unwrap()).unwrap(), c);
            }
            _ => {}
        }
    }
}

#[test]
fn fixtures_round_trip() {
    round_trip_dir(&bundled_dir());
}

#[test]
fn identity_sbox_report() {
    let v = stdout_json(&tbprim(&["sbox", "analyze", &fixture("identity4.sbox")]));
    assert_eq!(v["tool"], "tbprim");
    assert_eq!(v["command"], "sbox analyze");
    assert_eq!(v["payload"]["ddt"]["uniformity"], 16);
    assert_eq!(v["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn serpent_sbox_needs_normalization() {
    let plain = stdout_json(&tbprim(&["sbox", "analyze", &fixture("serpent/S0.sbox")]));
    assert!(plain["payload"]["anti_invariance"].is_null());
    let norm = stdout_json(&tbprim(&["sbox", "analyze", &fixture("serpent/S0.sbox"), "--normalize"]));
    let ai = &norm["payload"]["anti_invariance"];
    assert_eq!(ai["normalized_by"], 3);
    assert!(ai["plain_degree"].as_u64().is_some());
    assert_eq!(norm["payload"]["ddt"]["uniformity"], 4);
}

#[test]
fn identity_layer_is_not_proper() {
    let v = stdout_json(&tbprim(&["layer", "check", &fixture("identity8.mat"), "--bricks", "2x4"]));
    assert_eq!(v["payload"]["proper"], false);
    assert_eq!(v["payload"]["invariant_bricks"], serde_json::json!([0]));
}

#[test]
fn json_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = tbprim(&["--json", path.to_str().unwrap(), "cipher", "certify", &fixture("toy-trapdoor.json")]);
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("inconclusive"));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["payload"]["verdict"], "inconclusive");
    // Spec file, its layer and both S-boxes.
    assert_eq!(v["inputs"].as_array().unwrap().len(), 4);
    let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 2);
}

#[test]
fn oracle_verdicts() {
    let good = stdout_json(&tbprim(&["group", "oracle", &fixture("toy-good.json")]));
    assert_eq!(good["payload"]["scan"]["primitive"], true);
    let trans = stdout_json(&tbprim(&["group", "oracle", &fixture("translations-only.json")]));
    assert_eq!(trans["payload"]["scan"]["primitive"], false);
    assert_eq!(trans["payload"]["scan"]["systems"].as_array().unwrap().len(), 255);
}

#[test]
fn verify_commands() {
    let v = stdout_json(&tbprim(&["verify", "subfield-theorem", "--m", "4"]));
    assert_eq!(v["payload"]["holds"], true);
    let v = stdout_json(&tbprim(&["verify", "involution-lemma", "--count", "5", "--seed", "11"]));
    assert_eq!(v["payload"]["seed"], 11);
    assert_eq!(v["payload"]["violations"], 0);
    let v = stdout_json(&tbprim(&["verify", "involution-lemma", &fixture("aes-inverse.sbox")]));
    assert_eq!(v["payload"]["samples"][0]["plain_degree"], 3);
}

#[test]
fn errors_exit_nonzero() {
    let missing = tbprim(&["sbox", "analyze", "/nonexistent/file.sbox"]);
    assert!(!missing.status.success());

    let capacity = tbprim(&["group", "oracle", &fixture("aes.json")]);
    assert!(!capacity.status.success());
    assert!(String::from_utf8_lossy(&capacity.stderr).contains("capacity"));

    let mismatch = tbprim(&["layer", "check", &fixture("identity8.mat"), "--bricks", "16x8"]);
    assert!(!mismatch.status.success());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sbox");
    fs::write(&bad, "# m=2\n0 1 2\n").unwrap();
    assert!(!tbprim(&["sbox", "analyze", bad.to_str().unwrap()]).status.success());
}

#[test]
fn non_permutation_is_reported_not_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("const.sbox");
    fs::write(&path, "# m=2\n0 0 1 1\n").unwrap();
    let v = stdout_json(&tbprim(&["sbox", "analyze", path.to_str().unwrap()]));
    assert_eq!(v["payload"]["is_permutation"], false);
    assert!(v["payload"]["anti_invariance"].is_null());
}

#[test]
fn fixtures_command_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbprim(&["fixtures", "write", dir.path().to_str().unwrap(), "--seed", "5"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("toy-trapdoor-0.sbox")).unwrap();
    assert!(text.contains("seed=5"));
    let v = stdout_json(&tbprim(&["cipher", "certify", dir.path().join("toy-good.json").to_str().unwrap()]));
    assert_eq!(v["payload"]["verdict"], "primitive");
}
