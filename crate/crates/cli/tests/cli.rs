use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Self {
        Env {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn cache(&self) -> PathBuf {
        self.dir.path().join("cache.ndjson")
    }

    fn artifacts(&self) -> PathBuf {
        self.dir.path().join("artifacts")
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_zerosum"))
            .args(args)
            .env("ZEROSUM_CACHE", self.cache())
            .env_remove("ZEROSUM_MAX_CELLS")
            .arg("--artifact-dir")
            .arg(self.artifacts())
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    /// Runs with JSON output, checks the exit code and the schema.
    fn json(&self, args: &[&str], code: i32) -> Value {
        let out = self.run(args);
        assert_eq!(
            out.status.code(),
            Some(code),
            "{args:?}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_valid("report.schema.json", &v);
        assert_eq!(v["exit_code"], code);
        v
    }
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let validator = jsonschema::validator_for(&schema(name)).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{v:#}");
}

fn failing(v: &Value) -> Vec<String> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["holds"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect()
}

fn witness_len(seq: &Value) -> u64 {
    seq["elements"].as_array().unwrap().iter().map(|e| e["mult"].as_u64().unwrap()).sum()
}

#[test]
fn egz_example() {
    let env = Env::new();
    let v = env.json(&["exact", "s", "--group", "3", "--lengths", "3"], 0);
    assert_eq!(v["record"]["value"], 5);
    assert_eq!(v["record"]["status"], "exact");
    assert_eq!(witness_len(&v["record"]["witness"]), 4);
    assert!(failing(&v).is_empty());
}

#[test]
fn conjecture_example_on_klein_group() {
    let env = Env::new();
    let v = env.json(&["verify-conjecture", "--group", "2,2", "--kmax", "2"], 0);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["exact"], 5);
    assert_eq!(rows[0]["conjectured"], 4);
    assert_eq!(rows[0]["relation"], "strict");
    assert_eq!(rows[1]["exact"], 6);
    assert_eq!(rows[1]["relation"], "equality");
}

#[test]
fn bounds_table_example() {
    let env = Env::new();
    let v = env.json(&["bounds", "--group", "5,5", "--k", "2"], 0);
    let find = |id: &str| {
        v["results"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["theorem"] == id)
            .unwrap_or_else(|| panic!("no {id} row"))
            .clone()
    };
    assert_eq!(find("mainbound")["value"], 44);
    assert_eq!(find("mainbound")["applicable"], true);
    assert_eq!(find("2d")["applicable"], false);
    // kq + D − 2 = 18; not strict since kq ≥ D
    assert_eq!(find("gao_lower")["value"], 18);
    assert_eq!(find("gao_lower")["strict"], false);
}

#[test]
fn group_info_examples() {
    let env = Env::new();
    let v = env.json(&["group", "info", "3,3"], 0);
    assert_eq!(v["pgroup"]["davenport"], 5);
    assert_eq!(v["pgroup"]["dim_d"], 2);
    assert!(v["prime_conditions"].as_array().unwrap().iter().any(|c| c["name"] == "sets"));

    let v = env.json(&["group", "info", "5,5"], 0);
    assert_eq!(v["pgroup"]["davenport"], 9);
    let mb = v["prime_conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "mainbound")
        .unwrap()
        .clone();
    assert_eq!(mb["holds"], true);
    assert!(mb["detail"].as_str().unwrap().contains("= 4"));

    let v = env.json(&["group", "info", "6,4"], 0);
    assert!(v.get("pgroup").is_none());
    assert!(v.get("prime_conditions").is_none());
    assert_eq!(v["order"], 24);
    assert_eq!(v["exponent"], 12);
}

#[test]
fn usage_errors_exit_2() {
    let env = Env::new();
    for args in [
        &["group", "info", "3,x"][..],
        &["group", "info", "1,3"],
        &["exact", "s", "--group", "3"],
        &["poly", "check", "--group", "3,3", "--multipliers", "1,2", "--random"],
        &["exact", "ell", "--group", "6", "--kmax", "1"],
        &["extract", "--strategy", "two_piece_2d", "--group", "3,3", "--random", "--seed", "1", "--k", "1"],
        &["bounds", "--group", "3,3"],
    ] {
        assert_eq!(env.run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn resource_caps_exit_3() {
    let env = Env::new();
    let out = env.run(&["exact", "s", "--group", "3,3", "--lengths", "3", "--max-cells", "10", "--no-cache"]);
    assert_eq!(out.status.code(), Some(3));
    // an unproven cap reports the avoider it reached
    let v = env.json(&["exact", "s", "--group", "3,3", "--lengths", "3", "--cap", "6", "--no-cache"], 3);
    assert_eq!(v["status"], "resource_cap");
    assert_eq!(witness_len(&v["witness"]), 6);
}

#[test]
fn warm_cache_reproduces_reports() {
    let env = Env::new();
    let args = ["exact", "s", "--group", "3,3", "--lengths", "3,6"];
    let first = env.run(&args);
    let lines = fs::read_to_string(env.cache()).unwrap().lines().count();
    let second = env.run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(fs::read_to_string(env.cache()).unwrap().lines().count(), lines);
    assert!(String::from_utf8_lossy(&second.stderr).contains("cache hit"));
    // the scaled spelling of the same lengths hits the same entry
    let scaled = env.run(&["exact", "s", "--group", "3,3", "--multipliers", "1,2"]);
    assert_eq!(scaled.stdout, first.stdout);

    for line in fs::read_to_string(env.cache()).unwrap().lines() {
        assert_valid("cache-entry.schema.json", &serde_json::from_str(line).unwrap());
    }

    let scan1 = env.run(&["exact", "ell", "--group", "2,2", "--kmax", "2"]);
    let scan2 = env.run(&["exact", "ell", "--group", "2,2", "--kmax", "2"]);
    assert_eq!(scan1.stdout, scan2.stdout);
}

#[test]
fn poisoned_cache_is_reported_as_inconsistency() {
    let env = Env::new();
    // s_3(C_3) = 5; a stored claim of 4 contradicts the lower bound
    let line = r#"{"key":{"group":"3","quantity":"s_K","lengths":{"absolute":[3]}},"record":{"group":[3],"quantity":"s_K","lengths":{"absolute":[3]},"value":4,"status":"exact","provenance":"search","witness":{"group":[3],"elements":[{"coords":[0],"mult":1},{"coords":[1],"mult":2}]}},"stamp":{"engine":"test","computed_at_ms":0},"wall_ms":0}"#;
    fs::write(env.cache(), format!("{line}\n")).unwrap();

    let v = env.json(&["bounds", "--group", "3", "--k", "1"], 1);
    assert_eq!(v["status"], "inconsistency");
    assert!(Path::new(v["artifact"].as_str().unwrap()).exists());

    let v = env.json(&["exact", "s", "--group", "3", "--lengths", "3"], 1);
    assert!(failing(&v).iter().any(|n| n == "gao_lower:lower"), "{:?}", failing(&v));
    let artifact: Value = serde_json::from_str(&fs::read_to_string(v["artifact"].as_str().unwrap()).unwrap()).unwrap();
    assert_eq!(artifact["evidence"]["record"]["value"], 4);
}

#[test]
fn every_command_validates() {
    let env = Env::new();
    let seq = env.dir.path().join("w.json");
    let seq_s = seq.to_str().unwrap();
    env.json(&["exact", "davenport", "--group", "2,4"], 0);
    env.json(&["exact", "davenport", "--group", "6"], 0);
    let v = env.json(&["exact", "ell", "--group", "2,2", "--kmax", "3"], 0);
    assert_eq!(v["record"]["value"], 2);
    assert_eq!(v["record"]["status"], "exact");
    env.json(&["bounds", "--group", "3", "--theorem", "sets", "--multipliers", "1"], 0);
    env.json(&["bounds", "--group", "6,4", "--k", "3"], 0);
    env.json(&["bounds", "--group", "3,3", "--target", "6"], 0);
    let v = env.json(&["witness", "--group", "3,3", "--k", "2", "--out", seq_s], 0);
    assert_eq!(v["record"]["value"], 10);
    let file: Value = serde_json::from_str(&fs::read_to_string(&seq).unwrap()).unwrap();
    assert_valid("sequence.schema.json", &file);

    let v = env.json(
        &["poly", "check", "--group", "3,3", "--multipliers", "1,2", "--random", "--seed", "4"],
        0,
    );
    assert_eq!(v["report"]["full_coefficient"], 0);
    env.json(
        &["poly", "check", "--group", "3,3", "--multipliers", "1,2", "--sequence", seq_s, "--exploratory"],
        0,
    );
    for args in [
        &["--strategy", "pq_lift", "--group", "3,3"][..],
        &["--strategy", "subadditive", "--group", "3", "--a", "3", "--b", "3", "--s-a", "5", "--s-b", "5"],
        &["--strategy", "two_piece_2d", "--group", "3,3", "--k", "3"],
        &["--strategy", "half_lemma", "--group", "3,3", "--multipliers", "1"],
        &["--strategy", "main_theorem", "--group", "5,5", "--k", "2"],
        &["--strategy", "filtration", "--group", "4,4", "--a", "1", "--b", "1", "--q", "2", "--length", "12"],
    ] {
        let mut full = vec!["extract", "--random", "--seed", "3"];
        full.extend_from_slice(args);
        let v = env.json(&full, 0);
        assert!(failing(&v).is_empty());
    }
    // 13 = pq + D − 1 terms over C_3^2
    let input = env.dir.path().join("in.json");
    fs::write(
        &input,
        r#"{"group":[3,3],"elements":[{"coords":[1,0],"mult":5},{"coords":[0,1],"mult":4},{"coords":[2,2],"mult":4}]}"#,
    )
    .unwrap();
    let out = env.dir.path().join("t.json");
    let v = env.json(
        &[
            "extract",
            "--strategy",
            "pq_lift",
            "--sequence",
            input.to_str().unwrap(),
            "--group",
            "3,3",
            "--out",
            out.to_str().unwrap(),
        ],
        0,
    );
    assert_eq!(witness_len(&v["plan"]["result"]), 9);
    assert_valid("sequence.schema.json", &serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap());
}

#[test]
fn tabular_formats() {
    let env = Env::new();
    let out = env.run(&["verify-conjecture", "--group", "2,2", "--kmax", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,length,exact,conjectured,relation,regime,consistent"));
    assert_eq!(lines.next(), Some("1,2,5,4,strict,kq<D,true"));
    assert_eq!(lines.next(), Some("2,4,6,6,equality,kq>=D,true"));

    let out = env.run(&["bounds", "--group", "5,5", "--k", "2", "--format", "markdown"]);
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.contains("| mainbound | upper | true | 44 |"));
}
