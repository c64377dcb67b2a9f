use std::path::Path;
use std::process::{Command, Output};

fn abcroots(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abcroots"))
        .args(args)
        .env_remove("ABCROOTS_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(out: &Output) -> Vec<serde_json::Value> {
    stdout(out)
        .lines()
        .map(|l| serde_json::from_str(l).expect("one JSON object per line"))
        .collect()
}

#[test]
fn expand_table_lists_coefficients() {
    let out = abcroots(&["expand", "109", "5", "--terms", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("2 1 1 4 77733"), "{}", stdout(&out));
}

#[test]
fn expand_ndjson_rows() {
    let out = abcroots(&["expand", "2", "2", "--terms", "4", "--format", "ndjson"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json_lines(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["p"], "17");
    assert_eq!(rows[3]["q"], "12");
    assert_eq!(rows[3]["d"], "-1");
}

#[test]
fn perfect_power_is_a_compute_error() {
    let out = abcroots(&["expand", "8", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(abcroots(&["series", "2", "2", "--depth", "0"]).status.code(), Some(1));
    assert_eq!(abcroots(&["expand", "1", "2"]).status.code(), Some(1));
    assert_eq!(abcroots(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(abcroots(&["hunt", "--k-range", "5..2", "--s-range", "2..2"]).status.code(), Some(1));
}

#[test]
fn series_ndjson_ends_with_summary() {
    let out = abcroots(&["series", "2", "3", "--depth", "10", "--format", "ndjson", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 11);
    assert!(lines[..10].iter().all(|l| l["type"] == "row"));
    assert_eq!(lines[10]["type"], "summary");
    assert_eq!(lines[10]["depth"], 10);
}

#[test]
fn verify_reyssat() {
    let out = abcroots(&["verify", "2", "6436341", "6436343"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("rad(abc): 15042"), "{text}");
    assert!(text.contains("q1: 1.62991"), "{text}");
    assert!(text.contains("hit: Yes"), "{text}");
}

#[test]
fn verify_imbalance_exit_2() {
    assert_eq!(abcroots(&["verify", "1", "1", "3"]).status.code(), Some(2));
    assert_eq!(abcroots(&["verify", "0", "1", "1"]).status.code(), Some(1));
}

#[test]
fn records_table_passes() {
    let out = abcroots(&["records"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Linked-at-n=3"));
}

#[test]
fn gated_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(
        &path,
        r#"{"records":[{"label":"Broken","a":[["1",1]],"b":[["2",1]],"c":[["4",1]],"root":{"k":"2","s":2},"gated":true}]}"#,
    )
    .unwrap();
    let out = abcroots(&["records", "--table", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

fn hunt(store: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["hunt", "--store", store.to_str().unwrap(), "--fixed-clock"];
    args.extend_from_slice(extra);
    abcroots(&args)
}

#[test]
fn reyssat_hunt_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("hits.ndjson");
    let args = ["--k-range", "109..109", "--s-range", "5..5", "--depth", "10", "--kind", "q1", "--min", "1.6"];
    let first = hunt(&store, &args);
    assert_eq!(first.status.code(), Some(0));
    assert!(stdout(&first).contains("new=1"), "{}", stdout(&first));
    let records: Vec<serde_json::Value> = std::fs::read_to_string(&store)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["n"], 3);
    assert_eq!(records[0]["c"], "6436343");
    assert_eq!(records[0]["timestamp"], 0);

    let before = std::fs::read(&store).unwrap();
    let second = hunt(&store, &args);
    assert!(stdout(&second).contains("new=0 duplicates_skipped=1"), "{}", stdout(&second));
    assert_eq!(std::fs::read(&store).unwrap(), before);
}

#[test]
fn deep_q2_hunt_without_factoring() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("hits.ndjson");
    let out = hunt(
        &store,
        &["--k-range", "2..2", "--s-range", "3..3", "--depth", "200", "--kind", "q2", "--factor-effort", "none", "--format", "ndjson"],
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = &json_lines(&out)[0];
    assert_eq!(summary["equations"], 200);
    assert!(summary["new"].as_u64().unwrap() > 0);
    let text = std::fs::read_to_string(&store).unwrap();
    for line in text.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(r["hit_q2"], true);
        assert!(r["q1"].is_null());
    }
}

#[test]
fn environment_and_config_file_settings() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("abcroots.conf");
    std::fs::write(&config, "# defaults\nformat = ndjson\ndepth = 3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_abcroots"))
        .args(["expand", "2", "2"])
        .env("ABCROOTS_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_lines(&out).len(), 3);

    let out = Command::new(env!("CARGO_BIN_EXE_abcroots"))
        .args(["expand", "2", "2", "--depth", "5"])
        .env("ABCROOTS_CONFIG", &config)
        .env("ABCROOTS_DEPTH", "4")
        .output()
        .unwrap();
    assert_eq!(json_lines(&out).len(), 5);
}
