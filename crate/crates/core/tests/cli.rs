use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn sepent(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sepent"));
    cmd.args(args).env_remove("SEPENT_THREADS");
    if let Some(t) = threads {
        cmd.env("SEPENT_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sepent-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bit_flip_preserves_bell_concurrence() {
    let out = sepent(&["verify", "--channel", &data("bitflip.json"), "--state", &data("bell.json"), "--measure", "concurrence"], None);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let rec = &r["records"][0];
    assert!((rec["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(rec["max_outcome_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["config"]["seed"], 0);
    assert!(r.get("duration_ms").is_none());
}

#[test]
fn documented_command_examples() {
    let r = json(&sepent(&["erf", "--channel", &data("bitflip.json")], None));
    assert!((r["records"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["records"][0]["nontrivial_alternatives"], 0);

    let r = json(&sepent(&["roof", "--state", &data("werner.json"), "--p", "0.9", "--measure", "concurrence"], None));
    assert!((r["records"][0]["value"].as_f64().unwrap() - 0.85).abs() < 1e-4);

    let r = json(&sepent(&["breaking", "--family", "depolarizing", "--r", "1", "--bisect"], None));
    assert!((r["summary"]["stats"]["threshold"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-3);

    let r = json(&sepent(&["sweep", "--family", "amplitude-damping", "--gamma", "0:1:0.05", "--emit", "decay"], None));
    let recs = r["records"].as_array().unwrap();
    assert_eq!(recs.len(), 21);
    for rec in recs {
        let (x, y) = (rec["x"].as_f64().unwrap(), rec["y"].as_f64().unwrap());
        assert!((y - (1.0 - x).sqrt()).abs() < 1e-12, "γ = {x}: {y}");
    }
}

#[test]
fn reports_are_identical_across_runs_and_thread_counts() {
    let args = ["verify", "--random-channel", "--dims", "2,2", "--trials", "40", "--seed", "17"];
    let a = sepent(&args, None);
    let b = sepent(&args, None);
    let c = sepent(&args, Some("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    for rec in json(&a)["records"].as_array().unwrap() {
        assert!(rec["trial"].is_u64() && rec["stream_id"].is_u64());
    }
}

#[test]
fn csv_numbers_round_trip_through_json() {
    let args = ["sweep", "--family", "depolarizing", "--range", "0:1:0.1", "--emit", "ratio"];
    let j = json(&sepent(&args, None));
    let csv_args: Vec<&str> = args.iter().copied().chain(["--format", "csv"]).collect();
    let csv = String::from_utf8(sepent(&csv_args, None).stdout).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let yi = header.iter().position(|h| *h == "y").unwrap();
    for (line, rec) in lines.zip(j["records"].as_array().unwrap()) {
        let y: f64 = line.split(',').nth(yi).unwrap().parse().unwrap();
        assert_eq!(y.to_bits(), rec["y"].as_f64().unwrap().to_bits());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(sepent(&["verify", "--bogus"], None).status.code(), Some(2));
    assert_eq!(sepent(&["verify", "--trials", "0"], None).status.code(), Some(2));
    assert_eq!(sepent(&["verify", "--channel", "no/such/file.json"], None).status.code(), Some(3));
    assert_eq!(sepent(&["verify"], Some("many")).status.code(), Some(2));
    assert_eq!(sepent(&["--help"], None).status.code(), Some(0));

    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"dims\": [2, 2], \"ops\": [}").unwrap();
    let out = sepent(&["verify", "--channel", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.json:1:"), "{err}");

    // an unattainable tolerance is reported as a failed check; the report is still written
    let report = scratch("strict.json");
    let out = sepent(&["verify", "--trials", "20", "--tol", "1e-30", "--out", report.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(written["passed"], false);
}

#[test]
fn timing_is_opt_in() {
    let r = json(&sepent(&["decay", "--channel", "bitflip", "--timing"], None));
    assert!(r["duration_ms"].as_f64().unwrap() >= 0.0);
}
