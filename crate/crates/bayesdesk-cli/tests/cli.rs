use std::collections::BTreeMap;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use bayesdesk_cli::experiments::REGISTRY;
use bayesdesk_cli::report::{ExperimentReport, Num, TraceData};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayesdesk")).args(args).output().expect("binary runs")
}

fn csv_map(out: &Output) -> BTreeMap<String, String> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    let rep = ExperimentReport::read_csv(text.as_bytes()).unwrap();
    let mut m: BTreeMap<String, String> = rep.estimates.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
    m.extend(rep.diagnostics.iter().map(|(k, v)| (format!("diag.{k}"), v.to_string())));
    m
}

fn num(m: &BTreeMap<String, String>, k: &str) -> f64 {
    m.get(k).unwrap_or_else(|| panic!("missing {k}")).parse().unwrap()
}

#[test]
fn darroch_example() {
    let m = csv_map(&bin(&["run", "darroch", "--nplus", "45", "--nc", "50"]));
    assert!((num(&m, "mean") - 130.91).abs() < 0.01);
}

#[test]
fn tag_recovery_example() {
    let m = csv_map(&bin(&["run", "tag-recovery", "--data", "32,20,8,5,1,2,0,2,1,1,0"]));
    assert!((num(&m, "mean") - 282.4).abs() < 0.1);
    assert_eq!(num(&m, "median"), 243.0);
    assert_eq!(num(&m, "median_population"), 275.0);
}

#[test]
fn partition_example() {
    let m = csv_map(&bin(&["run", "partition-exact", "--rows", "3", "--cols", "5", "--beta", "0", "--colors", "2"]));
    assert!((num(&m, "log_partition") - 15.0 * std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn mle_flag_in_staged_mode() {
    let m = csv_map(&bin(&["run", "darroch", "--n1", "20", "--n2", "30", "--m2", "5"]));
    assert_eq!(num(&m, "mle"), 120.0);
    let m = csv_map(&bin(&["run", "darroch", "--n1", "20", "--n2", "30", "--m2", "0"]));
    assert_eq!(num(&m, "diag.mle_defined"), 0.0);
    assert!(!m.contains_key("mle"));
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["run", "no-such-thing"]).status.code(), Some(64));
    assert_eq!(bin(&["run", "darroch", "--beta", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "tag-recovery", "--data", "3,5"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "darroch", "--nplus", "5", "--nc", "4"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "partition-exact", "--rows", "6", "--cols", "6"]).status.code(), Some(3));
    assert_eq!(bin(&["run", "darroch", "--nplus", "x"]).status.code(), Some(2));
    assert!(bin(&["list"]).status.success());
}

#[test]
fn every_experiment_is_reproducible_and_quick() {
    let dir = tempfile::tempdir().unwrap();
    for exp in REGISTRY {
        for format in ["csv", "json"] {
            let mut files = Vec::new();
            for run in 0..2 {
                let path = dir.path().join(format!("{}-{run}.{format}", exp.id));
                let start = Instant::now();
                let out = bin(&["run", exp.id, "--format", format, "--seed", "7", "--out", path.to_str().unwrap()]);
                assert!(start.elapsed() < Duration::from_secs(60), "{} too slow", exp.id);
                assert!(out.status.success(), "{}: {}", exp.id, String::from_utf8_lossy(&out.stderr));
                files.push(std::fs::read(&path).unwrap());
                let trace = dir.path().join(format!("{}-{run}.trace.csv", exp.id));
                if trace.exists() {
                    files.push(std::fs::read(trace).unwrap());
                }
            }
            let half = files.len() / 2;
            assert_eq!(files[..half], files[half..], "{} {format} differs between runs", exp.id);
            assert!(!files[0].contains(&b'\r'));
        }
    }
}

#[test]
fn seed_changes_stochastic_output() {
    let a = bin(&["run", "abc-binomial", "--seed", "1"]).stdout;
    let b = bin(&["run", "abc-binomial", "--seed", "2"]).stdout;
    assert_ne!(a, b);
}

fn sample_report() -> ExperimentReport {
    let mut r = ExperimentReport::new("demo", 11);
    r.param("rows", 3).param("data", "1,2,3");
    r.estimate("mean", 0.1 + 0.2).estimate("upper", f64::INFINITY).estimate("tiny", 1e-300);
    r.diagnostic("ks", -0.0).diagnostic("big", 1.234_567_890_123_456_7e200);
    r
}

#[test]
fn json_round_trip() {
    let mut r = sample_report();
    r.trace = Some(TraceData { names: vec!["a".into()], rows: vec![vec![1.5], vec![-2.0]] });
    let mut buf = Vec::new();
    r.write_json(&mut buf).unwrap();
    let back: ExperimentReport = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.estimates["upper"], Num(f64::INFINITY));
}

#[test]
fn csv_round_trip() {
    let mut r = sample_report();
    r.wall_time_ms = Some(12);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    assert_eq!(ExperimentReport::read_csv(buf.as_slice()).unwrap(), r);
}

#[test]
fn csv_without_diagnostics_has_header_and_parameters() {
    let mut r = ExperimentReport::new("demo", 1);
    r.param("a", 1).param("b", "x");
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, "key,value\nexperiment,demo\nseed,1\nparameter.a,1\nparameter.b,x\n");
}

#[test]
fn trace_long_format() {
    let t = TraceData { names: vec!["x".into(), "y".into()], rows: vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]] };
    let mut buf = Vec::new();
    t.write_long(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,dim,value");
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[1], "0,x,1");
    assert_eq!(lines[6], "2,y,6");
}
