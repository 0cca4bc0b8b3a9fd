use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_henon-certify"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("henon-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_horseshoe_point() {
    let o = run(&["classify", "--window", "9,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let (_, recs) = henon_core::certify::read_records(&text).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].classification.to_string(), "HorseshoeClosedForm");
}

#[test]
fn unknown_verdict_exits_with_two() {
    let o = run(&["classify", "--window", "5.7,1.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_window_is_an_error() {
    let o = run(&["classify", "--window", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let o = run(&["classify"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_campaign_window_writes_only_the_header() {
    let o = run(&["campaign", "--window", "1:0,0:0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    let (_, recs) = henon_core::certify::read_records(&text).unwrap();
    assert!(recs.is_empty());
}

#[test]
fn tgc_then_plot_curve() {
    let dir = scratch("tgc");
    let recs = dir.join("tgc.jsonl");
    let o = run(&["tgc", "--b", "0", "--out", recs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["plot", "--input", recs.to_str().unwrap(), "--what", "tgc-curve"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], henon_core::certify::TGC_HEADER);
    let cols: Vec<f64> = lines[1].split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(cols[0], 0.0);
    assert!(cols[1] < 2.0 && 2.0 < cols[2]);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn enclosure_round_trips_through_plot() {
    let dir = scratch("enclose");
    let enc = dir.join("enc.txt");
    let o = run(&["enclose", "--window", "2,0", "--depth", "5", "--out", enc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let written = std::fs::read_to_string(&enc).unwrap();
    let o = run(&["plot", "--input", enc.to_str().unwrap(), "--what", "enclosure"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), written);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn periodic_orbit_at_complex_box() {
    let o = run(&["periodic", "--window", "2.999:3.001,0.499:0.501,-0.001:0.001,-0.001:0.001"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout(&o).is_empty());
}
