use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dcg-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn dcg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcg"))
        .current_dir(dir)
        .env_remove("DCG_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn csv_area(path: &Path) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    let dt = (rows[1].0 - rows[0].0) * 1e-9;
    rows.iter().map(|r| r.1).sum::<f64>() * dt
}

#[test]
fn synth_then_waveform_keeps_quarter_turn_area() {
    let dir = scratch("roundtrip");
    ok(&dcg(&dir, &["synth", "--duration-ns", "40", "--degree", "2", "--out", "opt.json"]));
    let synth: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("opt.json")).unwrap()).unwrap();
    let units = synth["table_units"].as_array().unwrap();
    assert!((units[0].as_f64().unwrap() - 0.31831).abs() < 1e-4);
    assert!((units[2].as_f64().unwrap() + 0.00515).abs() < 1e-4);
    assert_eq!(synth["converged"], true);

    ok(&dcg(&dir, &["waveform", "--pulse", "opt.json", "--out", "w.csv"]));
    let area = csv_area(&dir.join("w.csv"));
    assert!((area - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "area {area}");

    // The CSV reloads as a pulse source.
    ok(&dcg(&dir, &["waveform", "--pulse", "w.csv", "--out", "w2.csv"]));
    assert!((csv_area(&dir.join("w2.csv")) - area).abs() < 1e-9);
    assert!(dir.join("w.csv.manifest.json").exists());
}

#[test]
fn rb_requires_a_seed() {
    let dir = scratch("seed");
    let out = dcg(&dir, &["rb", "--mode", "standard", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("r.json").exists());
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let dir = scratch("codes");
    let bad_pulse = dcg(&dir, &["waveform", "--pulse", "square", "--out", "x.csv"]);
    assert_eq!(bad_pulse.status.code(), Some(2));
    let bad_grid = dcg(&dir, &["sweep", "--detuning-mhz", "1:0:1", "--out", "s.csv"]);
    assert_eq!(bad_grid.status.code(), Some(2));
    // A 1 kHz peak would need a millisecond-long envelope.
    let weak = dcg(&dir, &["corpse", "--peak-mhz", "0.001", "--rise-ns", "5", "--out", "c.csv"]);
    assert_eq!(weak.status.code(), Some(1), "{}", String::from_utf8_lossy(&weak.stderr));
    assert!(!dir.join("c.csv").exists());
}

#[test]
fn replay_reproduces_outputs_byte_for_byte() {
    let dir = scratch("replay");
    let args = [
        "rb", "--mode", "spectator", "--preset", "Q0Q1", "--pulse", "gaussian", "--seed", "7", "--seqs", "30",
        "--lengths", "1,2,4,8,16,32,64", "--shots", "500", "--sample-flips", "--out", "sp.json", "--histogram", "h.csv",
    ];
    ok(&dcg(&dir, &args));
    let first = (fs::read(dir.join("sp.json")).unwrap(), fs::read(dir.join("h.csv")).unwrap());
    let manifest = fs::read(dir.join("sp.json.manifest.json")).unwrap();
    fs::remove_file(dir.join("sp.json")).unwrap();
    fs::remove_file(dir.join("h.csv")).unwrap();

    ok(&dcg(&dir, &["replay", "--manifest", "sp.json.manifest.json"]));
    assert_eq!(fs::read(dir.join("sp.json")).unwrap(), first.0);
    assert_eq!(fs::read(dir.join("h.csv")).unwrap(), first.1);
    assert_eq!(fs::read(dir.join("sp.json.manifest.json")).unwrap(), manifest);

    let json: serde_json::Value = serde_json::from_slice(&first.0).unwrap();
    assert_eq!(json["mode"], "spectator");
    assert!(json["plain_epg"]["value"].is_f64());
    assert!(json["epg_ratio"].is_f64());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = scratch("config");
    fs::write(
        dir.join("run.toml"),
        "command = \"waveform\"\npulse = \"gaussian\"\nscale = 0.5\nout = \"g.csv\"\n",
    )
    .unwrap();
    ok(&dcg(&dir, &["--config", "run.toml"]));
    let half = csv_area(&dir.join("g.csv"));
    assert!((half - std::f64::consts::FRAC_PI_4).abs() < 1e-9, "area {half}");

    ok(&dcg(&dir, &["waveform", "--config", "run.toml", "--scale", "1"]));
    let full = csv_area(&dir.join("g.csv"));
    assert!((full - std::f64::consts::FRAC_PI_2).abs() < 1e-9, "area {full}");

    let wrong = dcg(&dir, &["synth", "--config", "run.toml"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn sweep_writes_both_columns() {
    let dir = scratch("sweep");
    ok(&dcg(
        &dir,
        &["sweep", "--pulse", "gaussian", "--no-calibrate", "--detuning-mhz", "-1,0,1", "--out", "s.csv"],
    ));
    let text = fs::read_to_string(dir.join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("detuning_MHz,epg_nodecoherence,epg_decoherence"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[2] > r[1]));
    assert!(rows[1][1] < rows[0][1] && rows[1][1] < rows[2][1]);
}
