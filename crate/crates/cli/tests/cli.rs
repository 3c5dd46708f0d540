use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use driftwatch::limits_file::{read_limits, write_limits};
use driftwatch::observations::{read_graymap, CsvRows, Item, ObservationSource};
use driftwatch_core::{ControlLimits, WindowConfig};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn driftwatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftwatch"))
        .args(args)
        .env_remove("DRIFTWATCH_SEED")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// `(15, 3)` limits from `calibrate --reps 10000 --seed 42`, shared by the tests.
fn limits_path() -> &'static Path {
    static DIR: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    &DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("L.json");
        let out = driftwatch(&[
            "calibrate", "--w", "15", "--l0", "3", "--alpha", "0.004", "--reps", "10000", "--seed", "42", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        (dir, path)
    })
    .1
}

fn trace_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["window", "statistic", "limit", "signal", "tau_hat"]);
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn calibrate_writes_table_one_limit() {
    let limits = read_limits(limits_path()).unwrap();
    assert!((limits.limit(1) - 0.9259).abs() <= 0.010, "h_1 = {}", limits.limit(1));
    assert_eq!((limits.config().w(), limits.config().l0(), limits.seed()), (15, 3, 42));
    assert_eq!(limits.replications(), 10_000);
}

#[test]
fn outputs_are_deterministic_and_seed_reads_env() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |out: &Path| {
        vec!["calibrate", "--w", "10", "--l0", "2", "--reps", "2000", "--windows", "200", "--out"]
            .into_iter()
            .map(String::from)
            .chain([out.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    let mut with_flag = args(&a);
    with_flag.extend(["--seed".into(), "7".into()]);
    assert!(driftwatch(&with_flag.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_driftwatch"))
        .args(args(&b))
        .env("DRIFTWATCH_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn monitor_in_control_fixture_runs_clean() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = driftwatch(&[
        "monitor",
        "--limits",
        limits_path().to_str().unwrap(),
        "--input",
        fixture("ic_stream.csv").to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let rows = trace_rows(&trace);
    assert_eq!(rows.len(), 40 - 15 + 1);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (k + 1).to_string());
        assert_eq!(row[3], "0");
        assert_eq!(row[4], "");
        let (t, h): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!(t < h && (0.5..=1.0).contains(&t));
    }
}

fn signal_partition(stdout: &str) -> usize {
    let tail = stdout.split("partition ").nth(1).expect("signal summary");
    tail.split(';').next().unwrap().trim().parse().unwrap()
}

#[test]
fn monitor_planted_shift_signals() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = driftwatch(&[
        "monitor",
        "--limits",
        limits_path().to_str().unwrap(),
        "--input",
        fixture("shift_stream.csv").to_str().unwrap(),
        "--header",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let rows = trace_rows(&trace);
    let last = rows.last().unwrap();
    let window: usize = last[0].parse().unwrap();
    assert_eq!(rows.len(), window);
    assert_eq!(last[3], "1");
    assert!(rows[..rows.len() - 1].iter().all(|r| r[3] == "0" && r[4].is_empty()));
    let tau_hat: usize = last[4].parse().unwrap();
    assert_eq!(tau_hat, window + 3 + signal_partition(&stdout) - 1);
    assert!(tau_hat == 50 || tau_hat == 51, "{stdout}");
    assert!(window + 14 > 50);
}

#[test]
fn monitor_restart_continues_after_signal() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = driftwatch(&[
        "monitor",
        "--limits",
        limits_path().to_str().unwrap(),
        "--norms",
        fixture("shift_norms.csv").to_str().unwrap(),
        "--restart",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let rows = trace_rows(&trace);
    let first = rows.iter().position(|r| r[3] == "1").unwrap();
    // Fresh segment: window numbering restarts after w - 1 warm-up norms.
    assert!(rows.len() > first + 1);
    assert_eq!(rows[first + 1][0], "1");
}

#[test]
fn monitor_reads_graymap_directories_in_name_order() {
    let dir = TempDir::new().unwrap();
    let images = dir.path().join("images");
    fs::create_dir(&images).unwrap();
    // Written in reverse so directory order differs from name order.
    for k in (0..30u32).rev() {
        let v = if k < 20 { (k * 7 % 13) as u8 } else { 200 + (k % 5) as u8 };
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend([v, v / 2, v, 1, v, 3]);
        fs::write(images.join(format!("img_{k:03}.pgm")), bytes).unwrap();
    }
    fs::write(images.join("notes.txt"), "ignored").unwrap();
    let trace = dir.path().join("trace.csv");
    let run = || {
        driftwatch(&[
            "monitor",
            "--limits",
            limits_path().to_str().unwrap(),
            "--images",
            images.to_str().unwrap(),
            "--out",
            trace.to_str().unwrap(),
        ])
    };
    let out = run();
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    let first = fs::read(&trace).unwrap();
    run();
    assert_eq!(first, fs::read(&trace).unwrap());
    let rows = trace_rows(&trace);
    let tau: usize = rows.last().unwrap()[4].parse().unwrap();
    assert!((18..=21).contains(&tau), "tau_hat {tau}");
}

#[test]
fn graymap_pixels_map_row_major() {
    assert_eq!(read_graymap(&fixture("tiny_p2.pgm")).unwrap(), vec![0.0, 128.0, 255.0, 64.0]);
    let dir = TempDir::new().unwrap();
    let p5 = dir.path().join("tiny.pgm");
    fs::write(&p5, [b"P5\n2 2\n255\n".as_slice(), &[0, 128, 255, 64]].concat()).unwrap();
    assert_eq!(read_graymap(&p5).unwrap(), vec![0.0, 128.0, 255.0, 64.0]);
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, "P2\n2 two\n255\n0 0 0 0\n").unwrap();
    assert!(read_graymap(&bad).unwrap_err().to_string().contains("bad.pgm"));
}

#[test]
fn csv_rows_and_errors() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("good.csv");
    fs::write(&good, "1,2\n3,4\n").unwrap();
    let rows: Vec<_> = CsvRows::open(&good, false).unwrap().map(|r| r.unwrap().1).collect();
    assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);

    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();
    let err = CsvRows::open(&ragged, false).unwrap().nth(1).unwrap().unwrap_err();
    assert!(err.to_string().contains("ragged.csv:2:"), "{err}");

    let word = dir.path().join("word.csv");
    fs::write(&word, "h1,h2\n1,2\n3,x\n").unwrap();
    let err = CsvRows::open(&word, true).unwrap().nth(1).unwrap().unwrap_err();
    assert!(err.to_string().contains("word.csv:3:"), "{err}");

    let trace = dir.path().join("t.csv");
    let out = driftwatch(&[
        "monitor",
        "--limits",
        limits_path().to_str().unwrap(),
        "--input",
        ragged.to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("ragged.csv:2:"));

    let norms = ObservationSource::NormColumn { path: good, has_header: false };
    assert!(norms.open().unwrap().next().unwrap().is_err());
    let one = dir.path().join("one.csv");
    fs::write(&one, "0.5\n1.5\n").unwrap();
    let items: Vec<_> = ObservationSource::NormColumn { path: one, has_header: false }
        .open()
        .unwrap()
        .map(|r| r.unwrap())
        .collect();
    assert_eq!(items, vec![Item::Norm(0.5), Item::Norm(1.5)]);
}

#[test]
fn invalid_limits_files_are_rejected() {
    let dir = TempDir::new().unwrap();
    let good = fs::read_to_string(limits_path()).unwrap();
    let v2 = dir.path().join("v2.json");
    fs::write(&v2, good.replacen("\"format_version\": 1", "\"format_version\": 2", 1)).unwrap();
    assert!(read_limits(&v2).unwrap_err().to_string().contains("format_version 2"));

    let cfg = WindowConfig::new(15, 3).unwrap();
    let high = ControlLimits::from_parts(0.004, cfg, vec![0.9, 1.2], 0.9, 100, 1, 10).unwrap();
    let high_path = dir.path().join("high.json");
    write_limits(&high, &high_path).unwrap();
    assert!(read_limits(&high_path).unwrap_err().to_string().contains("outside [0.5, 1]"));

    let trace = dir.path().join("t.csv");
    let out = driftwatch(&[
        "monitor",
        "--limits",
        high_path.to_str().unwrap(),
        "--norms",
        fixture("shift_norms.csv").to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let round = dir.path().join("round.json");
    let original = read_limits(limits_path()).unwrap();
    write_limits(&original, &round).unwrap();
    assert_eq!(read_limits(&round).unwrap(), original);
    assert_eq!(fs::read_to_string(&round).unwrap(), good);
}

#[test]
fn studies_print_tables() {
    let lim = limits_path().to_str().unwrap();
    let out = driftwatch(&["eval-ic", "--limits", lim, "--dist", "cauchy", "--p", "5", "--reps", "1000", "--seed", "3"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = text(&out.stdout);
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("dist,p,w,l0,reps,arl,mrl,censored,max_windows"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..5], &["cauchy", "5", "15", "3", "1000"]);
    let arl: f64 = row[5].parse().unwrap();
    assert!((150.0..350.0).contains(&arl));

    let out = driftwatch(&[
        "eval-ooc",
        "--limits",
        lim,
        "--scenario",
        fixture("scenario_gauss_copula.toml").to_str().unwrap(),
        "--reps",
        "1000",
        "--horizon",
        "200",
        "--seed",
        "4",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = text(&out.stdout);
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "scenario_gauss_copula");
    assert_eq!(row[6], "1");
    let tau: f64 = row[8].parse().unwrap();
    assert!((10.0..=12.0).contains(&tau));
}

#[test]
fn sensitivity_grid_document() {
    let dir = TempDir::new().unwrap();
    fs::copy(limits_path(), dir.path().join("L.json")).unwrap();
    let grid = dir.path().join("grid.toml");
    fs::write(
        &grid,
        r#"
horizon = 300
limits = ["L.json"]

[[scenario]]
label = "mean shift"
tau = 30
ic = { family = "normal", p = 5 }
ooc = { family = "normal", p = 5, mean = 2.0 }

[[scenario]]
label = "null"
tau = 30
ic = { family = "uniform-norms" }
ooc = { family = "uniform-norms" }
"#,
    )
    .unwrap();
    let out_path = dir.path().join("rates.csv");
    let out = driftwatch(&[
        "sensitivity", "--grid", grid.to_str().unwrap(), "--reps", "1000", "--seed", "5", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let mut r = csv::Reader::from_path(&out_path).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let rate = |k: usize| rows[k][9].parse::<f64>().unwrap();
    assert!(rate(0) > 0.8, "{}", rate(0));
    assert!(rate(1) < rate(0));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(driftwatch(&["calibrate", "--w", "15"]).status.code(), Some(1));
    assert_eq!(driftwatch(&["monitor", "--limits", "x", "--out", "y"]).status.code(), Some(1));
    assert_eq!(driftwatch(&["calibrate", "--w", "4", "--l0", "3", "--out", "z.json"]).status.code(), Some(1));
    assert_eq!(driftwatch(&["--help"]).status.code(), Some(0));
}

#[test]
fn graymap_maxval_is_rescaled_to_eight_bits() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [("m15.pgm", "P2\n3 1\n15\n0 5 15\n"), ("m1000.pgm", "P2\n3 1\n1000\n0 200 1000\n")] {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        let px = read_graymap(&p).unwrap();
        assert_eq!((px[0], px[2]), (0.0, 255.0), "{name}");
        assert!((px[1] - 255.0 * if name == "m15.pgm" { 5.0 / 15.0 } else { 0.2 }).abs() <= 1.0, "{name}: {px:?}");
    }
}
