use std::fs;
use std::process::{Command, Output};

use splitsde::harness::{parse_csv, parse_json, REPORT_COLUMNS};

fn splitsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitsde")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn csv_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = splitsde(&[
        "--schemes", "em,milstein,iter:2",
        "--dt-list", "0.5,0.25,0.125",
        "--paths", "8",
        "--seed", "11",
        "--output", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), REPORT_COLUMNS.join(","));
    let reports = parse_csv(&text).unwrap();
    assert_eq!(reports.len(), 9);
    assert!(reports.iter().all(|r| r.runtime_seconds > 0.0 && r.n_paths == 8));
}

#[test]
fn json_to_stdout_and_worker_independence() {
    let base = ["--problem", "vec2x2:strong", "--schemes", "em,milstein_full", "--dt-list", "0.1,0.05", "--paths", "16", "--timing", "off", "--format", "json"];
    let one = splitsde(&[&base[..], &["--workers", "1"]].concat());
    let four = splitsde(&[&base[..], &["--workers", "4"]].concat());
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
    let reports = parse_json(std::str::from_utf8(&one.stdout).unwrap()).unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r.runtime_seconds == 0.0));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "problem = vecMxM:4\nschemes = milstein,milstein_full\ndt_list = 0.25\npaths = 3\ntiming = off\n").unwrap();
    let o = splitsde(&["--config", cfg.to_str().unwrap(), "--paths", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports = parse_csv(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(reports.iter().map(|r| r.n_paths).collect::<Vec<_>>(), vec![5, 5]);
}

#[test]
fn exit_codes() {
    let o = splitsde(&["--problem", "vecMxM:10", "--schemes", "summative:4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("summative:4") && stderr(&o).contains("vecMxM:10"));

    assert_eq!(splitsde(&["--problem", "nope"]).status.code(), Some(2));
    assert_eq!(splitsde(&["--dt-list", "0.3"]).status.code(), Some(2));
    assert_eq!(splitsde(&["--config", "/nonexistent.cfg"]).status.code(), Some(2));

    let o = splitsde(&["--paths", "2", "--dt-list", "0.5", "--output", "/nonexistent/dir/r.csv"]);
    assert_eq!(o.status.code(), Some(4));

    let o = splitsde(&[
        "--problem", "coulomb",
        "--schemes", "coulomb_relax:1,trapezoid",
        "--dt-list", "0.1",
        "--reference", "fine_milstein:0.01",
        "--paths", "40",
        "--max-failures", "0",
        "--timing", "off",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("coulomb_relax:1,trapezoid"));
}

#[test]
fn coulomb_zero_noise_plot_data_and_noise_dump() {
    let dir = tempfile::tempdir().unwrap();
    let plots = dir.path().join("plots");
    let noise = dir.path().join("noise.csv");
    let o = splitsde(&[
        "--problem", "coulomb",
        "--schemes", "em,coulomb_taylor:2,simpson",
        "--dt-list", "0.01",
        "--reference", "fine_milstein:0.001",
        "--paths", "2",
        "--zero-noise",
        "--timing", "off",
        "--plot-dir", plots.to_str().unwrap(),
        "--dump-noise", noise.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dump = fs::read_to_string(&noise).unwrap();
    assert_eq!(dump.lines().next().unwrap(), "step,dim,dW,dW_aux");
    assert_eq!(dump.lines().count(), 1 + 1000 * 3);

    let traj = fs::read_dir(&plots)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("trajectory_em_"))
        .unwrap();
    let text = fs::read_to_string(traj).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,v,mu,phi");
    assert_eq!(text.lines().count(), 1 + 101);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - (3f64.sqrt() - 1.0)).abs() < 1e-2);
    for f in ["error_vs_dt.csv", "variance_vs_dt.csv", "timing.csv", "plot.py", "samples.csv"] {
        assert!(plots.join(f).exists(), "{f}");
    }
}
