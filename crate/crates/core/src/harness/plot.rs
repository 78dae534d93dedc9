use std::fs;
use std::path::{Path, PathBuf};

use super::report::fmt_f64;
use super::run::{per_step_seconds, TrajectoryDump};
use crate::error::{Error, Result};
use crate::metrics::ConvergenceReport;

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots the CSV files in this directory. Usage: python3 plot.py [dir]"""
import csv
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

root = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(root, name)) as f:
        return list(csv.DictReader(f))


def by_scheme(data, column):
    out = {}
    for r in data:
        out.setdefault(r["scheme"], []).append((float(r["dt"]), float(r[column])))
    return out


def loglog(name, column, ylabel):
    fig, ax = plt.subplots()
    for scheme, pts in by_scheme(rows(name), column).items():
        pts = [p for p in sorted(pts) if p[1] > 0]
        if pts:
            ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=scheme)
    ax.set_xlabel("dt")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.savefig(os.path.join(root, f"{column}.png"), dpi=150)
    plt.close(fig)


loglog("error_vs_dt.csv", "strong_error", "strong error")
loglog("error_vs_dt.csv", "weak_error", "mean error")
loglog("variance_vs_dt.csv", "variance", "variance")

for path in sorted(glob.glob(os.path.join(root, "trajectory_*.csv"))):
    with open(path) as f:
        data = list(csv.DictReader(f))
    cols = [c for c in data[0].keys() if c != "t"]
    t = [float(r["t"]) for r in data]
    fig, ax = plt.subplots()
    for c in cols:
        ax.plot(t, [float(r[c]) for r in data], label=c)
    ax.set_xlabel("t")
    ax.legend()
    fig.savefig(path[:-4] + ".png", dpi=150)
    plt.close(fig)
"#;

/// File-name-safe form of a scheme label.
fn slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' }).collect()
}

fn write(path: PathBuf, text: String) -> Result<PathBuf> {
    fs::write(&path, text)?;
    Ok(path)
}

fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

/// Writes `error_vs_dt.csv`, `variance_vs_dt.csv`, `timing.csv`, one
/// `trajectory_*.csv` per dump and `plot.py` into `dir`. Returns the paths
/// written.
pub fn emit_plot_data(
    reports: &[ConvergenceReport],
    trajectories: &[TrajectoryDump],
    t_end: f64,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to plot"));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let mut err = String::from("scheme,dt,strong_error,weak_error,mean_bias,time_avg_mse\n");
    let mut var = String::from("scheme,dt,variance\n");
    let mut timing = String::from("scheme,dt,runtime_seconds,seconds_per_step\n");
    for r in reports {
        let s = quote(&r.scheme);
        err += &format!(
            "{s},{},{},{},{},{}\n",
            fmt_f64(r.dt),
            fmt_f64(r.strong_error),
            fmt_f64(r.weak_error),
            fmt_f64(r.mean_bias),
            fmt_f64(r.time_avg_mse)
        );
        var += &format!("{s},{},{}\n", fmt_f64(r.dt), fmt_f64(r.variance));
        timing += &format!(
            "{s},{},{},{}\n",
            fmt_f64(r.dt),
            fmt_f64(r.runtime_seconds),
            fmt_f64(per_step_seconds(r, t_end))
        );
    }
    written.push(write(dir.join("error_vs_dt.csv"), err)?);
    written.push(write(dir.join("variance_vs_dt.csv"), var)?);
    written.push(write(dir.join("timing.csv"), timing)?);

    for t in trajectories {
        let dim = t.trajectory.states.first().map_or(0, Vec::len);
        let mut text = String::from("t");
        if t.coulomb {
            text += ",v,mu,phi";
        } else {
            for k in 0..dim {
                text += &format!(",y{k}");
            }
        }
        text.push('\n');
        for (i, y) in t.trajectory.states.iter().enumerate() {
            text += &fmt_f64(i as f64 * t.trajectory.dt);
            for v in y {
                text.push(',');
                text += &fmt_f64(*v);
            }
            text.push('\n');
        }
        let name = format!("trajectory_{}_dt{}.csv", slug(&t.label), fmt_f64(t.dt));
        written.push(write(dir.join(name), text)?);
    }
    written.push(write(dir.join("plot.py"), PLOT_SCRIPT.to_string())?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Trajectory;

    fn report(scheme: &str, dt: f64) -> ConvergenceReport {
        ConvergenceReport {
            scheme: scheme.into(),
            dt,
            n_paths: 4,
            strong_error: 0.1,
            weak_error: 0.05,
            mean_bias: 0.01,
            variance: 0.001,
            time_avg_mse: 0.02,
            runtime_seconds: 0.5,
            clamp_events: 0,
            excluded_paths: 0,
        }
    }

    #[test]
    fn files_and_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let reports = vec![report("em", 0.5), report("em", 0.25), report("coulomb_relax:2,simpson", 0.25)];
        let traj = TrajectoryDump {
            label: "coulomb_relax:2,simpson".into(),
            dt: 0.25,
            coulomb: true,
            trajectory: Trajectory { dt: 0.25, states: vec![vec![1.0, 0.5, 1.0]; 5] },
        };
        let files = emit_plot_data(&reports, &[traj], 1.0, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let err = fs::read_to_string(dir.path().join("error_vs_dt.csv")).unwrap();
        assert_eq!(err.lines().count(), 1 + reports.len());
        let t = fs::read_to_string(&files[3]).unwrap();
        assert_eq!(t.lines().next().unwrap(), "t,v,mu,phi");
        assert_eq!(t.lines().count(), 1 + 5);
        assert!(files[3].file_name().unwrap().to_str().unwrap().starts_with("trajectory_coulomb_relax-2-simpson"));
        let timing = fs::read_to_string(dir.path().join("timing.csv")).unwrap();
        assert!(timing.lines().nth(1).unwrap().ends_with(&fmt_f64(0.5 / (2.0 * 4.0))));
    }

    #[test]
    fn unwritable_dir() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("f");
        fs::write(&file, "x").unwrap();
        let err = emit_plot_data(&[report("em", 0.5)], &[], 1.0, &file.join("sub")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
