use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use splitsde::error::{Error, Result};
use splitsde::harness::{
    emit_plot_data, emit_report, render_report, run_experiment, write_samples, ExperimentConfig,
};

/// Convergence experiments for splitting and Milstein-type SDE integrators.
///
/// Options may also come from a key=value file (`--config`); flags given on
/// the command line override the file.
#[derive(Parser, Debug)]
#[command(name = "splitsde", version)]
struct Cli {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// scalar10 | vec2x2:<weak01|weak001|strong> | vecMxM:<m> | coulomb
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated: em, milstein, milstein_full, ab_split, summative:<n>,
    /// iter:<k>, coulomb_relax[:<sweeps>,<rule>], coulomb_taylor[:<sweeps>,<rule>]
    #[arg(long)]
    schemes: Option<String>,
    /// Comma-separated step sizes
    #[arg(long = "dt-list")]
    dt_list: Option<String>,
    /// Ensemble size
    #[arg(long)]
    paths: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// Master seed
    #[arg(long)]
    seed: Option<String>,
    /// exact_linear | fine_milstein:<dt> | auto
    #[arg(long)]
    reference: Option<String>,
    /// Report file; stdout when omitted
    #[arg(long)]
    output: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Write the Wiener path of ensemble member 0 to this CSV file
    #[arg(long = "dump-noise")]
    dump_noise: Option<String>,
    /// Switch every noise increment off
    #[arg(long = "zero-noise")]
    zero_noise: bool,
    #[arg(long)]
    mu0: Option<String>,
    #[arg(long)]
    v0: Option<String>,
    #[arg(long)]
    phi0: Option<String>,
    /// Default fixpoint sweeps for the coulomb iterative schemes
    #[arg(long)]
    sweeps: Option<String>,
    /// trapezoid | simpson
    #[arg(long = "quad-rule")]
    quad_rule: Option<String>,
    /// Quadrature sub-steps of the iterative scalar-noise scheme
    #[arg(long = "iter-substeps")]
    iter_substeps: Option<String>,
    /// riemann | unweighted | increment
    #[arg(long = "c3-variant")]
    c3_variant: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<String>,
    /// Largest tolerated fraction of failed paths per cell
    #[arg(long = "max-failures")]
    max_failures: Option<String>,
    /// on | off; when off all runtimes are written as 0
    #[arg(long)]
    timing: Option<String>,
    /// Directory for plot-ready CSV files and plot.py
    #[arg(long = "plot-dir")]
    plot_dir: Option<String>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs = [
            ("problem", &self.problem),
            ("schemes", &self.schemes),
            ("dt_list", &self.dt_list),
            ("paths", &self.paths),
            ("t_end", &self.t_end),
            ("seed", &self.seed),
            ("reference", &self.reference),
            ("output", &self.output),
            ("format", &self.format),
            ("dump_noise", &self.dump_noise),
            ("mu0", &self.mu0),
            ("v0", &self.v0),
            ("phi0", &self.phi0),
            ("sweeps", &self.sweeps),
            ("quad_rule", &self.quad_rule),
            ("iter_substeps", &self.iter_substeps),
            ("c3_variant", &self.c3_variant),
            ("workers", &self.workers),
            ("max_failures", &self.max_failures),
            ("timing", &self.timing),
            ("plot_dir", &self.plot_dir),
        ];
        let mut out: Vec<(&'static str, &str)> =
            pairs.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect();
        if self.zero_noise {
            out.push(("zero_noise", "on"));
        }
        out
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in cli.overrides() {
        cfg.set(k, v)?;
    }
    cfg.validate()?;

    let result = run_experiment(&cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if !result.failures.is_empty() {
        eprintln!("{} path failures excluded from the statistics", result.failures.len());
        for f in result.failures.iter().take(5) {
            eprintln!("  {} dt={} path {}: {}", f.scheme, f.dt, f.path_index, f.message);
        }
    }
    match &cfg.output {
        Some(path) => emit_report(&result.reports, cfg.format, path)?,
        None => {
            let text = render_report(&result.reports, cfg.format)?;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    if let Some(dir) = &cfg.plot_dir {
        emit_plot_data(&result.reports, &result.trajectories, cfg.t_end, dir)?;
        let f = fs::File::create(dir.join("samples.csv"))?;
        write_samples(&result.samples, std::io::BufWriter::new(f))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
