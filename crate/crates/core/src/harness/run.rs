use std::time::Instant;

use rayon::prelude::*;

use super::config::{grid_steps, ExperimentConfig, Reference, Scheme};
use crate::direct::{em_step_coulomb, milstein_step_coulomb, LinearKernel, StepContext};
use crate::error::{Error, Result};
use crate::iterative::{coulomb_relax_step, coulomb_taylor_step, iter_vectorial_with, IterConfig, IterScalarKernel};
use crate::metrics::{time_avg_mse, ConvergenceReport, ErrorSample, Trajectory};
use crate::problems::{CoulombProblem, CoulombState, LinearSdeProblem};
use crate::wiener::{sample_seed, WienerPath};

/// Sample trajectory of ensemble member 0 for one scheme and step size.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDump {
    /// Scheme name, or `reference`.
    pub label: String,
    pub dt: f64,
    /// Columns are `v, mu, phi` rather than `y0..`.
    pub coulomb: bool,
    pub trajectory: Trajectory,
}

/// A path excluded from one `(scheme, dt)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub scheme: String,
    pub dt: f64,
    pub path_index: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Scheme-major, then in `dt_list` order.
    pub reports: Vec<ConvergenceReport>,
    /// Per-path end-time errors of every accepted path, in report order.
    pub samples: Vec<ErrorSample>,
    pub trajectories: Vec<TrajectoryDump>,
    pub failures: Vec<PathFailure>,
    /// Soft-check messages (runtime ordering).
    pub warnings: Vec<String>,
}

enum Model<'a> {
    Linear(&'a LinearSdeProblem),
    Coulomb(CoulombProblem, CoulombState),
}

/// Per-dt operators shared by all paths.
struct DtKernels<'p> {
    linear: Option<LinearKernel<'p>>,
    scalar_iter: Vec<Option<IterScalarKernel<'p>>>,
}

struct Cell {
    scheme: Scheme,
    name: String,
    dt_index: usize,
}

struct CellRun {
    outcome: std::result::Result<(ErrorSample, f64), String>,
    clamps: u64,
    seconds: f64,
    /// Full trajectory, kept for member 0 only.
    states: Option<Vec<Vec<f64>>>,
}

struct PathOutcome {
    reference: Option<Vec<Vec<f64>>>,
    cells: Vec<CellRun>,
}

fn integrate<F>(path: &WienerPath, y0: &[f64], stride: usize, mut step: F) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64], &StepContext) -> Result<Vec<f64>>,
{
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(path.n_steps() / stride + 1);
    out.push(y.clone());
    for k in 0..path.n_steps() {
        let ctx = path.context(k)?;
        y = step(&y, &ctx)?;
        if (k + 1) % stride == 0 {
            out.push(y.clone());
        }
    }
    Ok(out)
}

fn coulomb_scheme_config(base: &IterConfig, scheme: Scheme) -> IterConfig {
    match scheme {
        Scheme::CoulombRelax { sweeps, rule } | Scheme::CoulombTaylor { sweeps, rule } => IterConfig {
            sweeps: sweeps.unwrap_or(base.sweeps),
            quad_rule: rule.unwrap_or(base.quad_rule),
            ..*base
        },
        _ => *base,
    }
}

/// Integrates one scheme along `path`, recording every `stride`-th state.
fn run_scheme(
    model: &Model,
    kernels: &DtKernels,
    iter_cfg: &IterConfig,
    scheme: Scheme,
    path: &WienerPath,
    stride: usize,
    clamps: &mut u64,
) -> Result<Vec<Vec<f64>>> {
    match model {
        Model::Linear(p) => {
            let k = kernels.linear.as_ref().expect("linear kernel");
            let y0 = &p.y0;
            match scheme {
                Scheme::Em => integrate(path, y0, stride, |y, c| k.em(y, c)),
                Scheme::Milstein => integrate(path, y0, stride, |y, c| k.milstein_diag(y, c)),
                Scheme::MilsteinFull => integrate(path, y0, stride, |y, c| k.milstein_full(y, c)),
                Scheme::AbSplit => integrate(path, y0, stride, |y, c| k.ab_split(y, c)),
                Scheme::Summative(n) => integrate(path, y0, stride, |y, c| k.summative(y, c, n)),
                Scheme::Iter(it) if p.noise_dims() == 1 => {
                    let ik = kernels.scalar_iter[it - 1].as_ref().expect("scalar iterative kernel");
                    integrate(path, y0, stride, |y, c| ik.step(y, c))
                }
                Scheme::Iter(it) => integrate(path, y0, stride, |y, c| iter_vectorial_with(k, y, c, it)),
                Scheme::CoulombRelax { .. } | Scheme::CoulombTaylor { .. } => {
                    Err(Error::Config(format!("scheme `{scheme}` needs the coulomb problem")))
                }
            }
        }
        Model::Coulomb(p, s0) => {
            let cfg = coulomb_scheme_config(iter_cfg, scheme);
            let step = |s: &CoulombState, c: &StepContext| -> Result<CoulombState> {
                match scheme {
                    Scheme::Em => em_step_coulomb(s, p, c),
                    Scheme::Milstein => milstein_step_coulomb(s, p, c),
                    Scheme::CoulombRelax { .. } => coulomb_relax_step(s, p, c, &cfg),
                    Scheme::CoulombTaylor { .. } => coulomb_taylor_step(s, p, c, &cfg),
                    other => Err(Error::Config(format!("scheme `{other}` is not available for problem `coulomb`"))),
                }
            };
            integrate(path, &s0.to_array(), stride, |y, c| {
                let next = step(&CoulombState::from_slice(y), c)?;
                let (s, moved) = p.clamp(next)?;
                *clamps += moved as u64;
                Ok(s.to_array().to_vec())
            })
        }
    }
}

fn reference_run(model: &Model, reference: Reference, kernel: Option<&LinearKernel>, path: &WienerPath, stride: usize) -> Result<Vec<Vec<f64>>> {
    match model {
        Model::Linear(p) => {
            let k = kernel.expect("reference kernel");
            match reference {
                Reference::ExactLinear => integrate(path, &p.y0, stride, |y, c| k.exact(y, c)),
                Reference::FineMilstein(_) => integrate(path, &p.y0, stride, |y, c| k.milstein_full(y, c)),
            }
        }
        Model::Coulomb(p, s0) => integrate(path, &s0.to_array(), stride, |y, c| {
            let next = milstein_step_coulomb(&CoulombState::from_slice(y), p, c)?;
            Ok(p.clamp(next)?.0.to_array().to_vec())
        }),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn median3(mut t: [f64; 3]) -> f64 {
    t.sort_by(f64::total_cmp);
    t[1]
}

/// Rank in the expected per-step cost ordering.
fn cost_rank(s: Scheme) -> usize {
    match s {
        Scheme::Em => 0,
        Scheme::Milstein => 1,
        Scheme::MilsteinFull => 2,
        Scheme::Iter(_) | Scheme::CoulombRelax { .. } | Scheme::CoulombTaylor { .. } => 3,
        Scheme::AbSplit | Scheme::Summative(_) => usize::MAX,
    }
}

/// Wiener path of ensemble member `index` on the fine grid.
pub fn fine_path(cfg: &ExperimentConfig, index: u64) -> Result<WienerPath> {
    let h = cfg.reference_dt();
    let n = grid_steps(cfg.t_end, h)?;
    let seed = sample_seed(cfg.master_seed, index);
    if cfg.zero_noise {
        WienerPath::quiet(cfg.problem.noise_dims(), n, h, seed)
    } else {
        WienerPath::generate(cfg.problem.noise_dims(), n, h, seed)
    }
}

/// Integrates every `(scheme, dt)` cell over the ensemble against the
/// reference, all driven by one fine path per member.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let linear = if cfg.problem.is_coulomb() { None } else { Some(cfg.problem.linear(cfg.t_end)?) };
    let model = match &linear {
        Some(p) => Model::Linear(p),
        None => {
            let p = CoulombProblem::default();
            let s0 = cfg.coulomb_initial(&p);
            Model::Coulomb(p, s0)
        }
    };
    let reference = cfg.resolved_reference();
    let h = cfg.reference_dt();
    let factors: Vec<usize> = cfg.dt_list.iter().map(|&dt| grid_steps(dt, h)).collect::<Result<_>>()?;
    let store = factors.iter().copied().fold(0, gcd);
    let schemes = cfg.resolved_schemes();

    let mut kernels = Vec::with_capacity(factors.len());
    for &f in &factors {
        let step_dt = h * f as f64;
        let (lin, scalar_iter) = match &linear {
            Some(p) => {
                let mut iters = Vec::new();
                for k in 1..=3 {
                    let needed = p.noise_dims() == 1 && schemes.contains(&Scheme::Iter(k));
                    iters.push(if needed {
                        Some(IterScalarKernel::new(p, step_dt, IterConfig { iterations: k, ..cfg.iter })?)
                    } else {
                        None
                    });
                }
                (Some(LinearKernel::new(p, step_dt)?), iters)
            }
            None => (None, Vec::new()),
        };
        kernels.push(DtKernels { linear: lin, scalar_iter });
    }
    let ref_kernel = match &linear {
        Some(p) => Some(LinearKernel::new(p, h)?),
        None => None,
    };

    let cells: Vec<Cell> = schemes
        .iter()
        .flat_map(|&s| (0..factors.len()).map(move |d| Cell { scheme: s, name: s.to_string(), dt_index: d }))
        .collect();

    if let Some(dump) = &cfg.dump_noise {
        fine_path(cfg, 0)?.dump_csv(dump)?;
    }

    let ref_dt = h * store as f64;
    let run_one = |index: u64| -> Result<PathOutcome> {
        let fine = fine_path(cfg, index)?;
        let reference = reference_run(&model, reference, ref_kernel.as_ref(), &fine, store)
            .map(|states| Trajectory { dt: ref_dt, states });
        let coarse: Vec<WienerPath> = factors.iter().map(|&f| fine.coarsen(f)).collect::<Result<_>>()?;
        let keep = index == 0;
        let mut runs = Vec::with_capacity(cells.len());
        for cell in &cells {
            let path = &coarse[cell.dt_index];
            let kern = &kernels[cell.dt_index];
            let mut clamps = 0;
            let t0 = Instant::now();
            let states = run_scheme(&model, kern, &cfg.iter, cell.scheme, path, 1, &mut clamps);
            let mut seconds = t0.elapsed().as_secs_f64();
            if cfg.timing {
                let mut t = [seconds, 0.0, 0.0];
                for slot in t.iter_mut().skip(1) {
                    let mut c = 0;
                    let t0 = Instant::now();
                    let _ = run_scheme(&model, kern, &cfg.iter, cell.scheme, path, 1, &mut c);
                    *slot = t0.elapsed().as_secs_f64();
                }
                seconds = median3(t);
            }
            let dt = cfg.dt_list[cell.dt_index];
            let outcome = match (&reference, &states) {
                (Err(e), _) => Err(format!("reference: {e}")),
                (_, Err(e)) => Err(e.to_string()),
                (Ok(r), Ok(s)) => {
                    let coarse = Trajectory { dt: path.dt(), states: s.clone() };
                    let last_ref = r.states.last().expect("nonempty");
                    match (
                        ErrorSample::new(&cell.name, dt, index, s.last().expect("nonempty"), last_ref),
                        time_avg_mse(&coarse, r, path.dt(), cfg.t_end),
                    ) {
                        (Ok(sample), Ok(t)) if t.is_finite() => Ok((sample, t)),
                        (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
                        _ => Err("non-finite time-averaged error".into()),
                    }
                }
            };
            let states = if keep { states.ok() } else { None };
            runs.push(CellRun { outcome, clamps, seconds, states });
        }
        let reference = if keep { reference.ok().map(|t| t.states) } else { None };
        Ok(PathOutcome { reference, cells: runs })
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        builder = builder.num_threads(cfg.workers);
    }
    let pool = builder.build().map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<PathOutcome> =
        pool.install(|| (0..cfg.n_paths as u64).into_par_iter().map(run_one).collect::<Result<Vec<_>>>())?;

    let coulomb = cfg.problem.is_coulomb();
    let mut trajectories = Vec::new();
    if let Some(r) = &outcomes[0].reference {
        trajectories.push(TrajectoryDump {
            label: "reference".into(),
            dt: ref_dt,
            coulomb,
            trajectory: Trajectory { dt: ref_dt, states: r.clone() },
        });
    }
    for (cell, run) in cells.iter().zip(&outcomes[0].cells) {
        if let Some(states) = &run.states {
            trajectories.push(TrajectoryDump {
                label: cell.name.clone(),
                dt: cfg.dt_list[cell.dt_index],
                coulomb,
                trajectory: Trajectory { dt: h * factors[cell.dt_index] as f64, states: states.clone() },
            });
        }
    }

    let mut reports = Vec::with_capacity(cells.len());
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let dt = cfg.dt_list[cell.dt_index];
        let mut cell_samples = Vec::with_capacity(cfg.n_paths);
        let mut tavg = Vec::with_capacity(cfg.n_paths);
        let (mut clamps, mut excluded, mut seconds) = (0u64, 0u64, 0.0f64);
        let mut first_failure = None;
        for (i, out) in outcomes.iter().enumerate() {
            let run = &out.cells[c];
            clamps += run.clamps;
            seconds += run.seconds;
            match &run.outcome {
                Ok((sample, t)) => {
                    cell_samples.push(sample.clone());
                    tavg.push(*t);
                }
                Err(message) => {
                    excluded += 1;
                    first_failure.get_or_insert((i, message.clone()));
                    failures.push(PathFailure {
                        scheme: cell.name.clone(),
                        dt,
                        path_index: i as u64,
                        message: message.clone(),
                    });
                }
            }
        }
        if excluded as f64 > cfg.max_failures * cfg.n_paths as f64 {
            let (i, m) = first_failure.expect("counted");
            return Err(Error::Runtime(format!(
                "{excluded} of {} paths failed for {} at dt={dt} (limit {}); first: path {i}: {m}",
                cfg.n_paths, cell.name, cfg.max_failures
            )));
        }
        let mut report = ConvergenceReport::from_samples(&cell.name, dt, &cell_samples, &tavg, clamps, excluded);
        report.runtime_seconds = if cfg.timing { seconds } else { 0.0 };
        reports.push(report);
        samples.extend(cell_samples);
    }

    let warnings = if cfg.timing { runtime_order_warnings(&schemes, cfg, &factors, &reports) } else { Vec::new() };
    Ok(ExperimentResult { reports, samples, trajectories, failures, warnings })
}

/// Seconds per step and path of one report.
pub fn per_step_seconds(r: &ConvergenceReport, t_end: f64) -> f64 {
    let steps = (t_end / r.dt).round().max(1.0);
    let paths = (r.n_paths as u64 + r.excluded_paths).max(1) as f64;
    r.runtime_seconds / (steps * paths)
}

fn runtime_order_warnings(
    schemes: &[Scheme],
    cfg: &ExperimentConfig,
    factors: &[usize],
    reports: &[ConvergenceReport],
) -> Vec<String> {
    let mut out = Vec::new();
    let nd = factors.len();
    for d in 0..nd {
        for (a, &sa) in schemes.iter().enumerate() {
            for (b, &sb) in schemes.iter().enumerate() {
                if cost_rank(sa) < cost_rank(sb) && cost_rank(sb) != usize::MAX {
                    let (ra, rb) = (&reports[a * nd + d], &reports[b * nd + d]);
                    let (ca, cb) = (per_step_seconds(ra, cfg.t_end), per_step_seconds(rb, cfg.t_end));
                    if ca > cb {
                        out.push(format!(
                            "runtime ordering: {sa} ({ca:.3e} s/step) slower than {sb} ({cb:.3e} s/step) at dt={}",
                            ra.dt
                        ));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_text(text).unwrap()
    }

    #[test]
    fn deterministic_single_path() {
        let c = cfg("schemes=em\ndt_list=0.1\npaths=1\nseed=3\ntiming=off");
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.reports.len(), 1);
        assert_eq!(a.reports[0].n_paths, 1);
        assert!(a.reports[0].strong_error > 0.0);
        assert_eq!(a.reports[0].runtime_seconds, 0.0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let base = "problem=vec2x2:strong\nschemes=em,milstein_full,iter:2\ndt_list=0.1,0.05\npaths=12\nseed=9\ntiming=off";
        let one = run_experiment(&cfg(&format!("{base}\nworkers=1"))).unwrap();
        let three = run_experiment(&cfg(&format!("{base}\nworkers=3"))).unwrap();
        assert_eq!(one.reports, three.reports);
        assert_eq!(one.samples, three.samples);
    }

    #[test]
    fn report_layout_and_trajectories() {
        let r = run_experiment(&cfg("schemes=em,iter:2\ndt_list=0.5,0.25\npaths=3\ntiming=on")).unwrap();
        let names: Vec<(&str, f64)> = r.reports.iter().map(|r| (r.scheme.as_str(), r.dt)).collect();
        assert_eq!(names, vec![("em", 0.5), ("em", 0.25), ("iter:2", 0.5), ("iter:2", 0.25)]);
        assert!(r.reports.iter().all(|r| r.runtime_seconds > 0.0));
        assert_eq!(r.samples.len(), 12);
        let t = r.trajectories.iter().find(|t| t.label == "em" && t.dt == 0.25).unwrap();
        assert_eq!(t.trajectory.states.len(), 5);
        assert_eq!(r.trajectories[0].label, "reference");
    }

    #[test]
    fn split_beats_euler_on_scalar_problem() {
        let r = run_experiment(&cfg("schemes=em,ab_split\ndt_list=0.25,0.125\npaths=4\ntiming=off")).unwrap();
        for d in 0..2 {
            assert!(r.reports[2 + d].strong_error < 1e-3 * r.reports[d].strong_error, "{:?}", r.reports);
        }
    }

    #[test]
    fn coulomb_zero_noise_run() {
        let r = run_experiment(&cfg(
            "problem=coulomb\nschemes=em,coulomb_taylor:2,trapezoid\ndt_list=0.01\npaths=2\nzero_noise=on\nreference=fine_milstein:0.001\ntiming=off",
        ))
        .unwrap();
        let em = r.trajectories.iter().find(|t| t.label == "em").unwrap();
        let v1 = em.trajectory.states.last().unwrap()[0];
        assert!((v1 - (3f64.sqrt() - 1.0)).abs() < 1e-2, "{v1}");
        assert_eq!(r.reports[0].excluded_paths, 0);
    }

    #[test]
    fn rejects_incompatible_pairing() {
        let c = ExperimentConfig { problem: super::super::config::ProblemPreset::VecMxM(4), ..cfg("schemes=ab_split") };
        match run_experiment(&c) {
            Err(Error::Config(m)) => assert!(m.contains("ab_split") && m.contains("vecMxM:4")),
            other => panic!("{other:?}"),
        }
    }
}
