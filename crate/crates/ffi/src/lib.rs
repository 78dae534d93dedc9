//! C ABI over the `splitsde` integrators.
//!
//! Every fallible function returns a [`SplitsdeStatus`]; on failure the
//! message is kept per thread and can be read with
//! [`splitsde_last_error_message`]. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use splitsde::direct::{
    ab_split_step, em_step_coulomb, em_step_linear, exact_linear_step, milstein_step_coulomb, milstein_step_diag,
    milstein_step_full, summative_split_step,
};
use splitsde::error::Error;
use splitsde::harness::{render_report, run_experiment, ExperimentConfig, ProblemPreset, Scheme};
use splitsde::iterative::{coulomb_relax_step, coulomb_taylor_step, iter_scalar_step, iter_vectorial_step, IterConfig};
use splitsde::linalg::DenseMatrix;
use splitsde::problems::{CoulombProblem, CoulombState, LinearSdeProblem};
use splitsde::wiener::WienerPath;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitsdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Domain = 3,
    Singularity = 4,
    Divergence = 5,
    Unsupported = 6,
    Config = 7,
    Runtime = 8,
    Io = 9,
    Panic = 10,
}

/// Linear multiplicative-noise problem.
pub struct SplitsdeLinearProblem {
    inner: LinearSdeProblem,
}

/// Wiener increments on a uniform grid.
pub struct SplitsdeWienerPath {
    inner: WienerPath,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SplitsdeStatus {
    match e {
        Error::InvalidInput(_) => SplitsdeStatus::InvalidInput,
        Error::Domain(_) => SplitsdeStatus::Domain,
        Error::Singularity { .. } => SplitsdeStatus::Singularity,
        Error::Divergence { .. } => SplitsdeStatus::Divergence,
        Error::Unsupported(_) => SplitsdeStatus::Unsupported,
        Error::Config(_) => SplitsdeStatus::Config,
        Error::Runtime(_) => SplitsdeStatus::Runtime,
        Error::Io(_) => SplitsdeStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SplitsdeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SplitsdeStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SplitsdeStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SplitsdeStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Core(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out_ptr<T>(p: *mut *mut T, what: &'static str) -> Result<&'static mut *mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

/// Length in bytes of the last error message on this thread, excluding the
/// terminating nul; 0 when the last call succeeded.
#[no_mangle]
pub extern "C" fn splitsde_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message into `buf` (nul-terminated, truncated to
/// `len - 1` bytes). Returns the number of bytes written without the nul.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn splitsde_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// Builds a problem from row-major `dim × dim` matrices: `a`, then
/// `n_noise` noise operators packed back to back in `noise_ops`.
///
/// # Safety
/// Pointers must reference arrays of the stated sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsde_linear_problem_new(
    dim: usize,
    a: *const f64,
    n_noise: usize,
    noise_ops: *const f64,
    y0: *const f64,
    t_end: f64,
    out: *mut *mut SplitsdeLinearProblem,
) -> SplitsdeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let sq = dim.checked_mul(dim).ok_or_else(|| Error::InvalidInput("dimension overflow".into()))?;
        let a = DenseMatrix::new(dim, dim, slice(a, sq, "a")?.to_vec())?;
        let ops = slice(noise_ops, sq * n_noise, "noise_ops")?;
        let noise = ops.chunks(sq.max(1)).take(n_noise).map(|c| DenseMatrix::new(dim, dim, c.to_vec())).collect::<Result<Vec<_>, _>>()?;
        let y0 = slice(y0, dim, "y0")?.to_vec();
        let inner = LinearSdeProblem::new(a, noise, y0, t_end)?;
        *out = Box::into_raw(Box::new(SplitsdeLinearProblem { inner }));
        Ok(())
    })
}

/// Builds a named preset: `scalar10`, `vec2x2:<weak01|weak001|strong>` or
/// `vecMxM:<m>`.
///
/// # Safety
/// `name` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsde_linear_problem_preset(
    name: *const c_char,
    out: *mut *mut SplitsdeLinearProblem,
) -> SplitsdeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let preset = ProblemPreset::parse(text(name, "name")?)?;
        let inner = preset.linear(1.0)?;
        *out = Box::into_raw(Box::new(SplitsdeLinearProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from a `splitsde_linear_problem_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn splitsde_linear_problem_free(p: *mut SplitsdeLinearProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// State dimension, 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn splitsde_linear_problem_dim(p: *const SplitsdeLinearProblem) -> usize {
    p.as_ref().map_or(0, |p| p.inner.dim())
}

/// Number of noise operators, 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn splitsde_linear_problem_noise_dims(p: *const SplitsdeLinearProblem) -> usize {
    p.as_ref().map_or(0, |p| p.inner.noise_dims())
}

/// Draws a path of `n_steps` steps of size `dt` from `seed`. With `quiet`
/// set, all increments and the quadratic variation are zero.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsde_path_generate(
    dims: usize,
    n_steps: usize,
    dt: f64,
    seed: u64,
    quiet: bool,
    out: *mut *mut SplitsdeWienerPath,
) -> SplitsdeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = if quiet {
            WienerPath::quiet(dims, n_steps, dt, seed)?
        } else {
            WienerPath::generate(dims, n_steps, dt, seed)?
        };
        *out = Box::into_raw(Box::new(SplitsdeWienerPath { inner }));
        Ok(())
    })
}

/// Sums `factor` consecutive increments into a new path.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsde_path_coarsen(
    path: *const SplitsdeWienerPath,
    factor: usize,
    out: *mut *mut SplitsdeWienerPath,
) -> SplitsdeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = handle(path, "path")?.inner.coarsen(factor)?;
        *out = Box::into_raw(Box::new(SplitsdeWienerPath { inner }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from a `splitsde_path_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn splitsde_path_free(p: *mut SplitsdeWienerPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn splitsde_path_n_steps(p: *const SplitsdeWienerPath) -> usize {
    p.as_ref().map_or(0, |p| p.inner.n_steps())
}

/// Copies the main increments (row-major `n_steps × dims`) into `buf`.
///
/// # Safety
/// `path` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn splitsde_path_increments(
    path: *const SplitsdeWienerPath,
    buf: *mut f64,
    len: usize,
) -> SplitsdeStatus {
    guard(|| {
        let src = handle(path, "path")?.inner.increments();
        if len != src.len() {
            return Err(Error::InvalidInput(format!("buffer holds {len} values, path has {}", src.len())).into());
        }
        slice_mut(buf, len, "buf")?.copy_from_slice(src);
        Ok(())
    })
}

/// One step of a linear scheme (`em`, `milstein`, `milstein_full`,
/// `ab_split`, `summative:<n>`, `iter:<k>`, `exact`) from `y` to `y_out`.
///
/// # Safety
/// Handles must be live; `y` and `y_out` must hold the problem dimension.
#[no_mangle]
pub unsafe extern "C" fn splitsde_linear_step(
    problem: *const SplitsdeLinearProblem,
    path: *const SplitsdeWienerPath,
    step: usize,
    scheme: *const c_char,
    y: *const f64,
    y_out: *mut f64,
) -> SplitsdeStatus {
    guard(|| {
        let p = &handle(problem, "problem")?.inner;
        let path = &handle(path, "path")?.inner;
        let name = text(scheme, "scheme")?;
        let y = slice(y, p.dim(), "y")?;
        let out = slice_mut(y_out, p.dim(), "y_out")?;
        let ctx = path.context(step)?;
        let next = if name == "exact" {
            exact_linear_step(y, p, &ctx)?
        } else {
            match Scheme::parse(name)? {
                Scheme::Em => em_step_linear(y, p, &ctx)?,
                Scheme::Milstein => milstein_step_diag(y, p, &ctx)?,
                Scheme::MilsteinFull => milstein_step_full(y, p, &ctx)?,
                Scheme::AbSplit => ab_split_step(y, p, &ctx)?,
                Scheme::Summative(n) => summative_split_step(y, p, &ctx, n)?,
                Scheme::Iter(k) if p.noise_dims() == 1 => iter_scalar_step(y, p, &ctx, &IterConfig::with_iterations(k))?,
                Scheme::Iter(k) => iter_vectorial_step(y, p, &ctx, &IterConfig::with_iterations(k))?,
                s => return Err(Error::Unsupported(format!("scheme `{s}` does not apply to linear problems")).into()),
            }
        };
        out.copy_from_slice(&next);
        Ok(())
    })
}

/// One step of a Coulomb scheme (`em`, `milstein`,
/// `coulomb_relax[:<sweeps>,<rule>]`, `coulomb_taylor[:<sweeps>,<rule>]`) on
/// `state = (v, mu, phi)`. `path` must have three noise dimensions.
///
/// # Safety
/// `path` must be a live handle; `state` and `state_out` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn splitsde_coulomb_step(
    path: *const SplitsdeWienerPath,
    step: usize,
    scheme: *const c_char,
    state: *const f64,
    state_out: *mut f64,
) -> SplitsdeStatus {
    guard(|| {
        let path = &handle(path, "path")?.inner;
        let scheme = Scheme::parse(text(scheme, "scheme")?)?.resolved(&IterConfig::default());
        let s = CoulombState::from_slice(slice(state, 3, "state")?);
        let out = slice_mut(state_out, 3, "state_out")?;
        let p = CoulombProblem::default();
        let ctx = path.context(step)?;
        let next = match scheme {
            Scheme::Em => em_step_coulomb(&s, &p, &ctx)?,
            Scheme::Milstein => milstein_step_coulomb(&s, &p, &ctx)?,
            Scheme::CoulombRelax { sweeps, rule } | Scheme::CoulombTaylor { sweeps, rule } => {
                let cfg = IterConfig {
                    sweeps: sweeps.expect("resolved"),
                    quad_rule: rule.expect("resolved"),
                    ..IterConfig::default()
                };
                if matches!(scheme, Scheme::CoulombRelax { .. }) {
                    coulomb_relax_step(&s, &p, &ctx, &cfg)?
                } else {
                    coulomb_taylor_step(&s, &p, &ctx, &cfg)?
                }
            }
            s => return Err(Error::Unsupported(format!("scheme `{s}` does not apply to the coulomb problem")).into()),
        };
        out.copy_from_slice(&next.to_array());
        Ok(())
    })
}

/// `out = exp(a)` for a row-major `n × n` matrix.
///
/// # Safety
/// `a` and `out` must hold `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn splitsde_mat_exp(n: usize, a: *const f64, out: *mut f64) -> SplitsdeStatus {
    guard(|| {
        let sq = n.checked_mul(n).ok_or_else(|| Error::InvalidInput("dimension overflow".into()))?;
        let m = DenseMatrix::new(n, n, slice(a, sq, "a")?.to_vec())?;
        let e = m.exp()?;
        slice_mut(out, sq, "out")?.copy_from_slice(e.as_slice());
        Ok(())
    })
}

/// Runs an experiment described by `key=value` text and returns the report
/// in the configured format as a newly allocated string, released with
/// [`splitsde_string_free`]. Output and plot paths in the text are honoured
/// as well.
///
/// # Safety
/// `config` must be a nul-terminated string; `report_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsde_run_experiment(
    config: *const c_char,
    report_out: *mut *mut c_char,
) -> SplitsdeStatus {
    guard(|| {
        let out = out_ptr(report_out, "report_out")?;
        let cfg = ExperimentConfig::from_text(text(config, "config")?)?;
        let result = run_experiment(&cfg)?;
        if let Some(path) = &cfg.output {
            splitsde::harness::emit_report(&result.reports, cfg.format, path)?;
        }
        if let Some(dir) = &cfg.plot_dir {
            splitsde::harness::emit_plot_data(&result.reports, &result.trajectories, cfg.t_end, dir)?;
        }
        let report = render_report(&result.reports, cfg.format)?;
        *out = CString::new(report).expect("report has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn splitsde_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
