//! Error statistics over an ensemble and log-log order fits.
//!
//! Every reduction runs over samples sorted by path index, so results are
//! bitwise reproducible whatever order the samples were produced in.

use crate::error::{Error, Result};

/// End-time error of one ensemble member against its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSample {
    pub scheme: String,
    pub dt: f64,
    pub path_index: u64,
    /// `approx - reference`, per component.
    pub diff: Vec<f64>,
    /// Euclidean norm of `diff`.
    pub error: f64,
}

impl ErrorSample {
    pub fn new(scheme: &str, dt: f64, path_index: u64, approx: &[f64], reference: &[f64]) -> Result<Self> {
        if approx.len() != reference.len() {
            return Err(Error::invalid(format!(
                "state sizes differ: {} vs {}",
                approx.len(),
                reference.len()
            )));
        }
        let diff: Vec<f64> = approx.iter().zip(reference).map(|(a, r)| a - r).collect();
        let error = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !error.is_finite() {
            return Err(Error::invalid("non-finite error sample"));
        }
        Ok(Self { scheme: scheme.to_string(), dt, path_index, diff, error })
    }

    /// Sample with a given scalar error and no component breakdown.
    pub fn scalar(scheme: &str, dt: f64, path_index: u64, error: f64) -> Self {
        Self { scheme: scheme.to_string(), dt, path_index, diff: vec![error], error: error.abs() }
    }

    /// Absolute per-component errors.
    pub fn component_errors(&self) -> Vec<f64> {
        self.diff.iter().map(|d| d.abs()).collect()
    }
}

fn sorted(samples: &[ErrorSample]) -> Vec<&ErrorSample> {
    let mut v: Vec<&ErrorSample> = samples.iter().collect();
    v.sort_by_key(|s| s.path_index);
    v
}

fn nonempty(samples: &[ErrorSample], what: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid(format!("{what} of an empty sample set")));
    }
    Ok(())
}

/// Root mean square of the per-path error norms.
pub fn strong_error(samples: &[ErrorSample]) -> Result<f64> {
    nonempty(samples, "strong error")?;
    let sum: f64 = sorted(samples).iter().map(|s| s.error * s.error).sum();
    Ok((sum / samples.len() as f64).sqrt())
}

/// Mean of the per-path error norms.
pub fn weak_error(samples: &[ErrorSample]) -> Result<f64> {
    nonempty(samples, "weak error")?;
    let sum: f64 = sorted(samples).iter().map(|s| s.error).sum();
    Ok(sum / samples.len() as f64)
}

/// Unbiased sample variance of the per-path error norms.
pub fn error_variance(samples: &[ErrorSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!("variance needs at least 2 samples, got {}", samples.len())));
    }
    let mean = weak_error(samples)?;
    let sum: f64 = sorted(samples).iter().map(|s| (s.error - mean).powi(2)).sum();
    Ok(sum / (samples.len() - 1) as f64)
}

/// `‖mean(approx − reference)‖`, the conventional weak error.
pub fn mean_bias(samples: &[ErrorSample]) -> Result<f64> {
    nonempty(samples, "mean bias")?;
    let dim = samples[0].diff.len();
    if samples.iter().any(|s| s.diff.len() != dim) {
        return Err(Error::invalid("samples have different state sizes"));
    }
    let mut mean = vec![0.0; dim];
    for s in sorted(samples) {
        for (m, d) in mean.iter_mut().zip(&s.diff) {
            *m += d;
        }
    }
    let n = samples.len() as f64;
    Ok(mean.iter().map(|m| (m / n).powi(2)).sum::<f64>().sqrt())
}

/// States on a uniform grid, `states[i]` at time `i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(dt: f64) -> Self {
        Self { dt, states: Vec::new() }
    }

    pub fn n_steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// `(1/T) Σ_{i=1}^{N} dt (x_dt(i dt) − x_ref(i dt))²`, one value per component.
pub fn time_avg_mse_components(coarse: &Trajectory, reference: &Trajectory, dt: f64, t_end: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::invalid("dt and T must be positive"));
    }
    let n = coarse.n_steps();
    if n == 0 || ((n as f64 * dt) - t_end).abs() > 1e-9 * t_end {
        return Err(Error::invalid(format!("{n} steps of {dt} do not span T = {t_end}")));
    }
    let ratio = dt / reference.dt;
    let factor = ratio.round() as usize;
    if factor == 0 || (ratio - factor as f64).abs() > 1e-9 * ratio || reference.n_steps() != n * factor {
        return Err(Error::invalid("reference grid does not contain the coarse grid"));
    }
    let dim = coarse.states[0].len();
    let mut acc = vec![0.0; dim];
    for i in 1..=n {
        let (c, r) = (&coarse.states[i], &reference.states[i * factor]);
        if c.len() != dim || r.len() != dim {
            return Err(Error::invalid("trajectory state sizes differ"));
        }
        for k in 0..dim {
            acc[k] += dt * (c[k] - r[k]).powi(2);
        }
    }
    Ok(acc.into_iter().map(|a| a / t_end).collect())
}

/// Sum over components of [`time_avg_mse_components`].
pub fn time_avg_mse(coarse: &Trajectory, reference: &Trajectory, dt: f64, t_end: f64) -> Result<f64> {
    Ok(time_avg_mse_components(coarse, reference, dt, t_end)?.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `log(error)` against `log(dt)`.
pub fn estimate_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("order fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::invalid("order fit needs positive finite step sizes and errors"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("order fit needs at least two distinct step sizes"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(OrderFit { slope, intercept, r_squared })
}

/// Aggregated statistics of one `(scheme, dt)` cell.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub scheme: String,
    pub dt: f64,
    pub n_paths: usize,
    pub strong_error: f64,
    pub weak_error: f64,
    pub mean_bias: f64,
    pub variance: f64,
    pub time_avg_mse: f64,
    pub runtime_seconds: f64,
    pub clamp_events: u64,
    pub excluded_paths: u64,
}

fn same_f64(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

impl PartialEq for ConvergenceReport {
    /// Field-wise equality with `NaN == NaN`.
    fn eq(&self, o: &Self) -> bool {
        self.scheme == o.scheme
            && same_f64(self.dt, o.dt)
            && self.n_paths == o.n_paths
            && same_f64(self.strong_error, o.strong_error)
            && same_f64(self.weak_error, o.weak_error)
            && same_f64(self.mean_bias, o.mean_bias)
            && same_f64(self.variance, o.variance)
            && same_f64(self.time_avg_mse, o.time_avg_mse)
            && same_f64(self.runtime_seconds, o.runtime_seconds)
            && self.clamp_events == o.clamp_events
            && self.excluded_paths == o.excluded_paths
    }
}

impl ConvergenceReport {
    /// Aggregates the accepted samples of one cell. Statistics that are
    /// undefined for the sample count (variance of one sample, anything of
    /// none) are `NaN`.
    pub fn from_samples(
        scheme: &str,
        dt: f64,
        samples: &[ErrorSample],
        time_avg: &[f64],
        clamp_events: u64,
        excluded_paths: u64,
    ) -> Self {
        let nan_if = |r: Result<f64>| r.unwrap_or(f64::NAN);
        let time_avg_mse = if time_avg.is_empty() { f64::NAN } else { time_avg.iter().sum::<f64>() / time_avg.len() as f64 };
        Self {
            scheme: scheme.to_string(),
            dt,
            n_paths: samples.len(),
            strong_error: nan_if(strong_error(samples)),
            weak_error: nan_if(weak_error(samples)),
            mean_bias: nan_if(mean_bias(samples)),
            variance: nan_if(error_variance(samples)),
            time_avg_mse,
            runtime_seconds: 0.0,
            clamp_events,
            excluded_paths,
        }
    }
}
