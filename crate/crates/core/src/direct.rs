//! Direct one-step integrators: Euler–Maruyama, Milstein (with and without
//! the commutator Lévy-area term), recursive and summative exponential
//! splittings, the exponential reference map, and the Coulomb EM/Milstein
//! updates.
//!
//! The free functions rebuild every operator they need on each call. For
//! ensembles use [`LinearKernel`], which caches the step-size dependent
//! exponentials and products.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problems::{CoulombProblem, CoulombState, LinearSdeProblem};
use crate::wiener::{keyed_rng, levy_pair_from, standard_normal, tag};

/// The noise of one step: main and auxiliary increments for every dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext<'a> {
    pub step: usize,
    pub dt: f64,
    pub dw: &'a [f64],
    pub aux: &'a [f64],
    pub seed: u64,
    /// Set for zero-noise runs: every Itô correction drops out with the noise.
    pub quiet: bool,
}

impl<'a> StepContext<'a> {
    pub fn new(step: usize, dt: f64, dw: &'a [f64], aux: &'a [f64], seed: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("step size must be positive, got {dt}")));
        }
        if dw.is_empty() || dw.len() != aux.len() {
            return Err(Error::invalid("main and auxiliary increments must be nonempty and of equal length"));
        }
        Ok(Self { step, dt, dw, aux, seed, quiet: false })
    }

    pub fn dims(&self) -> usize {
        self.dw.len()
    }

    /// `dt`, or 0 in quiet mode.
    pub fn quadratic_variation(&self) -> f64 {
        if self.quiet {
            0.0
        } else {
            self.dt
        }
    }

    /// `(J_ji, J_ij)` from this step's increments.
    pub fn levy_pair(&self, i: usize, j: usize) -> (f64, f64) {
        levy_pair_from(self.dw[i], self.dw[j], self.aux[i], self.aux[j])
    }

    /// Iterated integral `A_{k,l}`.
    pub fn area(&self, k: usize, l: usize) -> f64 {
        self.levy_pair(l, k).0
    }
}

fn check_noise(p: &LinearSdeProblem, ctx: &StepContext) -> Result<()> {
    if ctx.dims() != p.noise_dims() {
        return Err(Error::invalid(format!(
            "path has {} noise dimensions, problem has {}",
            ctx.dims(),
            p.noise_dims()
        )));
    }
    Ok(())
}

fn single_noise(p: &LinearSdeProblem, scheme: &str) -> Result<()> {
    if p.noise_dims() != 1 {
        return Err(Error::invalid(format!(
            "{scheme} is defined for a single noise operator, problem has {}",
            p.noise_dims()
        )));
    }
    Ok(())
}

/// Step-size dependent operators of a linear problem, computed once per
/// `(problem, dt)`.
#[derive(Debug, Clone)]
pub struct LinearKernel<'p> {
    problem: &'p LinearSdeProblem,
    dt: f64,
    exp_a: DenseMatrix,
    ppt: Vec<DenseMatrix>,
    ito_generator: DenseMatrix,
    split_flow: Option<DenseMatrix>,
    commutators: Vec<(usize, usize, DenseMatrix)>,
    triples: Vec<DenseMatrix>,
}

impl<'p> LinearKernel<'p> {
    pub fn new(problem: &'p LinearSdeProblem, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("step size must be positive, got {dt}")));
        }
        let exp_a = problem.a.scale(dt).exp()?;
        let ppt: Vec<DenseMatrix> =
            problem.noise_ops.iter().map(|p| p.mul(&p.transpose())).collect::<Result<_>>()?;
        let mut ito_generator = problem.a.clone();
        for q in &ppt {
            ito_generator.add_scaled_assign(-0.5, q)?;
        }
        let split_flow = if problem.noise_dims() == 1 { Some(ito_generator.scale(dt).exp()?) } else { None };
        let m = problem.noise_dims();
        let mut commutators = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                commutators.push((i, j, problem.noise_ops[i].commutator(&problem.noise_ops[j])?));
            }
        }
        let triples = problem
            .noise_ops
            .iter()
            .zip(&ppt)
            .map(|(p, q)| q.mul(p))
            .collect::<Result<_>>()?;
        Ok(Self { problem, dt, exp_a, ppt, ito_generator, split_flow, commutators, triples })
    }

    pub fn problem(&self) -> &LinearSdeProblem {
        self.problem
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `exp(A dt)`
    pub fn exp_a(&self) -> &DenseMatrix {
        &self.exp_a
    }

    pub(crate) fn check(&self, y: &[f64], ctx: &StepContext) -> Result<()> {
        self.problem.check_state(y)?;
        check_noise(self.problem, ctx)?;
        if (ctx.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::invalid(format!("context step {} differs from kernel step {}", ctx.dt, self.dt)));
        }
        Ok(())
    }

    /// `out += Σ_j P_j y ΔW_j`
    pub(crate) fn add_linear_noise(&self, y: &[f64], ctx: &StepContext, out: &mut [f64]) {
        for (p, &dw) in self.problem.noise_ops.iter().zip(ctx.dw) {
            p.mul_vec_acc(dw, y, out);
        }
    }

    /// `out += Σ_i ½ P_i P_iᵗ y (ΔW_i² − dt)`
    pub(crate) fn add_diagonal_correction(&self, y: &[f64], ctx: &StepContext, out: &mut [f64]) {
        let qv = ctx.quadratic_variation();
        for (q, &dw) in self.ppt.iter().zip(ctx.dw) {
            q.mul_vec_acc(0.5 * (dw * dw - qv), y, out);
        }
    }

    /// `out += Σ_{i<j} ½ [P_i, P_j] (J_ji − J_ij) y`
    pub(crate) fn add_levy_correction(&self, y: &[f64], ctx: &StepContext, out: &mut [f64]) {
        for (i, j, c) in &self.commutators {
            let (j_ji, j_ij) = ctx.levy_pair(*i, *j);
            c.mul_vec_acc(0.5 * (j_ji - j_ij), y, out);
        }
    }

    /// `out += Σ_i ½ P_i P_iᵗ P_i y ((ΔW_i²/3 − dt) ΔW_i)`
    pub(crate) fn add_triple_correction(&self, y: &[f64], ctx: &StepContext, out: &mut [f64]) {
        let qv = ctx.quadratic_variation();
        for (t, &dw) in self.triples.iter().zip(ctx.dw) {
            t.mul_vec_acc(0.5 * ((dw * dw / 3.0 - qv) * dw), y, out);
        }
    }

    pub fn em(&self, y: &[f64], ctx: &StepContext) -> Result<Vec<f64>> {
        self.check(y, ctx)?;
        let mut out = y.to_vec();
        self.problem.a.mul_vec_acc(self.dt, y, &mut out);
        self.add_linear_noise(y, ctx, &mut out);
        Ok(out)
    }

    pub fn milstein_diag(&self, y: &[f64], ctx: &StepContext) -> Result<Vec<f64>> {
        let mut out = self.em(y, ctx)?;
        self.add_diagonal_correction(y, ctx, &mut out);
        Ok(out)
    }

    pub fn milstein_full(&self, y: &[f64], ctx: &StepContext) -> Result<Vec<f64>> {
        let mut out = self.milstein_diag(y, ctx)?;
        self.add_levy_correction(y, ctx, &mut out);
        Ok(out)
    }

    fn split_drift(&self, y: &[f64], ctx: &StepContext) -> Result<Vec<f64>> {
        single_noise(self.problem, "splitting")?;
        self.check(y, ctx)?;
        let flow = if ctx.quiet { &self.exp_a } else { self.split_flow.as_ref().expect("single noise") };
        Ok(flow.apply(y))
    }

    /// `exp(P ΔW) exp((A − P Pᵗ/2) dt) y`
    pub fn ab_split(&self, y: &[f64], ctx: &StepContext) -> Result<Vec<f64>> {
        let tilde = self.split_drift(y, ctx)?;
        let noise = self.problem.noise_ops[0].scale(ctx.dw[0]).exp()?;
        Ok(noise.apply(&tilde))
    }

    /// Recursive splitting with the noise argument `P (1/√Ñ) Σ_j ΔW_j` built
    /// from `n_sub` fresh sub-increments of variance `dt/Ñ`.
    pub fn summative(&self, y: &[f64], ctx: &StepContext, n_sub: usize) -> Result<Vec<f64>> {
        let sub = summative_increments(ctx, n_sub)?;
        let tilde = self.split_drift(y, ctx)?;
        let noise = self.problem.noise_ops[0].scale(summative_argument(&sub)).exp()?;
        Ok(noise.apply(&tilde))
    }

    /// `exp(A dt − ½ Σ P_j P_jᵗ dt + Σ P_j ΔW_j) y`
    pub fn exact(&self, y: &[f64], ctx: &StepContext) -> Result<Vec<f64>> {
        self.check(y, ctx)?;
        let mut arg = if ctx.quiet { self.problem.a.scale(self.dt) } else { self.ito_generator.scale(self.dt) };
        for (p, &dw) in self.problem.noise_ops.iter().zip(ctx.dw) {
            arg.add_scaled_assign(dw, p)?;
        }
        Ok(arg.exp()?.apply(y))
    }
}

/// `Ñ` sub-increments of variance `dt/Ñ` from the stream
/// `(seed, "summative", step)`; zeros in quiet mode.
pub fn summative_increments(ctx: &StepContext, n_sub: usize) -> Result<Vec<f64>> {
    if n_sub == 0 {
        return Err(Error::invalid("summative splitting needs at least one sub-increment"));
    }
    if ctx.quiet {
        return Ok(vec![0.0; n_sub]);
    }
    let mut rng = keyed_rng(ctx.seed, tag::SUMMATIVE, ctx.step as u64);
    let s = (ctx.dt / n_sub as f64).sqrt();
    Ok((0..n_sub).map(|_| s * standard_normal(&mut rng)).collect())
}

/// `(1/√Ñ) Σ_j ΔW_j`
pub fn summative_argument(sub: &[f64]) -> f64 {
    sub.iter().sum::<f64>() / (sub.len() as f64).sqrt()
}

pub fn em_step_linear(y: &[f64], p: &LinearSdeProblem, ctx: &StepContext) -> Result<Vec<f64>> {
    LinearKernel::new(p, ctx.dt)?.em(y, ctx)
}

pub fn milstein_step_diag(y: &[f64], p: &LinearSdeProblem, ctx: &StepContext) -> Result<Vec<f64>> {
    LinearKernel::new(p, ctx.dt)?.milstein_diag(y, ctx)
}

pub fn milstein_step_full(y: &[f64], p: &LinearSdeProblem, ctx: &StepContext) -> Result<Vec<f64>> {
    LinearKernel::new(p, ctx.dt)?.milstein_full(y, ctx)
}

pub fn ab_split_step(y: &[f64], p: &LinearSdeProblem, ctx: &StepContext) -> Result<Vec<f64>> {
    single_noise(p, "ab_split")?;
    LinearKernel::new(p, ctx.dt)?.ab_split(y, ctx)
}

pub fn summative_split_step(
    y: &[f64],
    p: &LinearSdeProblem,
    ctx: &StepContext,
    n_sub: usize,
) -> Result<Vec<f64>> {
    single_noise(p, "summative")?;
    LinearKernel::new(p, ctx.dt)?.summative(y, ctx, n_sub)
}

pub fn exact_linear_step(y: &[f64], p: &LinearSdeProblem, ctx: &StepContext) -> Result<Vec<f64>> {
    LinearKernel::new(p, ctx.dt)?.exact(y, ctx)
}

fn coulomb_inputs(s: &CoulombState, p: &CoulombProblem, ctx: &StepContext) -> Result<CoulombState> {
    if ctx.dims() != 3 {
        return Err(Error::invalid(format!("Coulomb steps need 3 noise dimensions, got {}", ctx.dims())));
    }
    Ok(p.clamp(*s)?.0)
}

fn finite_or_singular(out: CoulombState) -> Result<CoulombState> {
    if !out.is_finite() {
        return Err(Error::Singularity { state: out.to_array(), reason: "step produced a non-finite state".into() });
    }
    Ok(out)
}

pub fn em_step_coulomb(s: &CoulombState, p: &CoulombProblem, ctx: &StepContext) -> Result<CoulombState> {
    let s = coulomb_inputs(s, p, ctx)?;
    let c = p.coefficients(&s)?;
    let q = p.one_minus_mu2(&s)?;
    let (dt, dw) = (ctx.dt, ctx.dw);
    finite_or_singular(CoulombState {
        v: s.v + c.f_d * dt + (2.0 * c.d_v).sqrt() * dw[0],
        mu: s.mu - 2.0 * c.d_a * s.mu * dt + (2.0 * c.d_a * q).sqrt() * dw[1],
        phi: s.phi + (2.0 * c.d_a / q).sqrt() * dw[2],
    })
}

pub fn milstein_step_coulomb(s: &CoulombState, p: &CoulombProblem, ctx: &StepContext) -> Result<CoulombState> {
    let s = coulomb_inputs(s, p, ctx)?;
    let c = p.coefficients(&s)?;
    let q = p.one_minus_mu2(&s)?;
    let (dt, dw) = (ctx.dt, ctx.dw);
    let qv = ctx.quadratic_variation();
    let ratio = (c.d_v / c.d_a).sqrt();
    let (a_v_mu, a_v_phi, a_mu_phi) = (ctx.area(0, 1), ctx.area(0, 2), ctx.area(1, 2));

    let v = s.v + c.f_d * dt + (2.0 * c.d_v).sqrt() * dw[0] + c.d_d_v * 0.5 * (dw[0] * dw[0] - qv);
    let mu = s.mu - 2.0 * c.d_a * s.mu * dt
        + (2.0 * c.d_a * q).sqrt() * dw[1]
        - 2.0 * s.mu * c.d_a * 0.5 * (dw[1] * dw[1] - qv)
        + ratio * q.sqrt() * c.d_d_a * a_v_mu;
    let phi = s.phi
        + (2.0 * c.d_a / q).sqrt() * dw[2]
        + ratio / q.sqrt() * c.d_d_a * a_v_phi
        + 2.0 * c.d_a * s.mu / q * a_mu_phi;
    finite_or_singular(CoulombState { v, mu, phi })
}
