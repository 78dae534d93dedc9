//! Iterative splitting schemes.
//!
//! Scalar noise: the first iterate is the deterministic flow `exp(A dt) y`;
//! each further iterate adds a commutator correction built from the step's
//! noise refined on a sub-grid. Vectorial noise: Milstein with the Lévy
//! term and an exponential drift factor, plus an optional triple-product
//! term. Coulomb: fixpoint sweeps around either the relaxation matrix or the
//! drift Jacobian, with the stochastic convolution done by quadrature.

use crate::direct::{LinearKernel, StepContext};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problems::{CoulombProblem, CoulombState, LinearSdeProblem};
use crate::wiener::{bridge_refine, keyed_rng, tag};

/// Quadrature for the stochastic convolution of the Coulomb schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    Trapezoid,
    Simpson,
}

impl QuadRule {
    pub fn name(self) -> &'static str {
        match self {
            QuadRule::Trapezoid => "trapezoid",
            QuadRule::Simpson => "simpson",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "trapezoid" => Some(QuadRule::Trapezoid),
            "simpson" => Some(QuadRule::Simpson),
            _ => None,
        }
    }
}

/// Form of the third-iterate correction `C3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C3Variant {
    /// `Σ_j [P, E_j] C2(m_j) δt`, a midpoint rule for the time integral.
    Riemann,
    /// `Σ_j (P E_j C2(m_j) − E_j P C2(m_j))` with no weight.
    Unweighted,
    /// `Σ_j (P E_j C2(m_j) − E_j P C2(m_j) ΔW_j)`.
    IncrementWeighted,
}

impl C3Variant {
    pub fn name(self) -> &'static str {
        match self {
            C3Variant::Riemann => "riemann",
            C3Variant::Unweighted => "unweighted",
            C3Variant::IncrementWeighted => "increment",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "riemann" => Some(C3Variant::Riemann),
            "unweighted" => Some(C3Variant::Unweighted),
            "increment" => Some(C3Variant::IncrementWeighted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterConfig {
    pub iterations: usize,
    pub quadrature_substeps: usize,
    pub quad_rule: QuadRule,
    pub sweeps: usize,
    pub c3_variant: C3Variant,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            iterations: 2,
            quadrature_substeps: 10,
            quad_rule: QuadRule::Trapezoid,
            sweeps: 2,
            c3_variant: C3Variant::Riemann,
        }
    }
}

impl IterConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        Self { iterations, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.iterations) {
            return Err(Error::invalid(format!("iterations must be 1, 2 or 3, got {}", self.iterations)));
        }
        if self.quadrature_substeps == 0 {
            return Err(Error::invalid("quadrature_substeps must be positive"));
        }
        if self.sweeps == 0 {
            return Err(Error::invalid("sweeps must be positive"));
        }
        if self.quad_rule == QuadRule::Simpson && self.quadrature_substeps % 2 != 0 {
            return Err(Error::invalid(format!(
                "simpson needs an even sub-step count, got {}",
                self.quadrature_substeps
            )));
        }
        Ok(())
    }
}

/// Sub-grid increments of one step: `n` Brownian-bridge pieces summing to the
/// step's increment, drawn from the stream `(seed, "bridge" ⊕ dt, step)`.
pub fn bridge_increments(ctx: &StepContext, n: usize) -> Vec<f64> {
    if ctx.quiet {
        return vec![0.0; n];
    }
    let mut rng = keyed_rng(ctx.seed, tag::BRIDGE ^ ctx.dt.to_bits(), ctx.step as u64);
    bridge_refine(ctx.dw[0], ctx.dt, n, &mut rng)
}

/// Cached exponentials for the scalar-noise iterative scheme at one
/// `(problem, dt, N_q)`.
///
/// The step is cut into `2 N_q` half sub-steps of width `h`; `C1` is the
/// midpoint sum over that grid, so the midpoints of the `N_q` sub-steps used
/// by `C3` are grid points.
#[derive(Debug, Clone)]
pub struct IterScalarKernel<'p> {
    problem: &'p LinearSdeProblem,
    dt: f64,
    cfg: IterConfig,
    exp_a: DenseMatrix,
    half_exps: Vec<DenseMatrix>,
    mid_exps: Vec<DenseMatrix>,
}

impl<'p> IterScalarKernel<'p> {
    pub fn new(problem: &'p LinearSdeProblem, dt: f64, cfg: IterConfig) -> Result<Self> {
        cfg.validate()?;
        if problem.noise_dims() != 1 {
            return Err(Error::invalid(format!(
                "iter_scalar_step needs a single noise operator, problem has {}; use iter_vectorial_step",
                problem.noise_dims()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("step size must be positive, got {dt}")));
        }
        let nq = cfg.quadrature_substeps;
        let h = dt / (2 * nq) as f64;
        let exp_a = problem.a.scale(dt).exp()?;
        let (half_exps, mid_exps) = if cfg.iterations > 1 {
            let step = problem.a.scale(h).exp()?;
            let mut half = Vec::with_capacity(2 * nq);
            half.push(problem.a.scale(0.5 * h).exp()?);
            for k in 1..2 * nq {
                let next = half[k - 1].mul(&step)?;
                half.push(next);
            }
            let mids = if cfg.iterations > 2 {
                (0..nq).map(|j| problem.a.scale((2 * j + 1) as f64 * h).exp()).collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            (half, mids)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self { problem, dt, cfg, exp_a, half_exps, mid_exps })
    }

    pub fn step(&self, y: &[f64], ctx: &StepContext) -> Result<Vec<f64>> {
        self.problem.check_state(y)?;
        if ctx.dims() != 1 {
            return Err(Error::invalid(format!("scalar-noise step given {} noise dimensions", ctx.dims())));
        }
        if (ctx.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::invalid(format!("context step {} differs from kernel step {}", ctx.dt, self.dt)));
        }
        let x1 = self.exp_a.apply(y);
        if self.cfg.iterations == 1 {
            return Ok(x1);
        }
        let p = &self.problem.noise_ops[0];
        let n = x1.len();
        let nq = self.cfg.quadrature_substeps;
        let w = bridge_increments(ctx, 2 * nq);

        // C1(t) u and C1(t) P u accumulate along the half grid.
        let pu = p.apply(&x1);
        let mut c1u = vec![0.0; n];
        let mut c1pu = vec![0.0; n];
        // C2(m_j) u, captured at the sub-step midpoints
        let mut c2_mid: Vec<Vec<f64>> = Vec::with_capacity(if self.cfg.iterations > 2 { nq } else { 0 });
        for (k, (e, &wk)) in self.half_exps.iter().zip(&w).enumerate() {
            e.mul_vec_acc(wk, &x1, &mut c1u);
            e.mul_vec_acc(wk, &pu, &mut c1pu);
            if self.cfg.iterations > 2 && k % 2 == 0 {
                c2_mid.push(commutator_apply(p, &c1u, &c1pu));
            }
        }
        let mut out = x1.clone();
        let c2u = commutator_apply(p, &c1u, &c1pu);
        for (o, c) in out.iter_mut().zip(&c2u) {
            *o += c;
        }
        if self.cfg.iterations == 2 {
            return Ok(out);
        }

        let delta = self.dt / nq as f64;
        for (j, (e, z)) in self.mid_exps.iter().zip(&c2_mid).enumerate() {
            let (first, second) = match self.cfg.c3_variant {
                C3Variant::Riemann => (delta, delta),
                C3Variant::Unweighted => (1.0, 1.0),
                C3Variant::IncrementWeighted => (1.0, w[2 * j] + w[2 * j + 1]),
            };
            // P E z − E P z
            p.mul_vec_acc(first, &e.apply(z), &mut out);
            e.mul_vec_acc(-second, &p.apply(z), &mut out);
        }
        Ok(out)
    }
}

/// `[P, C] u` given `C u` and `C P u`.
fn commutator_apply(p: &DenseMatrix, cu: &[f64], cpu: &[f64]) -> Vec<f64> {
    let mut out = p.apply(cu);
    for (o, c) in out.iter_mut().zip(cpu) {
        *o -= c;
    }
    out
}

pub fn iter_scalar_step(
    y: &[f64],
    p: &LinearSdeProblem,
    ctx: &StepContext,
    cfg: &IterConfig,
) -> Result<Vec<f64>> {
    IterScalarKernel::new(p, ctx.dt, *cfg)?.step(y, ctx)
}

/// Vectorial iterates on a cached [`LinearKernel`].
pub fn iter_vectorial_with(
    kernel: &LinearKernel,
    y: &[f64],
    ctx: &StepContext,
    iterations: usize,
) -> Result<Vec<f64>> {
    match iterations {
        1 | 2 => {}
        3 => return Err(Error::Unsupported("vectorial noise has no third iterate".into())),
        k => return Err(Error::invalid(format!("iterations must be 1, 2 or 3, got {k}"))),
    }
    kernel.check(y, ctx)?;
    let mut out = kernel.exp_a().apply(y);
    kernel.add_linear_noise(y, ctx, &mut out);
    kernel.add_diagonal_correction(y, ctx, &mut out);
    kernel.add_levy_correction(y, ctx, &mut out);
    if iterations == 2 {
        kernel.add_triple_correction(y, ctx, &mut out);
    }
    Ok(out)
}

pub fn iter_vectorial_step(
    y: &[f64],
    p: &LinearSdeProblem,
    ctx: &StepContext,
    cfg: &IterConfig,
) -> Result<Vec<f64>> {
    if cfg.iterations == 3 {
        return Err(Error::Unsupported("vectorial noise has no third iterate".into()));
    }
    cfg.validate()?;
    iter_vectorial_with(&LinearKernel::new(p, ctx.dt)?, y, ctx, cfg.iterations)
}

/// `∫ exp(Â (t_{n+1} − s)) B(s) dW(s)` over one step by the chosen rule.
pub fn stochastic_convolution(
    a_hat: &DenseMatrix,
    b_start: &DenseMatrix,
    b_mid: &DenseMatrix,
    b_end: &DenseMatrix,
    dw: &[f64],
    dt: f64,
    rule: QuadRule,
) -> Result<Vec<f64>> {
    let n = a_hat.rows();
    if !a_hat.is_square() {
        return Err(Error::invalid("convolution operator must be square"));
    }
    for b in [b_start, b_mid, b_end] {
        if b.rows() != n || b.cols() != dw.len() {
            return Err(Error::invalid(format!(
                "diffusion is {}x{}, expected {n}x{}",
                b.rows(),
                b.cols(),
                dw.len()
            )));
        }
    }
    let full = a_hat.scale(dt).exp()?;
    let start = full.apply(&b_start.apply(dw));
    let end = b_end.apply(dw);
    let out = match rule {
        QuadRule::Trapezoid => end.iter().zip(&start).map(|(e, s)| 0.5 * (e + s)).collect(),
        QuadRule::Simpson => {
            let mid = a_hat.scale(0.5 * dt).exp()?.apply(&b_mid.apply(dw));
            (0..n).map(|i| (end[i] + 4.0 * mid[i] + start[i]) / 6.0).collect()
        }
    };
    Ok(out)
}

fn coulomb_checks(s: &CoulombState, p: &CoulombProblem, ctx: &StepContext, cfg: &IterConfig) -> Result<CoulombState> {
    cfg.validate()?;
    if ctx.dims() != 3 {
        return Err(Error::invalid(format!("Coulomb steps need 3 noise dimensions, got {}", ctx.dims())));
    }
    let (s, _) = p.clamp(*s)?;
    Ok(s)
}

fn midpoint(a: &CoulombState, b: &CoulombState) -> CoulombState {
    CoulombState::new(0.5 * (a.v + b.v), 0.5 * (a.mu + b.mu), 0.5 * (a.phi + b.phi))
}

fn sweep_result(x: Vec<f64>, sweep: usize) -> Result<CoulombState> {
    let out = CoulombState::from_slice(&x);
    if !out.is_finite() {
        return Err(Error::Divergence { sweep, reason: format!("non-finite iterate {:?}", out.to_array()) });
    }
    Ok(out)
}

/// Fixpoint sweeps with the relaxation matrix `Â(v_i)`; sweep 0 freezes the
/// coefficients at the start state.
pub fn coulomb_relax_step(
    s: &CoulombState,
    p: &CoulombProblem,
    ctx: &StepContext,
    cfg: &IterConfig,
) -> Result<CoulombState> {
    Ok(coulomb_relax_sweeps(s, p, ctx, cfg)?.pop().expect("at least one sweep"))
}

/// Every sweep iterate of [`coulomb_relax_step`], in order.
pub fn coulomb_relax_sweeps(
    s: &CoulombState,
    p: &CoulombProblem,
    ctx: &StepContext,
    cfg: &IterConfig,
) -> Result<Vec<CoulombState>> {
    let s = coulomb_checks(s, p, ctx, cfg)?;
    let x0 = s.to_array();
    let b_start = p.diffusion(&s)?;
    let mut current = s;
    let mut iterates = Vec::with_capacity(cfg.sweeps);
    for sweep in 0..cfg.sweeps {
        let a_hat = p.relax_matrix(&current)?;
        let mut next = a_hat.scale(ctx.dt).exp()?.apply(&x0);
        let conv = stochastic_convolution(
            &a_hat,
            &b_start,
            &p.diffusion(&midpoint(&s, &current))?,
            &p.diffusion(&current)?,
            ctx.dw,
            ctx.dt,
            cfg.quad_rule,
        )?;
        for (x, c) in next.iter_mut().zip(&conv) {
            *x += c;
        }
        current = sweep_result(next, sweep)?;
        iterates.push(current);
    }
    Ok(iterates)
}

/// Jacobian linearisation `a(x) ≈ ã + J x` around the start state, the
/// deterministic part by variation of constants with the series
/// `(I dt + J dt²/2 + J² dt³/6) ã`, then fixpoint sweeps over the noise term.
pub fn coulomb_taylor_step(
    s: &CoulombState,
    p: &CoulombProblem,
    ctx: &StepContext,
    cfg: &IterConfig,
) -> Result<CoulombState> {
    let s = coulomb_checks(s, p, ctx, cfg)?;
    let x0 = s.to_array();
    let j = p.jacobian(&s)?;
    let a = p.drift(&s)?;
    let jx = j.apply(&x0);
    let a_tilde: Vec<f64> = a.iter().zip(&jx).map(|(a, b)| a - b).collect();
    let deterministic = taylor_deterministic(&j, &x0, &a_tilde, ctx.dt)?;

    let b_start = p.diffusion(&s)?;
    let mut current = s;
    for sweep in 0..cfg.sweeps {
        let conv = stochastic_convolution(
            &j,
            &b_start,
            &p.diffusion(&midpoint(&s, &current))?,
            &p.diffusion(&current)?,
            ctx.dw,
            ctx.dt,
            cfg.quad_rule,
        )?;
        let next: Vec<f64> = deterministic.iter().zip(&conv).map(|(d, c)| d + c).collect();
        current = sweep_result(next, sweep)?;
    }
    Ok(current)
}

/// `exp(J dt) x + (I dt + J dt²/2 + J² dt³/6) ã`
pub(crate) fn taylor_deterministic(j: &DenseMatrix, x: &[f64], a_tilde: &[f64], dt: f64) -> Result<Vec<f64>> {
    let mut out = j.scale(dt).exp()?.apply(x);
    let ja = j.apply(a_tilde);
    let jja = j.apply(&ja);
    for i in 0..out.len() {
        out[i] += dt * a_tilde[i] + dt * dt / 2.0 * ja[i] + dt * dt * dt / 6.0 * jja[i];
    }
    Ok(out)
}
