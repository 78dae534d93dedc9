//! Seeded Wiener increments.
//!
//! Every random draw comes from a ChaCha8 stream keyed by `(seed, tag)` with
//! the ChaCha stream id as a third key component, so a path is a pure
//! function of its seed and shape. Draw order inside a path is step-major,
//! dimension-minor, and for each `(step, dim)` the main increment is drawn
//! before the auxiliary one:
//!
//! ```text
//! for step in 0..n_steps { for dim in 0..dims { dW[step][dim]; dW_aux[step][dim] } }
//! ```

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::direct::StepContext;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Stream tags. Each consumer of randomness gets its own tag so that adding
/// a consumer never shifts another one's draws.
pub(crate) mod tag {
    pub const PATH: u64 = 0x7061_7468;
    pub const COARSE: u64 = 0x636f_6172;
    pub const SUMMATIVE: u64 = 0x7375_6d6d;
    pub const BRIDGE: u64 = 0x6272_6467;
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for the stream `(seed, tag, index)`.
pub(crate) fn keyed_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(seed),
        splitmix64(seed ^ splitmix64(tag)),
        splitmix64(tag),
        splitmix64(tag.rotate_left(32) ^ seed),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Seed of ensemble member `index` under `master_seed`. Independent of how
/// members are scheduled across workers.
pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index.wrapping_add(0x5eed)))
}

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Scale of the auxiliary increments used in the one-term Lévy-area formula.
pub fn aux_scale(dt: f64) -> f64 {
    (dt / (2.0 * PI * PI)).sqrt()
}

/// Multi-dimensional Wiener increments on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    dims: usize,
    n_steps: usize,
    dt: f64,
    seed: u64,
    increments: Vec<f64>,
    aux_increments: Vec<f64>,
    quiet: bool,
}

fn check_shape(dims: usize, n_steps: usize, dt: f64) -> Result<()> {
    if dims == 0 || n_steps == 0 {
        return Err(Error::invalid(format!("path needs dims, n_steps >= 1 (got {dims}, {n_steps})")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("path step size must be positive, got {dt}")));
    }
    Ok(())
}

impl WienerPath {
    /// Draws a fresh path. See the module docs for the draw order.
    pub fn generate(dims: usize, n_steps: usize, dt: f64, seed: u64) -> Result<Self> {
        check_shape(dims, n_steps, dt)?;
        let mut rng = keyed_rng(seed, tag::PATH, 0);
        let main = dt.sqrt();
        let aux = aux_scale(dt);
        let mut increments = Vec::with_capacity(dims * n_steps);
        let mut aux_increments = Vec::with_capacity(dims * n_steps);
        for _ in 0..n_steps * dims {
            increments.push(main * standard_normal(&mut rng));
            aux_increments.push(aux * standard_normal(&mut rng));
        }
        Ok(Self { dims, n_steps, dt, seed, increments, aux_increments, quiet: false })
    }

    /// A path whose every increment is zero and whose quadratic variation is
    /// zero as well: integrating along it switches the diffusion off.
    pub fn quiet(dims: usize, n_steps: usize, dt: f64, seed: u64) -> Result<Self> {
        check_shape(dims, n_steps, dt)?;
        Ok(Self {
            dims,
            n_steps,
            dt,
            seed,
            increments: vec![0.0; dims * n_steps],
            aux_increments: vec![0.0; dims * n_steps],
            quiet: true,
        })
    }

    /// Builds a path from explicit increments (row-major `n_steps × dims`).
    pub fn from_increments(
        dims: usize,
        dt: f64,
        seed: u64,
        increments: Vec<f64>,
        aux_increments: Vec<f64>,
    ) -> Result<Self> {
        if dims == 0 || increments.len() % dims != 0 {
            return Err(Error::invalid("increment count is not a multiple of dims"));
        }
        let n_steps = increments.len() / dims;
        check_shape(dims, n_steps, dt)?;
        if aux_increments.len() != increments.len() {
            return Err(Error::invalid("auxiliary and main increment counts differ"));
        }
        if increments.iter().chain(&aux_increments).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite increment"));
        }
        Ok(Self { dims, n_steps, dt, seed, increments, aux_increments, quiet: false })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_quiet(&self) -> bool {
        self.quiet
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn aux_increments(&self) -> &[f64] {
        &self.aux_increments
    }

    /// Main increments of one step, one per dimension.
    pub fn step_increments(&self, step: usize) -> &[f64] {
        &self.increments[step * self.dims..(step + 1) * self.dims]
    }

    pub fn step_aux(&self, step: usize) -> &[f64] {
        &self.aux_increments[step * self.dims..(step + 1) * self.dims]
    }

    pub fn increment(&self, step: usize, dim: usize) -> f64 {
        self.increments[step * self.dims + dim]
    }

    pub fn aux_increment(&self, step: usize, dim: usize) -> f64 {
        self.aux_increments[step * self.dims + dim]
    }

    /// `W_dim(t_end) - W_dim(0)`
    pub fn total(&self, dim: usize) -> f64 {
        (0..self.n_steps).map(|k| self.increment(k, dim)).sum()
    }

    /// Per-step view handed to the steppers.
    pub fn context(&self, step: usize) -> Result<StepContext<'_>> {
        if step >= self.n_steps {
            return Err(Error::invalid(format!("step {step} outside a {}-step path", self.n_steps)));
        }
        Ok(StepContext {
            step,
            dt: self.dt,
            dw: self.step_increments(step),
            aux: self.step_aux(step),
            seed: self.seed,
            quiet: self.quiet,
        })
    }

    /// Coarsens by summing `factor` consecutive main increments. Auxiliary
    /// increments are redrawn from the stream `(seed, COARSE, factor)`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(Error::invalid(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.n_steps
            )));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let n_steps = self.n_steps / factor;
        let dt = self.dt * factor as f64;
        let mut increments = vec![0.0; n_steps * self.dims];
        for k in 0..n_steps {
            for d in 0..self.dims {
                increments[k * self.dims + d] =
                    (0..factor).map(|f| self.increment(k * factor + f, d)).sum();
            }
        }
        let aux_increments = if self.quiet {
            vec![0.0; n_steps * self.dims]
        } else {
            let mut rng = keyed_rng(self.seed, tag::COARSE, factor as u64);
            let s = aux_scale(dt);
            (0..n_steps * self.dims).map(|_| s * standard_normal(&mut rng)).collect()
        };
        Ok(Self { dims: self.dims, n_steps, dt, seed: self.seed, increments, aux_increments, quiet: self.quiet })
    }

    /// `(J_ji, J_ij)` for the given step; see [`levy_pair_from`].
    pub fn levy_pair(&self, step: usize, i: usize, j: usize) -> Result<(f64, f64)> {
        if step >= self.n_steps || i >= self.dims || j >= self.dims {
            return Err(Error::invalid(format!("levy_pair index out of range ({step}, {i}, {j})")));
        }
        if i == j {
            return Err(Error::invalid("levy_pair needs i != j; the diagonal is (dW^2 - dt)/2"));
        }
        Ok(levy_pair_from(
            self.increment(step, i),
            self.increment(step, j),
            self.aux_increment(step, i),
            self.aux_increment(step, j),
        ))
    }

    /// Writes `step,dim,dW,dW_aux`, one row per `(step, dim)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,dim,dW,dW_aux")?;
        for k in 0..self.n_steps {
            for d in 0..self.dims {
                writeln!(out, "{k},{d},{:.16e},{:.16e}", self.increment(k, d), self.aux_increment(k, d))?;
            }
        }
        Ok(())
    }

    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        Ok(())
    }
}

pub fn generate_path(dims: usize, n_steps: usize, dt: f64, seed: u64) -> Result<WienerPath> {
    WienerPath::generate(dims, n_steps, dt, seed)
}

pub fn coarsen(path: &WienerPath, factor: usize) -> Result<WienerPath> {
    path.coarsen(factor)
}

pub fn levy_pair(path: &WienerPath, step: usize, i: usize, j: usize) -> Result<(f64, f64)> {
    path.levy_pair(step, i, j)
}

/// One-term iterated-integral pair from main increments `J_i, J_j` and
/// auxiliary coefficients `a_i0, a_j0`:
///
/// ```text
/// J_ji = J_j J_i / 2 - (a_i0 J_j - a_j0 J_i) / 2
/// J_ij = J_i J_j / 2 - (a_j0 J_i - a_i0 J_j) / 2
/// ```
pub fn levy_pair_from(ji: f64, jj: f64, ai: f64, aj: f64) -> (f64, f64) {
    let j_ji = 0.5 * jj * ji - 0.5 * (ai * jj - aj * ji);
    let j_ij = 0.5 * ji * jj - 0.5 * (aj * ji - ai * jj);
    (j_ji, j_ij)
}

/// Midpoint-exponential sum `Σ_l exp(A (t_l + t_{l+1})/2) ΔW_l` over the
/// first `upto / dt` steps of one path dimension.
pub fn stratonovich_matrix_integral(
    a: &DenseMatrix,
    path: &WienerPath,
    dim: usize,
    upto: f64,
) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::invalid("stratonovich integral needs a square operator"));
    }
    if dim >= path.dims() {
        return Err(Error::invalid(format!("dimension {dim} outside a {}-dim path", path.dims())));
    }
    let ratio = upto / path.dt();
    let k = ratio.round();
    if !(upto >= 0.0) || (ratio - k).abs() > 1e-9 * ratio.max(1.0) || k as usize > path.n_steps() {
        return Err(Error::invalid(format!("time {upto} is not on the path grid")));
    }
    let increments: Vec<f64> = (0..k as usize).map(|l| path.increment(l, dim)).collect();
    midpoint_exp_sum(a, &increments, path.dt())
}

/// `Σ_l exp(A (l + 1/2) h) w_l` for consecutive increments `w` of width `h`.
pub(crate) fn midpoint_exp_sum(a: &DenseMatrix, w: &[f64], h: f64) -> Result<DenseMatrix> {
    let n = a.rows();
    let mut sum = DenseMatrix::zeros(n, n);
    if w.is_empty() {
        return Ok(sum);
    }
    let step = a.scale(h).exp()?;
    let mut factor = a.scale(0.5 * h).exp()?;
    for (l, &wl) in w.iter().enumerate() {
        if l > 0 {
            factor = factor.mul(&step)?;
        }
        sum.add_scaled_assign(wl, &factor)?;
    }
    Ok(sum)
}

/// Splits `delta_w` into `n_sub` Brownian-bridge increments that sum to it.
///
/// Draws `n_sub` i.i.d. `N(0, dt/n_sub)` values and removes the excess of
/// their sum evenly, which gives the exact conditional law given the total.
pub(crate) fn bridge_refine(delta_w: f64, dt: f64, n_sub: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let s = (dt / n_sub as f64).sqrt();
    let mut z: Vec<f64> = (0..n_sub).map(|_| s * standard_normal(rng)).collect();
    let excess = (z.iter().sum::<f64>() - delta_w) / n_sub as f64;
    for v in &mut z {
        *v -= excess;
    }
    z
}
