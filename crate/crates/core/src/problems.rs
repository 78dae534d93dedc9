//! Benchmark problems: three linear multiplicative-noise systems and the
//! Coulomb test-particle Langevin system in `(v, mu, phi)` coordinates.

use crate::error::{Error, Result};
use crate::linalg::{commutator, DenseMatrix};

/// `dy = A y dt + Σ_j P_j y dW_j` on `[0, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSdeProblem {
    pub a: DenseMatrix,
    pub noise_ops: Vec<DenseMatrix>,
    pub y0: Vec<f64>,
    pub t_end: f64,
}

impl LinearSdeProblem {
    pub fn new(a: DenseMatrix, noise_ops: Vec<DenseMatrix>, y0: Vec<f64>, t_end: f64) -> Result<Self> {
        let n = y0.len();
        if !a.is_square() || a.rows() != n {
            return Err(Error::invalid(format!(
                "drift operator is {}x{} but the state has {n} components",
                a.rows(),
                a.cols()
            )));
        }
        if noise_ops.is_empty() {
            return Err(Error::invalid("at least one noise operator is required"));
        }
        if let Some(j) = noise_ops.iter().position(|p| !p.is_square() || p.rows() != n) {
            return Err(Error::invalid(format!("noise operator {j} does not match the state size {n}")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
        }
        if y0.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite initial state"));
        }
        Ok(Self { a, noise_ops, y0, t_end })
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn noise_dims(&self) -> usize {
        self.noise_ops.len()
    }

    pub fn with_t_end(mut self, t_end: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
        }
        self.t_end = t_end;
        Ok(self)
    }

    pub(crate) fn check_state(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::invalid(format!(
                "state has {} components, problem has {}",
                y.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// 10×10 drift with −1 diagonal and 0.1 below it; one noise operator with
/// 0.01 diagonal and 0.005 below it; `y0 = 1`, `T = 1`.
pub fn build_scalar_noise_problem() -> LinearSdeProblem {
    let m = 10;
    let a = DenseMatrix::from_fn(m, m, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => -1.0,
        std::cmp::Ordering::Greater => 0.1,
        std::cmp::Ordering::Less => 0.0,
    })
    .expect("finite");
    let p = DenseMatrix::from_fn(m, m, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => 0.01,
        std::cmp::Ordering::Greater => 0.005,
        std::cmp::Ordering::Less => 0.0,
    })
    .expect("finite");
    LinearSdeProblem::new(a, vec![p], vec![1.0; m], 1.0).expect("valid preset")
}

/// Named perturbation levels for the 2×2 problem (`alpha1 = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    /// `alpha2 = 0.1`
    Weak01,
    /// `alpha2 = 0.01`
    Weak001,
    /// `alpha2 = 1`
    Strong,
}

impl Perturbation {
    pub fn alpha2(self) -> f64 {
        match self {
            Perturbation::Weak01 => 0.1,
            Perturbation::Weak001 => 0.01,
            Perturbation::Strong => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Perturbation::Weak01 => "weak01",
            Perturbation::Weak001 => "weak001",
            Perturbation::Strong => "strong",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "weak01" => Some(Perturbation::Weak01),
            "weak001" => Some(Perturbation::Weak001),
            "strong" => Some(Perturbation::Strong),
            _ => None,
        }
    }
}

/// Default step count of the 2×2 study on `[0, 1]`.
pub const VECTORIAL_2X2_STEPS: usize = 20;

/// `A = alpha1·diag(-1/2, -1/2)`, `P1 = alpha2·[[3/4, 1/10], [0, -3/4]]`,
/// `P2 = alpha2·[[0, 9/10], [9/10, 0]]`.
pub fn build_vectorial_2x2(alpha1: f64, alpha2: f64) -> Result<LinearSdeProblem> {
    let a = DenseMatrix::from_diag(&[-0.5 * alpha1, -0.5 * alpha1])?;
    let p1 = DenseMatrix::from_rows(&[vec![0.75, 0.1], vec![0.0, -0.75]])?.scale(alpha2);
    let p2 = DenseMatrix::from_rows(&[vec![0.0, 0.9], vec![0.9, 0.0]])?.scale(alpha2);
    LinearSdeProblem::new(a, vec![p1, p2], vec![1.0, 1.0], 1.0)
}

/// m×m drift with −1 diagonal and `1/m` below it; `P1 = 0.05·(I + 1/m strictly
/// lower)`, `P2 = 0.05·(I + 1/m strictly upper)`.
pub fn build_vectorial_mxm(m: usize) -> Result<LinearSdeProblem> {
    if m < 2 {
        return Err(Error::invalid(format!("vectorial problem needs m >= 2, got {m}")));
    }
    let off = 1.0 / m as f64;
    let a = DenseMatrix::from_fn(m, m, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => -1.0,
        std::cmp::Ordering::Greater => off,
        std::cmp::Ordering::Less => 0.0,
    })?;
    let p1 = DenseMatrix::from_fn(m, m, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => 0.05,
        std::cmp::Ordering::Greater => 0.05 * off,
        std::cmp::Ordering::Less => 0.0,
    })?;
    let p2 = p1.transpose();
    LinearSdeProblem::new(a, vec![p1, p2], vec![1.0; m], 1.0)
}

/// Test-particle state: speed, pitch cosine, gyro-phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombState {
    pub v: f64,
    pub mu: f64,
    pub phi: f64,
}

impl CoulombState {
    pub fn new(v: f64, mu: f64, phi: f64) -> Self {
        Self { v, mu, phi }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.v, self.mu, self.phi]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self { v: x[0], mu: x[1], phi: x[2] }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.mu.is_finite() && self.phi.is_finite()
    }
}

/// Drag and diffusion coefficients with their speed derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombCoefficients {
    pub d_v: f64,
    pub d_d_v: f64,
    pub f_d: f64,
    pub d_f_d: f64,
    pub d_a: f64,
    pub d_d_a: f64,
}

/// `D_v = D_a = 1/(2(v+1))`, `F_d = -1/(2(v+1))` and derivatives.
pub fn coulomb_coefficients(v: f64) -> Result<CoulombCoefficients> {
    if !(v > -1.0) || !v.is_finite() {
        return Err(Error::Domain(format!("coefficients need v > -1, got v = {v}")));
    }
    let inv = 1.0 / (v + 1.0);
    let half_inv = 0.5 * inv;
    let half_inv2 = 0.5 * inv * inv;
    Ok(CoulombCoefficients {
        d_v: half_inv,
        d_d_v: -half_inv2,
        f_d: -half_inv,
        d_f_d: half_inv2,
        d_a: half_inv,
        d_d_a: -half_inv2,
    })
}

/// Default clamp margin for `|mu|`.
pub const DEFAULT_EPSILON_MU: f64 = 1e-8;

/// The Coulomb test-particle Langevin system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombProblem {
    epsilon_mu: f64,
}

impl Default for CoulombProblem {
    fn default() -> Self {
        Self { epsilon_mu: DEFAULT_EPSILON_MU }
    }
}

impl CoulombProblem {
    pub fn new(epsilon_mu: f64) -> Result<Self> {
        if !(epsilon_mu > 0.0 && epsilon_mu <= 1e-4) {
            return Err(Error::invalid(format!("epsilon_mu must lie in (0, 1e-4], got {epsilon_mu}")));
        }
        Ok(Self { epsilon_mu })
    }

    pub fn epsilon_mu(&self) -> f64 {
        self.epsilon_mu
    }

    /// Default initial condition `v0 = phi0 = 1`, `mu0 = 1 - epsilon_mu`.
    pub fn default_initial(&self) -> CoulombState {
        CoulombState::new(1.0, 1.0 - self.epsilon_mu, 1.0)
    }

    /// Pulls `mu` into `[-(1-eps), 1-eps]` and `v` up to 0. Returns the
    /// repaired state and whether anything moved.
    pub fn clamp(&self, s: CoulombState) -> Result<(CoulombState, bool)> {
        if !s.is_finite() {
            return Err(Error::Singularity { state: s.to_array(), reason: "non-finite state".into() });
        }
        let bound = 1.0 - self.epsilon_mu;
        let mut out = s;
        out.mu = s.mu.clamp(-bound, bound);
        out.v = s.v.max(0.0);
        Ok((out, out != s))
    }

    fn checked_coefficients(&self, s: &CoulombState) -> Result<CoulombCoefficients> {
        coulomb_coefficients(s.v).map_err(|_| Error::Singularity {
            state: s.to_array(),
            reason: "speed left the coefficient domain v > -1".into(),
        })
    }

    pub(crate) fn one_minus_mu2(&self, s: &CoulombState) -> Result<f64> {
        let bound = 1.0 - self.epsilon_mu;
        if !(s.mu.abs() <= bound) {
            return Err(Error::Singularity {
                state: s.to_array(),
                reason: format!("|mu| exceeds 1 - {}", self.epsilon_mu),
            });
        }
        Ok(1.0 - s.mu * s.mu)
    }

    pub fn coefficients(&self, s: &CoulombState) -> Result<CoulombCoefficients> {
        self.checked_coefficients(s)
    }

    /// `a(v) = (F_d, -2 D_a mu, 0)`
    pub fn drift(&self, s: &CoulombState) -> Result<[f64; 3]> {
        let c = self.checked_coefficients(s)?;
        Ok([c.f_d, -2.0 * c.d_a * s.mu, 0.0])
    }

    /// `diag(sqrt(2 D_v), sqrt(2 D_a (1-mu^2)), sqrt(2 D_a / (1-mu^2)))`,
    /// evaluated after clamping `mu`.
    pub fn diffusion(&self, s: &CoulombState) -> Result<DenseMatrix> {
        let (s, _) = self.clamp(*s)?;
        let c = self.checked_coefficients(&s)?;
        let q = self.one_minus_mu2(&s)?;
        DenseMatrix::from_diag(&[
            (2.0 * c.d_v).sqrt(),
            (2.0 * c.d_a * q).sqrt(),
            (2.0 * c.d_a / q).sqrt(),
        ])
    }

    /// Jacobian of the drift with respect to `(v, mu, phi)`.
    pub fn jacobian(&self, s: &CoulombState) -> Result<DenseMatrix> {
        let c = self.checked_coefficients(s)?;
        DenseMatrix::from_rows(&[
            vec![c.d_f_d, 0.0, 0.0],
            vec![-2.0 * s.mu * c.d_d_a, -2.0 * c.d_a, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
    }

    /// Relaxation matrix `diag(F_d(v)/v, -2 D_a(v), 0)`.
    pub fn relax_matrix(&self, s: &CoulombState) -> Result<DenseMatrix> {
        if s.v == 0.0 {
            return Err(Error::Singularity {
                state: s.to_array(),
                reason: "relaxation matrix divides by v = 0".into(),
            });
        }
        let c = self.checked_coefficients(s)?;
        DenseMatrix::from_diag(&[c.f_d / s.v, -2.0 * c.d_a, 0.0])
    }
}

pub fn coulomb_drift(p: &CoulombProblem, s: &CoulombState) -> Result<[f64; 3]> {
    p.drift(s)
}

pub fn coulomb_diffusion(p: &CoulombProblem, s: &CoulombState) -> Result<DenseMatrix> {
    p.diffusion(s)
}

pub fn coulomb_jacobian(p: &CoulombProblem, s: &CoulombState) -> Result<DenseMatrix> {
    p.jacobian(s)
}

pub fn coulomb_relax_matrix(p: &CoulombProblem, s: &CoulombState) -> Result<DenseMatrix> {
    p.relax_matrix(s)
}

/// Zero-noise speed `v(t)` from `(v+1)^2 = (v0+1)^2 - t`.
pub fn drift_only_speed(v0: f64, t: f64) -> f64 {
    ((v0 + 1.0).powi(2) - t).sqrt() - 1.0
}

/// Zero-noise ratio `mu(t)/mu0 = exp(2 sqrt((v0+1)^2 - t) - 2 (v0+1))`.
pub fn drift_only_mu_ratio(v0: f64, t: f64) -> f64 {
    let w0 = v0 + 1.0;
    (2.0 * (w0 * w0 - t).sqrt() - 2.0 * w0).exp()
}

/// True when `a` and `b` commute to within `tol` in the max norm.
pub fn operators_commute(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> Result<bool> {
    Ok(commutator(a, b)?.max_abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_noise_preset() {
        let p = build_scalar_noise_problem();
        assert_eq!(p.a[(0, 0)], -1.0);
        assert_eq!(p.a[(5, 2)], 0.1);
        assert_eq!(p.a[(2, 5)], 0.0);
        assert_eq!(p.noise_ops.len(), 1);
        assert_eq!(p.noise_ops[0][(0, 0)], 0.01);
        assert_eq!(p.noise_ops[0][(9, 0)], 0.005);
        assert_eq!(p.noise_ops[0][(0, 9)], 0.0);
        assert_eq!(p.y0, vec![1.0; 10]);
        assert_eq!(p.t_end, 1.0);
        // A and P are both polynomials in the strictly lower shift, so they
        // commute exactly; the computed commutator is rounding residue only.
        let c = commutator(&p.a, &p.noise_ops[0]).unwrap().frobenius_norm();
        assert!(c > 0.0);
        assert!(c < 1e-15);
        assert_eq!(p.clone().with_t_end(2.0).unwrap().t_end, 2.0);
        assert!(p.with_t_end(0.0).is_err());
    }

    #[test]
    fn vectorial_2x2_preset() {
        let p = build_vectorial_2x2(1.0, 1.0).unwrap();
        assert_eq!(p.noise_ops[0][(0, 0)], 0.75);
        assert_eq!(p.noise_ops[1][(1, 0)], 0.9);
        assert!(!operators_commute(&p.noise_ops[0], &p.noise_ops[1], 0.0).unwrap());
        assert_eq!(p.a[(0, 0)], -0.5);

        let quiet = build_vectorial_2x2(1.0, 0.0).unwrap();
        assert!(quiet.noise_ops.iter().all(|q| q.max_abs() == 0.0));
        assert_eq!(Perturbation::parse("weak001").unwrap().alpha2(), 0.01);
        assert_eq!(Perturbation::Weak01.alpha2(), 0.1);
        assert!(Perturbation::parse("medium").is_none());
    }

    #[test]
    fn vectorial_mxm_preset() {
        let p = build_vectorial_mxm(10).unwrap();
        assert!((p.a[(3, 1)] - 0.1).abs() < 1e-16);
        assert_eq!(p.a[(1, 3)], 0.0);
        for r in 0..10 {
            for c in 0..10 {
                if c > r {
                    assert_eq!(p.noise_ops[0][(r, c)], 0.0);
                }
                if c < r {
                    assert_eq!(p.noise_ops[1][(r, c)], 0.0);
                }
            }
        }
        assert_eq!(p.noise_ops[0][(4, 4)], 0.05);
        assert!((p.noise_ops[1][(0, 7)] - 0.005).abs() < 1e-17);

        let two = build_vectorial_mxm(2).unwrap();
        assert!(commutator(&two.noise_ops[0], &two.noise_ops[1]).unwrap().max_abs() > 0.0);
        assert!(build_vectorial_mxm(1).is_err());
    }

    #[test]
    fn problem_validation() {
        let a = DenseMatrix::identity(2);
        assert!(LinearSdeProblem::new(a.clone(), vec![], vec![1.0, 1.0], 1.0).is_err());
        assert!(LinearSdeProblem::new(a.clone(), vec![DenseMatrix::identity(3)], vec![1.0, 1.0], 1.0).is_err());
        assert!(LinearSdeProblem::new(a.clone(), vec![a.clone()], vec![1.0], 1.0).is_err());
        assert!(LinearSdeProblem::new(a.clone(), vec![a], vec![1.0, 1.0], -1.0).is_err());
    }

    #[test]
    fn coefficient_values() {
        let c = coulomb_coefficients(1.0).unwrap();
        assert_eq!(c.d_v, 0.25);
        assert_eq!(c.f_d, -0.25);
        assert_eq!(c.d_f_d, 0.125);
        assert_eq!(c.d_d_v, -0.125);
        assert_eq!(coulomb_coefficients(0.0).unwrap().d_v, 0.5);
        for v in [0.0, 0.3, 2.0, 17.0] {
            let c = coulomb_coefficients(v).unwrap();
            assert_eq!(c.f_d, -c.d_v);
        }
        assert!(matches!(coulomb_coefficients(-1.0), Err(Error::Domain(_))));
        assert!(coulomb_coefficients(-3.0).is_err());
    }

    #[test]
    fn drift_diffusion_jacobian_values() {
        let p = CoulombProblem::default();
        let s = CoulombState::new(1.0, 0.0, 0.3);
        assert_eq!(p.drift(&s).unwrap(), [-0.25, 0.0, 0.0]);
        assert_eq!(p.drift(&CoulombState::new(2.0, 0.7, 0.0)).unwrap()[2], 0.0);

        let b = p.diffusion(&s).unwrap();
        let r = 0.5f64.sqrt();
        for i in 0..3 {
            assert!((b[(i, i)] - r).abs() < 1e-16);
        }
        let edge = CoulombState::new(1.0, 1.0 - 1e-6, 0.0);
        let b = p.diffusion(&edge).unwrap();
        let c = coulomb_coefficients(1.0).unwrap();
        assert!((b[(1, 1)] * b[(2, 2)] - 2.0 * c.d_a).abs() < 1e-12);
        assert!(b[(1, 1)] < 1e-2 && b[(2, 2)] > 1e2);
        for (i, j) in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)] {
            assert_eq!(b[(i, j)], 0.0);
        }

        let j = p.jacobian(&CoulombState::new(1.0, 0.5, 0.0)).unwrap();
        let expected = DenseMatrix::from_rows(&[
            vec![0.125, 0.0, 0.0],
            vec![0.125, -0.5, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(j, expected);
        assert_eq!(p.jacobian(&s).unwrap()[(1, 0)], 0.0);
        assert_eq!(j.row(2), &[0.0, 0.0, 0.0]);
        let j2 = j.mul(&j).unwrap();
        assert_eq!(j2[(0, 1)], 0.0);
        assert_eq!(j2[(0, 2)], 0.0);
    }

    #[test]
    fn relax_matrix_values() {
        let p = CoulombProblem::default();
        let m = p.relax_matrix(&CoulombState::new(1.0, 0.2, 0.0)).unwrap();
        assert_eq!(m, DenseMatrix::from_diag(&[-0.25, -0.5, 0.0]).unwrap());
        let m2 = p.relax_matrix(&CoulombState::new(2.0, 0.2, 0.0)).unwrap();
        assert!((m2[(0, 0)] + 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(m2[(0, 1)], 0.0);
        assert!(matches!(
            p.relax_matrix(&CoulombState::new(0.0, 0.2, 0.0)),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn clamping_policy() {
        let p = CoulombProblem::new(1e-6).unwrap();
        let (s, moved) = p.clamp(CoulombState::new(1.0, 1.0, 0.0)).unwrap();
        assert!(moved);
        assert_eq!(s.mu, 1.0 - 1e-6);
        let (s, moved) = p.clamp(CoulombState::new(-0.1, -1.5, 0.0)).unwrap();
        assert!(moved);
        assert_eq!((s.v, s.mu), (0.0, -(1.0 - 1e-6)));
        let (_, moved) = p.clamp(CoulombState::new(0.5, 0.5, 0.0)).unwrap();
        assert!(!moved);
        assert!(p.clamp(CoulombState::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(CoulombProblem::new(0.0).is_err());
        assert!(CoulombProblem::new(1e-3).is_err());
        assert_eq!(CoulombProblem::default().default_initial().mu, 1.0 - 1e-8);
    }

    #[test]
    fn analytic_drift_flow() {
        assert!((drift_only_speed(1.0, 1.0) - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((drift_only_speed(1.0, 1.0) - 0.732_050_8).abs() < 1e-7);
        assert!((drift_only_mu_ratio(1.0, 1.0) - 0.5852).abs() < 1e-4);
        assert_eq!(drift_only_speed(1.0, 0.0), 1.0);
    }
}
