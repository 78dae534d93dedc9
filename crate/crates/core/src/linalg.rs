//! Small dense real matrices.
//!
//! Every operator in the benchmark problems is at most 10×10, so a plain
//! row-major `Vec<f64>` is all the storage we need. The matrix exponential
//! uses scaling and squaring around diagonal Padé approximants of degree
//! 3, 5, 7, 9 or 13, selected from the 1-norm of the argument.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Real `rows × cols` matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries. Rejects empty shapes, length
    /// mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("matrix shape {rows}x{cols} is empty")));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite entry at flat index {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| if r == c { diag[r] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::invalid(format!(
                "{what}: shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// `self += s * other`
    pub fn add_scaled_assign(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other, "add_scaled_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { rows: n, cols: m, data: out })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "{}x{} matrix applied to a vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `out += s * self * x` without shape checks.
    pub(crate) fn mul_vec_acc(&self, s: f64, x: &[f64], out: &mut [f64]) {
        debug_assert!(x.len() == self.cols && out.len() == self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let dot: f64 = self.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
            *o += s * dot;
        }
    }

    /// `self * x` without shape checks.
    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_acc(1.0, x, &mut out);
        out
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        commutator(self, other)
    }

    pub fn exp(&self) -> Result<Self> {
        mat_exp(self)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.data[r * self.cols + c].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn mat_mul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.mul(b)
}

/// `[a, b] = a·b − b·a`
pub fn commutator(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() || !b.is_square() || a.rows != b.rows {
        return Err(Error::invalid(format!(
            "commutator needs equal square shapes, got {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    a.mul(b)?.sub(&b.mul(a)?)
}

// Higham (2005) degree thresholds on the 1-norm.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

fn pade_coefficients(degree: usize) -> &'static [f64] {
    match degree {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("no Padé table for degree {degree}"),
    }
}

/// Matrix exponential by scaling and squaring.
pub fn mat_exp(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::invalid(format!("exp of non-square {}x{} matrix", m.rows, m.cols)));
    }
    if !m.is_finite() {
        return Err(Error::invalid("exp of matrix with non-finite entries"));
    }
    let n = m.rows;
    if n == 1 {
        return DenseMatrix::new(1, 1, vec![m.data[0].exp()]);
    }
    if m.data.iter().all(|&x| x == 0.0) {
        return Ok(DenseMatrix::identity(n));
    }
    let diagonal = (0..n).all(|r| (0..n).all(|c| r == c || m.data[r * n + c] == 0.0));
    if diagonal {
        let d: Vec<f64> = (0..n).map(|i| m.data[i * n + i].exp()).collect();
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix exponential overflowed"));
        }
        return DenseMatrix::from_diag(&d);
    }

    let norm = m.norm_one();
    for &(degree, theta) in &THETA[..4] {
        if norm <= theta {
            let (u, v) = pade_odd_even(m, pade_coefficients(degree))?;
            return pade_solve(&u, &v);
        }
    }

    let theta13 = THETA[4].1;
    let squarings = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
    let scaled = m.scale(2f64.powi(-squarings));
    let (u, v) = pade13_odd_even(&scaled)?;
    let mut result = pade_solve(&u, &v)?;
    for _ in 0..squarings {
        result = result.mul(&result)?;
    }
    if !result.is_finite() {
        return Err(Error::invalid("matrix exponential overflowed"));
    }
    Ok(result)
}

fn pade_odd_even(a: &DenseMatrix, b: &[f64]) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = a.rows;
    let a2 = a.mul(a)?;
    let mut odd = DenseMatrix::identity(n).scale(b[1]);
    let mut even = DenseMatrix::identity(n).scale(b[0]);
    let mut power = DenseMatrix::identity(n);
    for k in 1..b.len() / 2 {
        power = power.mul(&a2)?;
        odd.add_scaled_assign(b[2 * k + 1], &power)?;
        even.add_scaled_assign(b[2 * k], &power)?;
    }
    Ok((a.mul(&odd)?, even))
}

fn pade13_odd_even(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let b = pade_coefficients(13);
    let n = a.rows;
    let id = DenseMatrix::identity(n);
    let a2 = a.mul(a)?;
    let a4 = a2.mul(&a2)?;
    let a6 = a4.mul(&a2)?;

    let mut inner_u = a6.scale(b[13]);
    inner_u.add_scaled_assign(b[11], &a4)?;
    inner_u.add_scaled_assign(b[9], &a2)?;
    let mut odd = a6.mul(&inner_u)?;
    odd.add_scaled_assign(b[7], &a6)?;
    odd.add_scaled_assign(b[5], &a4)?;
    odd.add_scaled_assign(b[3], &a2)?;
    odd.add_scaled_assign(b[1], &id)?;
    let u = a.mul(&odd)?;

    let mut inner_v = a6.scale(b[12]);
    inner_v.add_scaled_assign(b[10], &a4)?;
    inner_v.add_scaled_assign(b[8], &a2)?;
    let mut v = a6.mul(&inner_v)?;
    v.add_scaled_assign(b[6], &a6)?;
    v.add_scaled_assign(b[4], &a4)?;
    v.add_scaled_assign(b[2], &a2)?;
    v.add_scaled_assign(b[0], &id)?;
    Ok((u, v))
}

/// Solves `(V − U) X = (V + U)`.
fn pade_solve(u: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    let lhs = v.sub(u)?;
    let rhs = v.add(u)?;
    solve(&lhs, &rhs)
}

/// Gaussian elimination with partial pivoting for `A X = B`.
pub(crate) fn solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows;
    let m = b.cols;
    let mut lu = a.data.clone();
    let mut x = b.data.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[i * n + col].abs().total_cmp(&lu[j * n + col].abs()))
            .unwrap_or(col);
        if lu[pivot * n + col] == 0.0 {
            return Err(Error::invalid("singular matrix in linear solve"));
        }
        if pivot != col {
            for c in 0..n {
                lu.swap(col * n + c, pivot * n + c);
            }
            for c in 0..m {
                x.swap(col * m + c, pivot * m + c);
            }
        }
        let d = lu[col * n + col];
        for r in col + 1..n {
            let f = lu[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                lu[r * n + c] -= f * lu[col * n + c];
            }
            for c in 0..m {
                x[r * m + c] -= f * x[col * m + c];
            }
        }
    }
    for col in (0..n).rev() {
        let d = lu[col * n + col];
        for c in 0..m {
            let mut acc = x[col * m + c];
            for k in col + 1..n {
                acc -= lu[col * n + k] * x[k * m + c];
            }
            x[col * m + c] = acc / d;
        }
    }
    Ok(DenseMatrix { rows: n, cols: m, data: x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    /// Plain Taylor series summed until the terms vanish; only valid for small norms.
    fn taylor_exp(a: &DenseMatrix) -> DenseMatrix {
        let n = a.rows();
        let mut sum = DenseMatrix::identity(n);
        let mut term = DenseMatrix::identity(n);
        for k in 1..60 {
            term = term.mul(a).unwrap().scale(1.0 / k as f64);
            sum = sum.add(&term).unwrap();
        }
        sum
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn product_examples() {
        let x = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(mat_mul(&DenseMatrix::identity(2), &x).unwrap(), x);
        assert_eq!(mat_mul(&x, &DenseMatrix::zeros(2, 2)).unwrap(), DenseMatrix::zeros(2, 2));

        let p1 = m(&[&[0.75, 0.1], &[0.0, -0.75]]);
        let p2 = m(&[&[0.0, 0.9], &[0.9, 0.0]]);
        let prod = mat_mul(&p1, &p2).unwrap();
        let expected = m(&[&[0.09, 0.675], &[-0.675, 0.0]]);
        assert!(max_diff(&prod, &expected) < 1e-15);

        assert!(mat_mul(&DenseMatrix::zeros(2, 3), &DenseMatrix::zeros(2, 3)).is_err());
        assert!(DenseMatrix::identity(2).mul_vec(&[1.0]).is_err());
    }

    #[test]
    fn commutator_examples() {
        let x = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(commutator(&x, &x).unwrap(), DenseMatrix::zeros(2, 2));
        let d1 = DenseMatrix::from_diag(&[1.0, -2.0, 3.0]).unwrap();
        let d2 = DenseMatrix::from_diag(&[0.5, 7.0, -1.0]).unwrap();
        assert_eq!(commutator(&d1, &d2).unwrap(), DenseMatrix::zeros(3, 3));

        let p1 = m(&[&[0.75, 0.1], &[0.0, -0.75]]);
        let p2 = m(&[&[0.0, 0.9], &[0.9, 0.0]]);
        let c = commutator(&p1, &p2).unwrap();
        assert!(max_diff(&c, &m(&[&[0.09, 1.35], &[-1.35, -0.09]])) < 1e-15);

        assert!(commutator(&DenseMatrix::identity(2), &DenseMatrix::identity(3)).is_err());
        assert!(commutator(&DenseMatrix::zeros(2, 3), &DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn exp_examples() {
        assert_eq!(mat_exp(&DenseMatrix::zeros(3, 3)).unwrap(), DenseMatrix::identity(3));

        let e = mat_exp(&DenseMatrix::from_diag(&[-1.0, -1.0]).unwrap()).unwrap();
        let target = (-1.0f64).exp();
        assert!((e[(0, 0)] - target).abs() < 1e-15 && (e[(1, 1)] - target).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);

        let nil = mat_exp(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert!(max_diff(&nil, &m(&[&[1.0, 1.0], &[0.0, 1.0]])) < 1e-15);

        assert!(mat_exp(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn exp_of_rotation_generator_matches_closed_form() {
        for theta in [0.01, 0.3, 1.7, 4.0, 9.5] {
            let g = m(&[&[0.0, theta], &[-theta, 0.0]]);
            let e = mat_exp(&g).unwrap();
            let expected = m(&[&[theta.cos(), theta.sin()], &[-theta.sin(), theta.cos()]]);
            assert!(max_diff(&e, &expected) < 1e-13, "theta={theta}");
        }
    }

    #[test]
    fn exp_matches_taylor_series_on_every_pade_branch() {
        // norms chosen to land in each degree bracket, including scaling
        for scale in [0.005, 0.1, 0.5, 1.5, 4.0, 8.0] {
            let a = DenseMatrix::from_fn(4, 4, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0)
                .unwrap()
                .scale(scale / 4.0);
            let e = mat_exp(&a).unwrap();
            let t = taylor_exp(&a);
            let rel = max_diff(&e, &t) / t.max_abs();
            assert!(rel < 1e-12, "scale={scale} rel={rel}");
        }
    }

    #[test]
    fn exp_accuracy_at_norm_ten() {
        // diagonalisable with known spectrum: S diag(l) S^-1 with S unit lower-triangular
        let s = m(&[&[1.0, 0.0, 0.0], &[0.5, 1.0, 0.0], &[-0.25, 0.3, 1.0]]);
        let s_inv = solve(&s, &DenseMatrix::identity(3)).unwrap();
        let lambdas = [-6.0, -3.5, 2.0];
        let a = s.mul(&DenseMatrix::from_diag(&lambdas).unwrap()).unwrap().mul(&s_inv).unwrap();
        let exact = s
            .mul(&DenseMatrix::from_diag(&lambdas.map(f64::exp)).unwrap())
            .unwrap()
            .mul(&s_inv)
            .unwrap();
        let e = mat_exp(&a).unwrap();
        assert!(max_diff(&e, &exact) / exact.max_abs() < 1e-12);
    }

    #[test]
    fn exp_derivative_by_finite_differences() {
        let a = m(&[&[-1.0, 0.4, 0.0], &[0.2, -0.5, 0.3], &[0.0, 0.1, -2.0]]);
        let s = 0.7;
        let exact = a.mul(&mat_exp(&a.scale(s)).unwrap()).unwrap();
        let mut prev_err = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let fd = mat_exp(&a.scale(s + h))
                .unwrap()
                .sub(&mat_exp(&a.scale(s - h)).unwrap())
                .unwrap()
                .scale(0.5 / h);
            let err = max_diff(&fd, &exact);
            // central differences: halving h quarters the error
            assert!(err < prev_err / 3.5 || prev_err.is_infinite(), "h={h} err={err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-5);
    }

    fn arb_matrix(n: usize, bound: f64) -> impl Strategy<Value = DenseMatrix> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let raw = DenseMatrix::new(n, n, v).unwrap();
            let norm = raw.norm_one().max(1e-12);
            raw.scale(bound / norm)
        })
    }

    proptest! {
        #[test]
        fn exp_times_exp_of_negative_is_identity(a in arb_matrix(4, 5.0)) {
            let p = mat_exp(&a).unwrap().mul(&mat_exp(&a.scale(-1.0)).unwrap()).unwrap();
            prop_assert!(max_diff(&p, &DenseMatrix::identity(4)) < 1e-10);
        }

        #[test]
        fn exp_of_commuting_sum_factorises(a in arb_matrix(3, 2.0), c0 in -1.0f64..1.0, c2 in -0.3f64..0.3) {
            // N = c0 I + c2 A^2 commutes with A
            let n = DenseMatrix::identity(3).scale(c0).add(&a.mul(&a).unwrap().scale(c2)).unwrap();
            let lhs = mat_exp(&a.add(&n).unwrap()).unwrap();
            let rhs = mat_exp(&a).unwrap().mul(&mat_exp(&n).unwrap()).unwrap();
            prop_assert!(max_diff(&lhs, &rhs) / rhs.max_abs().max(1.0) < 1e-10);
        }

        #[test]
        fn commutator_is_antisymmetric(a in arb_matrix(3, 3.0), b in arb_matrix(3, 3.0)) {
            let ab = commutator(&a, &b).unwrap();
            let ba = commutator(&b, &a).unwrap();
            prop_assert_eq!(ab, ba.scale(-1.0));
        }
    }
}
