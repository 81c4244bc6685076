//! Small real matrices, the irreducible representation `SL(2,R) → SL(d,R)`,
//! Jordan and Cartan projections, root functionals and the associated
//! Finsler norm on the Cartan subspace.

use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::fuchsian::Mat2;
use crate::group::Word;

pub const MAX_DIM: usize = 8;

/// Tolerance for the trace-zero condition on Cartan vectors.
pub const TRACELESS_TOL: f64 = 1e-9;

/// A `d × d` matrix (d ≤ 8) stored as `exp(log_scale) · data`.
///
/// Long products are renormalized so that entries stay O(1); the dropped
/// factor is carried in `log_scale`.
#[derive(Clone, Copy, PartialEq)]
pub struct MatD {
    d: usize,
    data: [f64; MAX_DIM * MAX_DIM],
    log_scale: f64,
}

impl std::fmt::Debug for MatD {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatD(d={}, log_scale={}, [", self.d, self.log_scale)?;
        for i in 0..self.d {
            let row: Vec<String> = (0..self.d).map(|j| format!("{:.6}", self.get(i, j))).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "])")
    }
}

impl MatD {
    pub fn zeros(d: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "dimension {d} out of range");
        MatD { d, data: [0.0; MAX_DIM * MAX_DIM], log_scale: 0.0 }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let d = rows.len();
        Self::from_fn(d, |i, j| rows[i][j])
    }

    pub fn diag(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| if i == j { v[i] } else { 0.0 })
    }

    /// `exp(diag(z))`.
    pub fn exp_diag(z: &[f64]) -> Self {
        Self::from_fn(z.len(), |i, j| if i == j { z[i].exp() } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry of the stored (scaled) matrix.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * MAX_DIM + j] = v;
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Entry of the true matrix, `exp(log_scale) · get(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j) * self.log_scale.exp()
    }

    /// Folds the scale back into the entries.
    pub fn unscaled(&self) -> MatD {
        let s = self.log_scale.exp();
        let mut m = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                m.set(i, j, self.get(i, j) * s);
            }
        }
        m.log_scale = 0.0;
        m
    }

    pub fn max_abs(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.d {
            for j in 0..self.d {
                best = best.max(self.get(i, j).abs());
            }
        }
        best
    }

    /// Divides by the largest entry and records it in `log_scale`.
    pub fn renormalize(&mut self) {
        let m = self.max_abs();
        if m > 0.0 && m.is_finite() {
            let inv = 1.0 / m;
            for i in 0..self.d {
                for j in 0..self.d {
                    let v = self.get(i, j) * inv;
                    self.set(i, j, v);
                }
            }
            self.log_scale += m.ln();
        }
    }

    /// `exp(z) M exp(-z)` for diagonal `exp(z)`, computed entrywise so every
    /// entry keeps full relative precision.
    pub fn diag_conjugate(&self, z: &[f64]) -> MatD {
        let mut m = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                m.set(i, j, self.get(i, j) * (z[i] - z[j]).exp());
            }
        }
        m.renormalize();
        m
    }

    /// `ln ‖M‖_F` of the true matrix.
    pub fn log_frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.get(i, j) * self.get(i, j);
            }
        }
        0.5 * s.ln() + self.log_scale
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum::<f64>() * self.log_scale.exp()
    }

    pub fn transpose(&self) -> MatD {
        let mut m = MatD::from_fn(self.d, |i, j| self.get(j, i));
        m.log_scale = self.log_scale;
        m
    }

    pub fn is_finite(&self) -> bool {
        self.log_scale.is_finite() && (0..self.d).all(|i| (0..self.d).all(|j| self.get(i, j).is_finite()))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let s = self.log_scale.exp();
        DMatrix::from_fn(self.d, self.d, |i, j| self.get(i, j) * s)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        MatD::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn inverse(&self) -> Result<MatD> {
        let dm = DMatrix::from_fn(self.d, self.d, |i, j| self.get(i, j));
        let inv = dm.try_inverse().ok_or_else(|| Error::NonFinite("singular matrix".into()))?;
        let mut m = MatD::from_dmatrix(&inv);
        m.log_scale = -self.log_scale;
        Ok(m)
    }

    pub fn determinant(&self) -> f64 {
        let dm = DMatrix::from_fn(self.d, self.d, |i, j| self.get(i, j));
        dm.determinant() * (self.d as f64 * self.log_scale).exp()
    }

    /// `P · self · P⁻¹`.
    pub fn conjugate_by(&self, p: &MatD, p_inv: &MatD) -> MatD {
        p * &(self * p_inv)
    }

    /// Largest absolute entry difference between true matrices.
    pub fn max_abs_diff(&self, other: &MatD) -> f64 {
        let (a, b) = (self.unscaled(), other.unscaled());
        let mut best = 0.0f64;
        for i in 0..self.d {
            for j in 0..self.d {
                best = best.max((a.get(i, j) - b.get(i, j)).abs());
            }
        }
        best
    }
}

impl Mul for &MatD {
    type Output = MatD;
    fn mul(self, rhs: &MatD) -> MatD {
        assert_eq!(self.d, rhs.d, "dimension mismatch");
        let d = self.d;
        let mut out = MatD::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * MAX_DIM + j] += a * rhs.get(k, j);
                }
            }
        }
        out.log_scale = self.log_scale + rhs.log_scale;
        out
    }
}

impl Mul for MatD {
    type Output = MatD;
    fn mul(self, rhs: MatD) -> MatD {
        &self * &rhs
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// The irreducible representation `τ_d` on homogeneous polynomials of degree
/// `d - 1` in the orthonormal-for-SO(2) basis `√C(d-1,k) X^(d-1-k) Y^k`.
pub fn irreducible_rep(g: &Mat2, d: usize) -> Result<MatD> {
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let n = d - 1;
    // (X, Y) ↦ (aX + cY, bX + dY)
    let x_img = [g.a, g.c];
    let y_img = [g.b, g.d];
    let mut m = MatD::zeros(d);
    for k in 0..d {
        // coefficients of (aX+cY)^(n-k) (bX+dY)^k in X^(n-j) Y^j
        let mut poly = vec![1.0f64];
        for _ in 0..(n - k) {
            poly = poly_mul_linear(&poly, x_img);
        }
        for _ in 0..k {
            poly = poly_mul_linear(&poly, y_img);
        }
        let wk = binomial(n, k).sqrt();
        for (j, &coef) in poly.iter().enumerate() {
            m.set(j, k, coef * wk / binomial(n, j).sqrt());
        }
    }
    Ok(m)
}

/// Multiplies a polynomial in `X^(deg-j) Y^j` form by `(l[0] X + l[1] Y)`.
fn poly_mul_linear(p: &[f64], l: [f64; 2]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (j, &c) in p.iter().enumerate() {
        out[j] += c * l[0];
        out[j + 1] += c * l[1];
    }
    out
}

/// A vector in the Cartan subspace `{v ∈ R^d : Σ v_i = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartanVec(Vec<f64>);

impl CartanVec {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let s: f64 = v.iter().sum();
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if s.abs() > TRACELESS_TOL * scale {
            return Err(Error::NotTraceless(s));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Cartan vector".into()));
        }
        Ok(CartanVec(v))
    }

    /// Subtracts the mean.
    pub fn traceless_projection(v: &[f64]) -> Self {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        CartanVec(v.iter().map(|x| x - mean).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_weyl_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn scale(&self, s: f64) -> CartanVec {
        CartanVec(self.0.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, o: &CartanVec) -> CartanVec {
        CartanVec(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sorted_desc(&self) -> CartanVec {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        CartanVec(v)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `u = ((d-1)/2, (d-3)/2, …, -(d-1)/2)`, the Jordan projection of `τ_d` of
/// a unit-length hyperbolic translation.
pub fn special_direction(d: usize) -> CartanVec {
    CartanVec((0..d).map(|i| (d as f64 - 1.0) / 2.0 - i as f64).collect())
}

/// A root functional `v ↦ c · Σ w_i v_i` with antisymmetric, strictly
/// decreasing weights, normalized so that Fuchsian lengths are hyperbolic.
#[derive(Clone, Debug, PartialEq)]
pub struct Alpha0 {
    weights: Vec<f64>,
    c: f64,
}

impl Alpha0 {
    /// Weights must be strictly decreasing and satisfy `w_i = -w_{d-1-i}`.
    /// The normalization is computed from the weights.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let d = weights.len();
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if !weights.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::InvalidRoot("weights must be strictly decreasing".into()));
        }
        if (0..d).any(|i| (weights[i] + weights[d - 1 - i]).abs() > 1e-12 * weights[0].abs().max(1.0)) {
            return Err(Error::InvalidRoot("weights must be antisymmetric".into()));
        }
        let u = special_direction(d);
        let raw: f64 = weights.iter().zip(u.as_slice()).map(|(w, x)| w * x).sum();
        Ok(Alpha0 { weights, c: 1.0 / raw })
    }

    /// Weights `(d-1, d-3, …, 1-d)`.
    pub fn standard(d: usize) -> Result<Self> {
        Self::new((0..d).map(|i| d as f64 - 1.0 - 2.0 * i as f64).collect())
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normalization(&self) -> f64 {
        self.c
    }

    /// `c · Σ w_i v_i` without sorting.
    pub fn apply(&self, v: &[f64]) -> f64 {
        self.c * self.weights.iter().zip(v).map(|(w, x)| w * x).sum::<f64>()
    }

    /// Whether `v` lies in the kernel of the functional.
    pub fn annihilates(&self, v: &[f64], tol: f64) -> bool {
        self.apply(v).abs() <= tol
    }
}

/// Computes the normalization of the standard functional by measuring the
/// Jordan projection of `τ_d(diag(e^{1/2}, e^{-1/2}))` numerically.
pub fn calibrate_alpha0(d: usize) -> Result<Alpha0> {
    let base = Alpha0::standard(d)?;
    let h = Mat2::new(0.5f64.exp(), 0.0, 0.0, (-0.5f64).exp());
    let lam = jordan_projection(&irreducible_rep(&h, d)?)?;
    let raw: f64 = base.weights.iter().zip(lam.as_slice()).map(|(w, x)| w * x).sum();
    Ok(Alpha0 { weights: base.weights, c: 1.0 / raw })
}

/// `F(v) = c · Σ w_i · sort_desc(v)_i`, the Weyl-invariant Finsler norm.
pub fn finsler_norm(v: &CartanVec, a: &Alpha0) -> f64 {
    a.apply(v.sorted_desc().as_slice())
}

/// Finsler length of a loxodromic element from its Jordan projection.
pub fn finsler_length(g: &MatD, a: &Alpha0) -> Result<f64> {
    Ok(a.apply(jordan_projection(g)?.as_slice()))
}

/// Roots of the monic cubic `x³ + a x² + b x + c`.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let f = |x: f64| ((x + a) * x + b) * x + c;
    let df = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    let bound = 1.0 + a.abs().max(b.abs()).max(c.abs());
    let (mut lo, mut hi) = (-bound, bound);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let fx = f(x);
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = if d != 0.0 { x - fx / d } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            x = next;
            break;
        }
        x = next;
    }
    let r = x;
    let p = a + r;
    let q = if r != 0.0 { -c / r } else { b + r * p };
    let (r1, r2) = quadratic_roots(p, q);
    [Complex64::new(r, 0.0), r1, r2]
}

/// Roots of `x² + p x + q`.
pub fn quadratic_roots(p: f64, q: f64) -> (Complex64, Complex64) {
    let disc = p * p - 4.0 * q;
    if disc >= 0.0 {
        let s = -0.5 * (p + p.signum() * disc.sqrt());
        if s == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(-p, 0.0));
        }
        (Complex64::new(s, 0.0), Complex64::new(q / s, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(-0.5 * p, im), Complex64::new(-0.5 * p, -im))
    }
}

/// Moduli of the eigenvalues of the stored (scaled) matrix, descending.
pub fn eigen_moduli(m: &MatD) -> Result<Vec<f64>> {
    let d = m.dim();
    let mut mods: Vec<f64> = match d {
        1 => vec![m.get(0, 0).abs()],
        2 => {
            let t = m.get(0, 0) + m.get(1, 1);
            let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
            let (r1, r2) = quadratic_roots(-t, det);
            vec![r1.norm(), r2.norm()]
        }
        3 => {
            let g = |i, j| m.get(i, j);
            let t = g(0, 0) + g(1, 1) + g(2, 2);
            let s = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) + g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0) + g(1, 1) * g(2, 2)
                - g(1, 2) * g(2, 1);
            let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
            cubic_roots(-t, s, -det).iter().map(|z| z.norm()).collect()
        }
        _ => {
            let dm = DMatrix::from_fn(d, d, |i, j| m.get(i, j));
            dmatrix_eigen_moduli(dm)?
        }
    };
    if mods.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    mods.sort_by(|a, b| b.total_cmp(a));
    Ok(mods)
}

/// Eigenvalue moduli of a general square matrix via a real Schur form.
pub fn dmatrix_eigen_moduli(m: DMatrix<f64>) -> Result<Vec<f64>> {
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let mut mods: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mods.sort_by(|a, b| b.total_cmp(a));
    Ok(mods)
}

fn logs_of(m: &MatD, mods: &[f64]) -> Result<Vec<f64>> {
    if mods.iter().any(|&x| x <= 0.0) {
        return Err(Error::EigenFailure("zero eigenvalue".into()));
    }
    Ok(mods.iter().map(|x| x.ln() + m.log_scale()).collect())
}

/// Jordan projection `λ(g)`: logarithms of the eigenvalue moduli in
/// decreasing order, projected to trace zero.
pub fn jordan_projection(g: &MatD) -> Result<CartanVec> {
    let logs = logs_of(g, &eigen_moduli(g)?)?;
    Ok(CartanVec::traceless_projection(&logs))
}

/// Jordan projection from `g` and an independently computed `g⁻¹`. The top
/// half comes from `g`, the bottom half from `g⁻¹`, so that small eigenvalues
/// do not suffer from cancellation.
pub fn jordan_projection_pair(g: &MatD, g_inv: &MatD) -> Result<CartanVec> {
    let d = g.dim();
    let top = logs_of(g, &eigen_moduli(g)?[..d / 2])?;
    let bot = logs_of(g_inv, &eigen_moduli(g_inv)?[..d / 2])?;
    combine_halves(d, &top, &bot)
}

fn combine_halves(d: usize, top: &[f64], bot: &[f64]) -> Result<CartanVec> {
    let h = d / 2;
    let mut v = vec![0.0; d];
    for i in 0..h {
        v[i] = top[i];
        v[d - 1 - i] = -bot[i];
    }
    if d % 2 == 1 {
        let rest: f64 = v.iter().sum();
        v[h] = -rest;
        Ok(CartanVec(v))
    } else {
        Ok(CartanVec::traceless_projection(&v))
    }
}

/// Cartan projection `μ(g)`: log singular values, descending.
pub fn cartan_projection(g: &MatD) -> Result<CartanVec> {
    let logs = log_singular_values(g, g.dim())?;
    Ok(CartanVec::traceless_projection(&logs))
}

pub fn cartan_projection_pair(g: &MatD, g_inv: &MatD) -> Result<CartanVec> {
    let h = g.dim() / 2;
    let top = log_singular_values(g, h)?;
    let bot = log_singular_values(g_inv, h)?;
    combine_halves(g.dim(), &top, &bot)
}

/// Logs of the `keep` largest singular values.
fn log_singular_values(g: &MatD, keep: usize) -> Result<Vec<f64>> {
    let d = g.dim();
    let dm = DMatrix::from_fn(d, d, |i, j| g.get(i, j));
    let svd = nalgebra::linalg::SVD::try_new(dm, false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    logs_of(g, &s[..keep])
}

/// `λ_i - λ_{i+1}` for consecutive entries of the Jordan projection.
pub fn loxodromy_gaps(g: &MatD) -> Result<Vec<f64>> {
    let l = jordan_projection(g)?;
    Ok(l.as_slice().windows(2).map(|w| w[0] - w[1]).collect())
}

/// Increasing `k`-subsets of `0..d` in lexicographic order.
pub fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, k, &mut Vec::new(), &mut out);
    out
}

/// `⋀^k g` in the basis `e_I`, `I` ranging over increasing k-subsets. The
/// stored scale of `g` is folded in.
pub fn exterior_power(g: &MatD, k: usize) -> Result<DMatrix<f64>> {
    let d = g.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("exterior power {k} of dimension {d}")));
    }
    let subsets = k_subsets(d, k);
    let n = subsets.len();
    let full = g.to_dmatrix();
    let mut out = DMatrix::zeros(n, n);
    for (r, rows) in subsets.iter().enumerate() {
        for (c, cols) in subsets.iter().enumerate() {
            let minor = DMatrix::from_fn(k, k, |i, j| full[(rows[i], cols[j])]);
            out[(r, c)] = minor.determinant();
        }
    }
    Ok(out)
}

/// Double-double matrix of dimension at most 3, scaled by `exp(log_scale)`.
/// Renormalization divides by powers of two, which is exact.
#[derive(Clone, Copy)]
struct MatDD {
    d: usize,
    data: [TwoFloat; 9],
    log_scale: f64,
}

impl MatDD {
    fn identity(d: usize) -> Self {
        let mut data = [TwoFloat::from(0.0); 9];
        for i in 0..d {
            data[i * 3 + i] = TwoFloat::from(1.0);
        }
        MatDD { d, data, log_scale: 0.0 }
    }

    fn at(&self, i: usize, j: usize) -> TwoFloat {
        self.data[i * 3 + j]
    }

    fn mul(&self, rhs: &MatD) -> MatDD {
        let d = self.d;
        let mut data = [TwoFloat::from(0.0); 9];
        for i in 0..d {
            for j in 0..d {
                let mut acc = TwoFloat::from(0.0);
                for k in 0..d {
                    acc += self.at(i, k) * rhs.get(k, j);
                }
                data[i * 3 + j] = acc;
            }
        }
        MatDD { d, data, log_scale: self.log_scale + rhs.log_scale() }
    }

    fn renormalize(&mut self) {
        let m = self.data[..].iter().map(|x| x.hi().abs()).fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            let e = m.log2().floor() as i32;
            let f = 2f64.powi(-e);
            for x in &mut self.data {
                *x = *x * f;
            }
            self.log_scale += e as f64 * std::f64::consts::LN_2;
        }
    }

    /// `ln` of the largest eigenvalue modulus. The characteristic
    /// coefficients are formed in double-double and rounded once; the top
    /// root is well conditioned in them.
    fn log_top_modulus(&self) -> Result<f64> {
        let g = |i, j| self.at(i, j);
        let top = match self.d {
            1 => g(0, 0).hi().abs(),
            2 => {
                let t = g(0, 0) + g(1, 1);
                let det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
                let (r1, r2) = quadratic_roots(-t.hi(), det.hi());
                r1.norm().max(r2.norm())
            }
            _ => {
                let t = g(0, 0) + g(1, 1) + g(2, 2);
                let s = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)) + (g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0))
                    + (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1));
                let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                    - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                    + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
                cubic_roots(-t.hi(), s.hi(), -det.hi()).iter().map(|z| z.norm()).fold(0.0, f64::max)
            }
        };
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::EigenFailure(format!("top eigenvalue modulus {top}")));
        }
        Ok(top.ln() + self.log_scale)
    }
}

/// A linear representation given by generator images and their inverses.
#[derive(Clone, Debug)]
pub struct LinearRep {
    gens: Vec<MatD>,
    inv_gens: Vec<MatD>,
}

/// Factors multiplied between renormalizations.
const RENORM_EVERY: usize = 8;

impl LinearRep {
    pub fn new(gens: Vec<MatD>) -> Result<Self> {
        let inv_gens = gens.iter().map(|g| g.inverse()).collect::<Result<Vec<_>>>()?;
        Ok(LinearRep { gens, inv_gens })
    }

    pub fn with_inverses(gens: Vec<MatD>, inv_gens: Vec<MatD>) -> Self {
        assert_eq!(gens.len(), inv_gens.len());
        LinearRep { gens, inv_gens }
    }

    pub fn dim(&self) -> usize {
        self.gens[0].dim()
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn generators(&self) -> &[MatD] {
        &self.gens
    }

    pub fn inverse_generators(&self) -> &[MatD] {
        &self.inv_gens
    }

    pub fn image(&self, l: crate::group::Letter) -> &MatD {
        if l.is_inverse() {
            &self.inv_gens[l.index()]
        } else {
            &self.gens[l.index()]
        }
    }

    pub fn eval(&self, w: &Word) -> MatD {
        let mut m = MatD::identity(self.dim());
        for (i, &l) in w.letters().iter().enumerate() {
            m = &m * self.image(l);
            if (i + 1) % RENORM_EVERY == 0 {
                m.renormalize();
            }
        }
        m.renormalize();
        m
    }

    /// `(ρ(w), ρ(w)⁻¹)`, the inverse taken as the product of inverse images.
    pub fn eval_pair(&self, w: &Word) -> (MatD, MatD) {
        (self.eval(w), self.eval(&w.inverse()))
    }

    /// Jordan projection of `ρ(w)`. For `d ≤ 3` the products are formed in
    /// double-double arithmetic: grafted images have entries far larger than
    /// their eigenvalues, and double products lose the spectrum to
    /// cancellation once the cylinder is a few units high.
    pub fn jordan(&self, w: &Word) -> Result<CartanVec> {
        let d = self.dim();
        if d <= 3 {
            let top = self.eval_dd(w).log_top_modulus()?;
            let bot = self.eval_dd(&w.inverse()).log_top_modulus()?;
            return combine_halves(d, &[top][..d / 2], &[bot][..d / 2]);
        }
        let (g, gi) = self.eval_pair(w);
        jordan_projection_pair(&g, &gi)
    }

    fn eval_dd(&self, w: &Word) -> MatDD {
        let mut m = MatDD::identity(self.dim());
        for (i, &l) in w.letters().iter().enumerate() {
            m = m.mul(self.image(l));
            if (i + 1) % RENORM_EVERY == 0 {
                m.renormalize();
            }
        }
        m
    }

    pub fn cartan(&self, w: &Word) -> Result<CartanVec> {
        let (g, gi) = self.eval_pair(w);
        cartan_projection_pair(&g, &gi)
    }

    pub fn finsler_length(&self, w: &Word, a: &Alpha0) -> Result<f64> {
        Ok(a.apply(self.jordan(w)?.as_slice()))
    }

    /// Conjugates every generator by `p`.
    pub fn conjugate(&self, p: &MatD, p_inv: &MatD) -> LinearRep {
        LinearRep {
            gens: self.gens.iter().map(|g| g.conjugate_by(p, p_inv)).collect(),
            inv_gens: self.inv_gens.iter().map(|g| g.conjugate_by(p, p_inv)).collect(),
        }
    }

    /// `Σ ‖g‖² + ‖g⁻¹‖²` over generators.
    pub fn basepoint_energy(&self) -> f64 {
        self.gens
            .iter()
            .chain(&self.inv_gens)
            .map(|g| {
                let u = g.unscaled();
                (0..u.dim()).flat_map(|i| (0..u.dim()).map(move |j| (i, j))).map(|(i, j)| u.get(i, j).powi(2)).sum::<f64>()
            })
            .sum()
    }

    /// Conjugates by an upper-triangular matrix chosen to minimize
    /// [`basepoint_energy`](Self::basepoint_energy), which keeps long
    /// products well conditioned.
    pub fn balanced(&self) -> LinearRep {
        let d = self.dim();
        let n_diag = d - 1;
        let n_off = d * (d - 1) / 2;
        let build = |v: &[f64]| -> MatD {
            let mut t = MatD::zeros(d);
            let mut last = 0.0;
            for i in 0..n_diag {
                t.set(i, i, v[i].exp());
                last -= v[i];
            }
            t.set(d - 1, d - 1, f64::exp(last));
            let mut k = n_diag;
            for i in 0..d {
                for j in (i + 1)..d {
                    t.set(i, j, v[k]);
                    k += 1;
                }
            }
            t
        };
        let conj = |v: &[f64]| -> Option<LinearRep> {
            let t = build(v);
            let ti = t.inverse().ok()?;
            Some(self.conjugate(&ti, &t))
        };
        let energy = |v: &[f64]| conj(v).map_or(f64::INFINITY, |r| r.basepoint_energy());
        let x0 = vec![0.0; n_diag + n_off];
        let (v, _) = crate::optimize::nelder_mead(energy, &x0, 0.3, 20_000, 1e-13);
        conj(&v).unwrap_or_else(|| self.clone())
    }

    /// Replaces generator `i` (and its inverse).
    pub fn set_generator(&mut self, i: usize, g: MatD, g_inv: MatD) {
        self.gens[i] = g;
        self.inv_gens[i] = g_inv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn irreducible_rep_of_unipotent() {
        let m = irreducible_rep(&Mat2::new(1.0, 1.0, 0.0, 1.0), 3).unwrap();
        let r2 = 2f64.sqrt();
        let expect = [[1.0, r2, 1.0], [0.0, 1.0, r2], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn irreducible_rep_of_diagonal() {
        let s = 1.7;
        let m = irreducible_rep(&Mat2::new(s, 0.0, 0.0, 1.0 / s), 3).unwrap();
        let expect = [s * s, 1.0, 1.0 / (s * s)];
        for i in 0..3 {
            assert!((m.get(i, i) - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn rotations_map_to_orthogonal_matrices() {
        let t: f64 = 0.73;
        let r = Mat2::new(t.cos(), -t.sin(), t.sin(), t.cos());
        for d in 2..=6 {
            let m = irreducible_rep(&r, d).unwrap();
            let mmt = &m * &m.transpose();
            assert!(mmt.max_abs_diff(&MatD::identity(d)) < 1e-13, "d = {d}");
        }
    }

    #[test]
    fn calibration_constants() {
        let expected = [(2, 1.0), (3, 0.25), (4, 0.1)];
        for (d, c) in expected {
            let lit = calibrate_alpha0(d).unwrap();
            let ana = Alpha0::standard(d).unwrap();
            assert!((lit.normalization() - c).abs() < 1e-12);
            assert!((ana.normalization() - c).abs() < 1e-15);
        }
    }

    #[test]
    fn finsler_examples() {
        let a = Alpha0::standard(3).unwrap();
        let f = |v: Vec<f64>| finsler_norm(&CartanVec::new(v).unwrap(), &a);
        assert!((f(vec![1.0, 0.0, -1.0]) - 1.0).abs() < 1e-15);
        assert!((f(vec![2.0, 0.0, -2.0]) - 2.0).abs() < 1e-15);
        assert!((f(vec![1.0, -2.0, 1.0]) - 1.5).abs() < 1e-15);
        assert!((f(vec![-1.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jordan_of_diagonal() {
        let g = MatD::exp_diag(&[2.0, 0.5, -2.5]);
        let l = jordan_projection(&g).unwrap();
        for (x, y) in l.as_slice().iter().zip([2.0, 0.5, -2.5]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_roots_rejected() {
        assert!(Alpha0::new(vec![1.0, 1.0, -2.0]).is_err());
        assert!(Alpha0::new(vec![2.0, 0.5, -2.0]).is_err());
        assert!(CartanVec::new(vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn cubic_roots_with_complex_pair() {
        // (x - 3)(x² + 1)
        let r = cubic_roots(-3.0, 1.0, -3.0);
        let mut mods: Vec<f64> = r.iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| b.total_cmp(a));
        assert!((mods[0] - 3.0).abs() < 1e-14 && (mods[1] - 1.0).abs() < 1e-14 && (mods[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exterior_square_top_eigenvalue() {
        let g = MatD::exp_diag(&[2.0, 0.5, -2.5]);
        let w = exterior_power(&g, 2).unwrap();
        let top = dmatrix_eigen_moduli(w).unwrap()[0].ln();
        assert!((top - 2.5).abs() < 1e-12);
    }

    fn random_sl2(a: f64, b: f64, c: f64) -> Mat2 {
        // exp of a trace-free matrix via a product of elementary factors
        let u = Mat2::new(1.0, a, 0.0, 1.0);
        let l = Mat2::new(1.0, 0.0, b, 1.0);
        let h = Mat2::new(c.exp(), 0.0, 0.0, (-c).exp());
        u * l * h
    }

    proptest! {
        #[test]
        fn tau_is_a_homomorphism(a in -1.5f64..1.5, b in -1.5f64..1.5, c in -1.0f64..1.0,
                                 e in -1.5f64..1.5, f in -1.5f64..1.5, g in -1.0f64..1.0, d in 2usize..7) {
            let x = random_sl2(a, b, c);
            let y = random_sl2(e, f, g);
            let lhs = irreducible_rep(&(x * y), d).unwrap();
            let rhs = &irreducible_rep(&x, d).unwrap() * &irreducible_rep(&y, d).unwrap();
            let scale = lhs.max_abs().max(1.0);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11 * scale);
        }

        #[test]
        fn finsler_norm_is_positive_and_weyl_invariant(v in prop::collection::vec(-5.0f64..5.0, 3..6), perm_seed in 0usize..100) {
            let d = v.len();
            let cv = CartanVec::traceless_projection(&v);
            let a = Alpha0::standard(d).unwrap();
            let n = finsler_norm(&cv, &a);
            if cv.norm() > 1e-9 {
                prop_assert!(n > 0.0);
            }
            let mut p = cv.clone().into_vec();
            p.rotate_left(perm_seed % d);
            prop_assert!((finsler_norm(&CartanVec::new(p).unwrap(), &a) - n).abs() < 1e-12);
            let neg = cv.scale(-1.0);
            prop_assert!((finsler_norm(&neg, &a) - n).abs() < 1e-12);
        }

        #[test]
        fn jordan_projection_is_sorted_and_traceless(seed in prop::collection::vec(-1.0f64..1.0, 9)) {
            let mut m = MatD::from_fn(3, |i, j| seed[3 * i + j] + if i == j { 2.0 } else { 0.0 });
            let det = m.determinant();
            prop_assume!(det.abs() > 1e-3);
            if det < 0.0 {
                for j in 0..3 { let v = m.get(0, j); m.set(0, j, -v); }
            }
            let s = m.determinant().abs().cbrt();
            let m = MatD::from_fn(3, |i, j| m.get(i, j) / s);
            let l = jordan_projection(&m).unwrap();
            prop_assert!(l.is_weyl_sorted());
            prop_assert!(l.as_slice().iter().sum::<f64>().abs() < 1e-9);
        }
    }
}
