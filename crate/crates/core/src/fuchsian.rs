//! Explicit Fuchsian representations: one-holed tori from trace coordinates,
//! genus-2 surfaces glued along the separating curve with a twist, and
//! pairs of pants.

use std::ops::Mul;

use crate::error::{Error, Result};
use crate::group::{enumerate_dehn_canonical, Presentation, Word, DEFAULT_CANDIDATE_CAP};

/// A 2×2 real matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Adjugate; the inverse for determinant one.
    pub fn adj(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn inverse(&self) -> Mat2 {
        let det = self.det();
        let j = self.adj();
        Mat2::new(j.a / det, j.b / det, j.c / det, j.d / det)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// `p · self · p⁻¹`.
    pub fn conj(&self, p: &Mat2) -> Mat2 {
        *p * *self * p.inverse()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.a - o.a).abs().max((self.b - o.b).abs()).max((self.c - o.c).abs()).max((self.d - o.d).abs())
    }

    pub fn commutator(x: &Mat2, y: &Mat2) -> Mat2 {
        *x * *y * x.inverse() * y.inverse()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// Hyperbolic translation length `2 arccosh(|tr|/2)`, zero if not hyperbolic.
pub fn sl2_translation_length(m: &Mat2) -> f64 {
    let t = m.trace().abs() / 2.0;
    if t > 1.0 {
        2.0 * t.acosh()
    } else {
        0.0
    }
}

/// Width of the standard embedded collar around a geodesic of length `l`.
pub fn collar_width(l: f64) -> f64 {
    (1.0 / (l / 2.0).sinh()).asinh()
}

/// Fricke trace coordinates `(tr A, tr B, tr AB)` of a one-holed torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusParams {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TorusParams {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFinite(format!("torus traces ({x}, {y}, {z})")));
        }
        for t in [x, y] {
            if t.abs() <= 2.0 {
                return Err(Error::NonHyperbolicGenerator(t));
            }
        }
        let t = TorusParams { x, y, z };
        let k = t.commutator_trace();
        if k >= -2.0 {
            return Err(Error::CuspedOrDegenerate(k));
        }
        Ok(t)
    }

    /// `x² + y² + z² - xyz - 2`, the trace of `[A, B]`.
    pub fn commutator_trace(&self) -> f64 {
        let TorusParams { x, y, z } = *self;
        x * x + y * y + z * z - x * y * z - 2.0
    }

    pub fn boundary_length(&self) -> f64 {
        2.0 * (-self.commutator_trace() / 2.0).acosh()
    }

    /// Solves for `z` given `x, y` and a target boundary length, taking the
    /// larger root of the trace identity.
    pub fn with_boundary(x: f64, y: f64, boundary: f64) -> Result<Self> {
        let kappa = -2.0 * (boundary / 2.0).cosh();
        // z² - xy z + (x² + y² - 2 - κ) = 0
        let b = x * y;
        let c = x * x + y * y - 2.0 - kappa;
        let disc = b * b - 4.0 * c;
        if disc < 0.0 {
            return Err(Error::InvalidArgument(format!("no real tr AB for traces ({x}, {y}) and boundary {boundary}")));
        }
        TorusParams::new(x, y, 0.5 * (b + disc.sqrt()))
    }
}

/// `A = diag(α, 1/α)` with `α + 1/α = x`, `|α| > 1`, and
/// `B = [[p, 1], [ps - 1, s]]` with `tr B = y`, `tr AB = z`.
pub fn fricke_pair(x: f64, y: f64, z: f64) -> Result<(Mat2, Mat2)> {
    if x.abs() <= 2.0 {
        return Err(Error::NonHyperbolicGenerator(x));
    }
    let alpha = 0.5 * (x + x.signum() * (x * x - 4.0).sqrt());
    let ai = 1.0 / alpha;
    let p = (z - y * ai) / (alpha - ai);
    let s = y - p;
    let a = Mat2::diag(alpha, ai);
    let b = Mat2::new(p, 1.0, p * s - 1.0, s);
    if (p * s - 1.0).abs() < 1e-12 {
        return Err(Error::Reducible(x, y, z));
    }
    Ok((a, b))
}

/// A one-holed torus group: images of `a1, b1` and the boundary length.
#[derive(Clone, Copy, Debug)]
pub struct TorusRep {
    pub a: Mat2,
    pub b: Mat2,
    pub boundary_length: f64,
}

pub fn one_holed_torus_rep(t: &TorusParams) -> Result<TorusRep> {
    let (a, b) = fricke_pair(t.x, t.y, t.z)?;
    let k = Mat2::commutator(&a, &b).trace();
    let kt = t.commutator_trace();
    if (k - kt).abs() > 1e-9 * kt.abs().max(1.0) {
        return Err(Error::Invariant(format!("commutator trace {k} differs from {kt}")));
    }
    Ok(TorusRep { a, b, boundary_length: t.boundary_length() })
}

/// Eigenframe of a hyperbolic element: columns are eigenvectors for the
/// eigenvalue of larger modulus first, determinant one, first column with a
/// positive leading entry. Returns `(F, μ)` with `M = F diag(μ, 1/μ) F⁻¹`.
pub fn eigenframe(m: &Mat2) -> Result<(Mat2, f64)> {
    let t = m.trace();
    if t.abs() <= 2.0 {
        return Err(Error::NotLoxodromic(format!("trace {t}")));
    }
    let mu = 0.5 * (t + t.signum() * (t * t - 4.0).sqrt());
    let nu = 1.0 / mu;
    let vec_for = |lam: f64| -> (f64, f64) {
        // rows of M - λ I; pick the better-conditioned kernel vector
        let v1 = (m.b, lam - m.a);
        let v2 = (lam - m.d, m.c);
        if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) {
            v1
        } else {
            v2
        }
    };
    let (mut x1, mut y1) = vec_for(mu);
    let (mut x2, mut y2) = vec_for(nu);
    let lead = if x1.abs() > 1e-300 { x1 } else { y1 };
    if lead < 0.0 {
        x1 = -x1;
        y1 = -y1;
    }
    let mut det = x1 * y2 - x2 * y1;
    if det < 0.0 {
        x2 = -x2;
        y2 = -y2;
        det = -det;
    }
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::NonFinite("degenerate eigenframe".into()));
    }
    let s = det.sqrt();
    Ok((Mat2::new(x1 / s, x2 / s, y1 / s, y2 / s), mu))
}

/// Translation by `s` along the axis of the hyperbolic element `m`, in the
/// direction in which `m` translates.
pub fn axis_translation(m: &Mat2, s: f64) -> Result<Mat2> {
    let (f, _) = eigenframe(m)?;
    Ok(Mat2::diag((s / 2.0).exp(), (-s / 2.0).exp()).conj(&f))
}

/// A representation of a finitely generated group into `SL(2,R)`.
#[derive(Clone, Debug)]
pub struct Sl2Rep {
    gens: Vec<Mat2>,
}

impl Sl2Rep {
    pub fn new(gens: Vec<Mat2>) -> Self {
        Sl2Rep { gens }
    }

    pub fn generators(&self) -> &[Mat2] {
        &self.gens
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn eval(&self, w: &Word) -> Mat2 {
        let mut m = Mat2::IDENTITY;
        for &l in w.letters() {
            let g = self.gens[l.index()];
            m = m * if l.is_inverse() { g.adj() } else { g };
        }
        m
    }

    pub fn length(&self, w: &Word) -> f64 {
        sl2_translation_length(&self.eval(w))
    }

    pub fn conjugate(&self, p: &Mat2) -> Sl2Rep {
        Sl2Rep { gens: self.gens.iter().map(|g| g.conj(p)).collect() }
    }

    /// `Σ ‖g‖²` over generators, i.e. `2 Σ cosh d(i, g·i)`.
    pub fn basepoint_energy(&self) -> f64 {
        self.gens.iter().map(|g| g.frobenius_sq()).sum()
    }

    /// Conjugates so that `i` minimizes the total generator displacement.
    /// Returns the new representation and the conjugator `Q` (`g ↦ Q g Q⁻¹`).
    pub fn balanced(&self) -> (Sl2Rep, Mat2) {
        // P maps i to x + i e^s; conjugating by P⁻¹ moves that point to i
        let mover = |v: &[f64]| {
            let h = (v[1] / 2.0).exp();
            Mat2::new(h, v[0] / h, 0.0, 1.0 / h)
        };
        let energy = |v: &[f64]| self.conjugate(&mover(v).inverse()).basepoint_energy();
        let (v, _) = crate::optimize::nelder_mead(energy, &[0.0, 0.0], 0.5, 2000, 1e-14);
        let q = mover(&v).inverse();
        (self.conjugate(&q), q)
    }
}

/// A marked Fuchsian genus-2 surface glued from two one-holed tori.
#[derive(Clone, Debug)]
pub struct SurfaceRep {
    pub rep: Sl2Rep,
    pub first: TorusParams,
    pub second: TorusParams,
    pub twist: f64,
    pub boundary_length: f64,
    /// Set when the short-word probe finds an elliptic or parabolic class.
    pub discreteness_warning: Option<String>,
}

/// Glues two one-holed tori along their boundary. The second torus is
/// conjugated so that its commutator equals the inverse of the first, then
/// translated by `twist` along the axis of `ρ([a1,b1])`.
pub fn glue_genus2(p1: &TorusParams, p2: &TorusParams, twist: f64) -> Result<SurfaceRep> {
    let t1 = one_holed_torus_rep(p1)?;
    let t2 = one_holed_torus_rep(p2)?;
    let (l1, l2) = (t1.boundary_length, t2.boundary_length);
    if (l1 - l2).abs() > 1e-9 * l1.max(1.0) {
        return Err(Error::BoundaryMismatch(l1, l2));
    }
    let k1 = Mat2::commutator(&t1.a, &t1.b);
    let k2 = Mat2::commutator(&t2.a, &t2.b);
    let (f1, _) = eigenframe(&k1.inverse())?;
    let (f2, _) = eigenframe(&k2)?;
    let g = f1 * f2.inverse();
    let shift = axis_translation(&k1, twist)?;
    let h = shift * g;
    let a2 = t2.a.conj(&h);
    let b2 = t2.b.conj(&h);
    let (rep, _) = Sl2Rep::new(vec![t1.a, t1.b, a2, b2]).balanced();
    let rel = rep.eval(&Presentation::genus2().relators()[0]);
    if rel.max_abs_diff(&Mat2::IDENTITY) > 1e-8 * k1.frobenius_sq().sqrt().max(1.0) {
        return Err(Error::Invariant(format!("relator image {rel:?} is not the identity")));
    }
    let discreteness_warning = discreteness_probe(&rep, &Presentation::genus2(), 4);
    if let Some(w) = &discreteness_warning {
        log::warn!("glued surface may not be discrete: {w}");
    }
    Ok(SurfaceRep { rep, first: *p1, second: *p2, twist, boundary_length: l1, discreteness_warning })
}

/// Checks that every short class is hyperbolic.
pub fn discreteness_probe(rep: &Sl2Rep, p: &Presentation, max_len: usize) -> Option<String> {
    let classes = enumerate_dehn_canonical(p, max_len, DEFAULT_CANDIDATE_CAP).ok()?;
    for w in classes {
        let t = rep.eval(&w).trace().abs();
        if t <= 2.0 + 1e-9 {
            return Some(format!("class {w} has |trace| {t:.6}"));
        }
    }
    None
}

/// Shortest hyperbolic length among classes of word length ≤ `max_len`.
pub fn systole_probe(rep: &Sl2Rep, p: &Presentation, max_len: usize) -> Result<(f64, Word)> {
    let classes = enumerate_dehn_canonical(p, max_len, DEFAULT_CANDIDATE_CAP)?;
    classes
        .into_iter()
        .map(|w| (rep.length(&w), w))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::InvalidArgument("no classes".into()))
}

/// Boundary lengths of a pair of pants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PantsParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PantsParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("pants lengths ({a}, {b}, {c}) must be positive")));
        }
        Ok(PantsParams { a, b, c })
    }

    pub fn max_length(&self) -> f64 {
        self.a.max(self.b).max(self.c)
    }
}

/// Free group on `A, B` with `tr A = -2cosh(a/2)`, `tr B = -2cosh(b/2)`,
/// `tr AB = -2cosh(c/2)`; `A`, `B`, `AB` represent the three boundaries.
pub fn pants_rep(p: &PantsParams) -> Result<Sl2Rep> {
    let tr = |l: f64| -2.0 * (l / 2.0).cosh();
    let (a, b) = fricke_pair(tr(p.a), tr(p.b), tr(p.c))?;
    Ok(Sl2Rep::new(vec![a, b]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_torus() {
        let t = TorusParams::new(4.0, 4.0, 4.0).unwrap();
        assert!((t.commutator_trace() + 18.0).abs() < 1e-12);
        assert!((t.boundary_length() - 2.0 * 9f64.acosh()).abs() < 1e-12);
        let r = one_holed_torus_rep(&t).unwrap();
        assert!((r.a.trace() - 4.0).abs() < 1e-12);
        assert!((r.b.trace() - 4.0).abs() < 1e-12);
        assert!(((r.a * r.b).trace() - 4.0).abs() < 1e-12);
        assert!((sl2_translation_length(&r.a) - 2.0 * 2f64.acosh()).abs() < 1e-12);
    }

    #[test]
    fn invalid_torus_params() {
        assert!(matches!(TorusParams::new(1.0, 4.0, 4.0), Err(Error::NonHyperbolicGenerator(_))));
        assert!(matches!(TorusParams::new(3.0, 3.0, 3.0), Err(Error::CuspedOrDegenerate(_))));
    }

    #[test]
    fn boundary_solver_round_trip() {
        let t = TorusParams::with_boundary(3.5, 5.0, 4.2).unwrap();
        assert!((t.boundary_length() - 4.2).abs() < 1e-10);
    }

    #[test]
    fn glued_relator_and_lengths() {
        let t = TorusParams::new(4.0, 4.0, 4.0).unwrap();
        let s = glue_genus2(&t, &t, 0.3).unwrap();
        assert!(s.discreteness_warning.is_none());
        let c = Word::parse("abAB").unwrap();
        assert!((s.rep.length(&c) - 2.0 * 9f64.acosh()).abs() < 1e-9);
        for g in ["a", "b", "c", "d"] {
            let l = s.rep.length(&Word::parse(g).unwrap());
            assert!((l - 2.0 * 2f64.acosh()).abs() < 1e-9, "{g}: {l}");
        }
    }

    #[test]
    fn mismatched_boundaries_rejected() {
        let t = TorusParams::new(4.0, 4.0, 4.0).unwrap();
        let u = TorusParams::new(4.0, 4.0, 5.0).unwrap();
        assert!(matches!(glue_genus2(&t, &u, 0.0), Err(Error::BoundaryMismatch(..))));
    }

    #[test]
    fn twist_changes_crossing_lengths_only() {
        let t = TorusParams::new(4.0, 4.0, 4.0).unwrap();
        let s0 = glue_genus2(&t, &t, 0.0).unwrap();
        let s1 = glue_genus2(&t, &t, 0.7).unwrap();
        let inside = Word::parse("aab").unwrap();
        let crossing = Word::parse("ac").unwrap();
        assert!((s0.rep.length(&inside) - s1.rep.length(&inside)).abs() < 1e-9);
        assert!((s0.rep.length(&crossing) - s1.rep.length(&crossing)).abs() > 1e-3);
    }

    #[test]
    fn pants_traces() {
        let p = PantsParams::new(1.0, 2.0, 3.0).unwrap();
        let r = pants_rep(&p).unwrap();
        let w = |s: &str| r.length(&Word::parse(s).unwrap());
        assert!((w("a") - 1.0).abs() < 1e-12);
        assert!((w("b") - 2.0).abs() < 1e-12);
        assert!((w("ab") - 3.0).abs() < 1e-12);
    }

    /// The collar half-width solves `sinh(w) sinh(l/2) = 1`; check by bisection.
    #[test]
    fn collar_matches_bisection() {
        for l in [0.3f64, 1.0, 5.7746] {
            let f = |w: f64| w.sinh() * (l / 2.0).sinh() - 1.0;
            let (mut lo, mut hi) = (0.0, 20.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((collar_width(l) - lo).abs() < 1e-12);
        }
    }
}
