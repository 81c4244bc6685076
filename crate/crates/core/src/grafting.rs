//! Grafting along the separating curve: the Γ2 factor is conjugated by an
//! element `α = P exp(z) P⁻¹` of the Cartan subgroup centralizing `ρ(c)`.
//! Also hosts the analogous bending moves along non-separating curves used
//! to build generic auxiliary representations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fuchsian::{Mat2, SurfaceRep};
use crate::group::{Factor, Splitting, Word};
use crate::lie::{finsler_norm, irreducible_rep, special_direction, Alpha0, CartanVec, LinearRep, MatD};

/// Minimum Jordan gap accepted by [`adapt_frame`].
pub const MIN_FRAME_GAP: f64 = 1e-6;

/// Grafting parameter for the single separating curve.
#[derive(Clone, Debug, PartialEq)]
pub struct GraftDatum {
    z: CartanVec,
    in_kernel: bool,
}

impl GraftDatum {
    pub fn new(z: CartanVec) -> Self {
        GraftDatum { z, in_kernel: false }
    }

    /// A datum flagged as lying in `ker α₀`; rejected otherwise.
    pub fn in_kernel(z: CartanVec, a: &Alpha0) -> Result<Self> {
        let v = a.apply(z.as_slice());
        if v.abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("α₀(z) = {v:e} is not zero")));
        }
        Ok(GraftDatum { z, in_kernel: true })
    }

    pub fn zero(d: usize) -> Self {
        GraftDatum { z: CartanVec::traceless_projection(&vec![0.0; d]), in_kernel: true }
    }

    pub fn z(&self) -> &CartanVec {
        &self.z
    }

    pub fn is_kernel(&self) -> bool {
        self.in_kernel
    }
}

/// Real eigenframe of a loxodromic element.
#[derive(Clone, Debug)]
pub struct Frame {
    pub p: MatD,
    pub p_inv: MatD,
    /// Eigenvalues (with sign) of the stored matrix, by decreasing modulus.
    pub eigenvalues: Vec<f64>,
}

impl Frame {
    /// `(P exp(z) P⁻¹, P exp(-z) P⁻¹)`.
    pub fn centralizer_element(&self, z: &CartanVec) -> (MatD, MatD) {
        let e = MatD::exp_diag(z.as_slice());
        let ei = MatD::exp_diag(&z.as_slice().iter().map(|x| -x).collect::<Vec<_>>());
        (&self.p * &(&e * &self.p_inv), &self.p * &(&ei * &self.p_inv))
    }
}

/// Eigenframe of `g`: real eigenvector columns ordered by decreasing
/// eigenvalue modulus, each with positive first nonzero entry, scaled so
/// that `|det P| = 1`.
pub fn adapt_frame(g: &MatD) -> Result<Frame> {
    let d = g.dim();
    let m = DMatrix::from_fn(d, d, |i, j| g.get(i, j));
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let mut eig: Vec<(f64, f64)> = schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    let scale = eig.iter().fold(0.0f64, |a, z| a.max(z.0.hypot(z.1)));
    if eig.iter().any(|z| z.1.abs() > 1e-9 * scale) {
        return Err(Error::ComplexSpectrum(format!("{eig:?}")));
    }
    eig.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
    for w in eig.windows(2) {
        let (x, y) = (w[0].0.abs(), w[1].0.abs());
        if y <= 0.0 || (x / y).ln() < MIN_FRAME_GAP {
            return Err(Error::NotLoxodromic(format!("eigenvalue moduli {x:e} and {y:e}")));
        }
    }
    let mut p = MatD::zeros(d);
    for (col, &(lam, _)) in eig.iter().enumerate() {
        let shifted = &m - DMatrix::identity(d, d) * lam;
        let svd = nalgebra::linalg::SVD::try_new(shifted, false, true, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::EigenFailure("SVD did not converge".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::EigenFailure("missing singular vectors".into()))?;
        let k = (0..d)
            .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
            .expect("nonempty");
        let mut v: Vec<f64> = (0..d).map(|i| v_t[(k, i)]).collect();
        let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12 * vmax) {
            if first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        for (i, x) in v.into_iter().enumerate() {
            p.set(i, col, x);
        }
    }
    let det = p.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::NonFinite("singular eigenframe".into()));
    }
    let s = det.abs().powf(-1.0 / d as f64);
    let p = MatD::from_fn(d, |i, j| p.get(i, j) * s);
    let p_inv = p.inverse()?;
    let eigenvalues = eig.iter().map(|z| z.0).collect();
    Ok(Frame { p, p_inv, eigenvalues })
}

/// `τ_d` applied to every generator of a Fuchsian representation.
pub fn hitchin_base(s: &SurfaceRep, d: usize) -> Result<LinearRep> {
    linear_from_sl2(s.rep.generators(), d)
}

pub fn linear_from_sl2(gens: &[Mat2], d: usize) -> Result<LinearRep> {
    let g = gens.iter().map(|m| irreducible_rep(m, d)).collect::<Result<Vec<_>>>()?;
    let gi = gens.iter().map(|m| irreducible_rep(&m.adj(), d)).collect::<Result<Vec<_>>>()?;
    Ok(LinearRep::with_inverses(g, gi))
}

/// A Hitchin grafting representation with data `z` along the separating curve.
#[derive(Clone, Debug)]
pub struct GraftedRep {
    base: LinearRep,
    splitting: Splitting,
    frame: Frame,
    datum: GraftDatum,
    alpha: MatD,
    alpha_inv: MatD,
    grafted: LinearRep,
}

impl GraftedRep {
    pub fn new(base: &LinearRep, splitting: &Splitting, datum: GraftDatum) -> Result<Self> {
        let z = datum.z().as_slice();
        let sum: f64 = z.iter().sum();
        if sum.abs() > crate::lie::TRACELESS_TOL {
            return Err(Error::NotInCartan(sum));
        }
        if datum.z().dim() != base.dim() {
            return Err(Error::InvalidArgument("graft vector dimension differs from representation".into()));
        }
        let c = base.eval(splitting.peripheral());
        let frame = adapt_frame(&c)?;
        let (alpha, alpha_inv) = frame.centralizer_element(datum.z());
        // Work in the eigenframe of ρ(c), where α is diagonal. Conjugating by
        // α there is an entrywise rescaling; in the original basis α is badly
        // conditioned at large heights and the Γ2 spectra drift.
        let mut grafted = base.conjugate(&frame.p_inv, &frame.p);
        for g in splitting.factor_generators(Factor::Second) {
            let m = grafted.generators()[g].diag_conjugate(z);
            let mi = grafted.inverse_generators()[g].diag_conjugate(z);
            grafted.set_generator(g, m, mi);
        }
        Ok(GraftedRep { base: base.clone(), splitting: splitting.clone(), frame, datum, alpha, alpha_inv, grafted })
    }

    pub fn base(&self) -> &LinearRep {
        &self.base
    }

    /// The grafted representation, conjugated by `P⁻¹` into the eigenframe
    /// of `ρ(c)`.
    pub fn rep(&self) -> &LinearRep {
        &self.grafted
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn datum(&self) -> &GraftDatum {
        &self.datum
    }

    pub fn splitting(&self) -> &Splitting {
        &self.splitting
    }

    pub fn conjugator(&self) -> (&MatD, &MatD) {
        (&self.alpha, &self.alpha_inv)
    }
}

/// Evaluates `w` sending Γ1 generators to `ρ(x)` and Γ2 generators to
/// `αρ(x)α⁻¹`, up to the fixed conjugation by the frame `P⁻¹`.
pub fn graft_evaluate(g: &GraftedRep, w: &Word) -> MatD {
    g.grafted.eval(w)
}

/// `min_t F(t u + z)`. The function is convex and piecewise linear in `t`
/// and its minimizer satisfies `|t| ≤ 2 F(z)`; a golden-section search is
/// refined by evaluating at the breakpoints where the sort order changes.
pub fn cylinder_height(z: &CartanVec, a: &Alpha0) -> f64 {
    let d = z.dim();
    let u = special_direction(d);
    let (u, zv) = (u.as_slice(), z.as_slice());
    let g = |t: f64| {
        let v: Vec<f64> = u.iter().zip(zv).map(|(ui, zi)| t * ui + zi).collect();
        finsler_norm(&CartanVec::traceless_projection(&v), a)
    };
    let bound = 2.0 * g(0.0) + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..200 {
        if hi - lo < 1e-13 * bound {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g(x2);
        }
    }
    let mut best = f1.min(f2).min(g(0.5 * (lo + hi)));
    for i in 0..d {
        for j in 0..d {
            if u[i] != u[j] {
                let t = (zv[j] - zv[i]) / (u[i] - u[j]);
                if t.abs() <= bound {
                    best = best.min(g(t));
                }
            }
        }
    }
    best.max(0.0)
}

/// `ρ_{t z}` with `z` the direction rescaled to unit cylinder height.
pub fn grafting_ray(base: &LinearRep, splitting: &Splitting, z_dir: &CartanVec, t: f64, a: &Alpha0) -> Result<GraftedRep> {
    let z = unit_height_direction(z_dir, a)?;
    let datum = if a.annihilates(z.as_slice(), 1e-9) {
        GraftDatum::in_kernel(z.scale(t), a)?
    } else {
        GraftDatum::new(z.scale(t))
    };
    GraftedRep::new(base, splitting, datum)
}

/// Rescales `z` so that its cylinder height is one.
pub fn unit_height_direction(z: &CartanVec, a: &Alpha0) -> Result<CartanVec> {
    let h = cylinder_height(z, a);
    if h < 1e-12 {
        return Err(Error::InvalidArgument("direction is parallel to the shear direction (zero height)".into()));
    }
    Ok(z.scale(1.0 / h))
}

/// The unit-height ker-α₀ direction for `d = 3`, `(1, -2, 1)/1.5` up to sign.
pub fn kernel_direction(d: usize, a: &Alpha0) -> Result<CartanVec> {
    if d == 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    // project e_0 - 2 e_mid + e_last style bulge onto ker α₀ ∩ traceless
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v[d - 1] = 1.0;
    v[d / 2] -= 2.0;
    let w = a.weights();
    let wn: f64 = w.iter().map(|x| x * x).sum();
    let proj = a.apply(&v) / a.normalization() / wn;
    let v: Vec<f64> = v.iter().zip(w).map(|(x, wi)| x - proj * wi).collect();
    unit_height_direction(&CartanVec::traceless_projection(&v), a)
}

/// Multiplies generator `target` on the right by `P exp(z) P⁻¹`, where `P` is
/// the eigenframe of generator `axis`. When `axis` and `target` are the two
/// generators of a handle, their commutator is unchanged.
pub fn bend_generator(rep: &LinearRep, axis: usize, target: usize, z: &CartanVec) -> Result<LinearRep> {
    let frame = adapt_frame(&rep.generators()[axis])?;
    let (b, bi) = frame.centralizer_element(z);
    let mut out = rep.clone();
    let g = &rep.generators()[target] * &b;
    let gi = &bi * &rep.inverse_generators()[target];
    out.set_generator(target, g, gi);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{glue_genus2, TorusParams};
    use crate::lie::{jordan_projection, Alpha0};

    fn base() -> (SurfaceRep, LinearRep) {
        let t = TorusParams::new(4.0, 4.0, 4.0).unwrap();
        let s = glue_genus2(&t, &t, 0.0).unwrap();
        let l = hitchin_base(&s, 3).unwrap();
        (s, l)
    }

    #[test]
    fn height_examples() {
        let a = Alpha0::standard(3).unwrap();
        let z = CartanVec::new(vec![1.0, -2.0, 1.0]).unwrap();
        assert!((cylinder_height(&z, &a) - 1.5).abs() < 1e-12);
        assert_eq!(cylinder_height(&CartanVec::new(vec![0.0; 3]).unwrap(), &a), 0.0);
        assert!(cylinder_height(&special_direction(3).scale(2.5), &a) < 1e-12);
        let shifted = z.add(&special_direction(3).scale(0.8));
        assert!((cylinder_height(&shifted, &a) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn height_matches_grid_search() {
        let a = Alpha0::standard(4).unwrap();
        let z = CartanVec::traceless_projection(&[0.3, -1.1, 0.9, 0.2]);
        let u = special_direction(4);
        let mut best = f64::INFINITY;
        for k in -400_000..=400_000 {
            let t = k as f64 * 1e-5;
            let v = u.scale(t).add(&z);
            best = best.min(finsler_norm(&v, &a));
        }
        assert!((cylinder_height(&z, &a) - best).abs() < 1e-5);
    }

    #[test]
    fn frame_of_tau_matches_rank_two_diagonalization() {
        let (s, l) = base();
        let c = Word::parse("abAB").unwrap();
        let m = s.rep.eval(&c);
        let (f, mu) = crate::fuchsian::eigenframe(&m).unwrap();
        let frame = adapt_frame(&l.eval(&c).unscaled()).unwrap();
        let diag = &frame.p_inv * &(&l.eval(&c).unscaled() * &frame.p);
        let expect = irreducible_rep(&Mat2::diag(mu, 1.0 / mu), 3).unwrap();
        let scale = expect.max_abs();
        for i in 0..3 {
            for j in 0..3 {
                assert!((diag.get(i, j) - expect.get(i, j)).abs() < 1e-8 * scale, "{diag:?}");
            }
        }
        // the frame agrees with τ₃ of the rank-two frame up to column scaling
        let tf = irreducible_rep(&f, 3).unwrap();
        for j in 0..3 {
            let r = frame.p.get(0, j) / tf.get(0, j);
            for i in 0..3 {
                assert!((frame.p.get(i, j) - r * tf.get(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn parabolic_frame_rejected() {
        let u = irreducible_rep(&Mat2::new(1.0, 1.0, 0.0, 1.0), 3).unwrap();
        assert!(matches!(adapt_frame(&u), Err(Error::NotLoxodromic(_))));
    }

    #[test]
    fn graft_fixes_first_factor_and_curve() {
        let (_, l) = base();
        let split = Splitting::genus2_separating();
        let a = Alpha0::standard(3).unwrap();
        let g = grafting_ray(&l, &split, &kernel_direction(3, &a).unwrap(), 2.0, &a).unwrap();
        assert!((cylinder_height(g.datum().z(), &a) - 2.0).abs() < 1e-8);
        let (al, ali) = g.conjugator();
        let c = l.eval(split.peripheral());
        let lhs = al * &c;
        let rhs = &c * al;
        assert!(lhs.max_abs_diff(&rhs) < 1e-8 * lhs.unscaled().max_abs());
        assert!((al * ali).max_abs_diff(&MatD::identity(3)) < 1e-9);
        for w in ["ab", "aab", "abAB"] {
            let w = Word::parse(w).unwrap();
            let x = jordan_projection(&graft_evaluate(&g, &w)).unwrap();
            let y = jordan_projection(&l.eval(&w)).unwrap();
            for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
                assert!((p - q).abs() < 1e-9);
            }
        }
        let cross = Word::parse("ac").unwrap();
        let x = g.rep().finsler_length(&cross, &a).unwrap();
        let y = l.finsler_length(&cross, &a).unwrap();
        assert!(x > y + 0.1);
    }

    #[test]
    fn zero_graft_is_identity() {
        let (_, l) = base();
        let split = Splitting::genus2_separating();
        let g = GraftedRep::new(&l, &split, GraftDatum::zero(3)).unwrap();
        let w = Word::parse("acBd").unwrap();
        let f = g.frame();
        let expect = l.conjugate(&f.p_inv, &f.p).eval(&w);
        assert!(graft_evaluate(&g, &w).max_abs_diff(&expect) < 1e-9 * expect.unscaled().max_abs());
    }

    #[test]
    fn factor_spectra_survive_large_heights() {
        let (_, l) = base();
        let split = Splitting::genus2_separating();
        let a = Alpha0::standard(3).unwrap();
        let g = grafting_ray(&l, &split, &kernel_direction(3, &a).unwrap(), 10.0, &a).unwrap();
        for w in ["c", "d", "cdd", "CdcDD", "ab", "aBB"] {
            let w = Word::parse(w).unwrap();
            let (x, y) = (g.rep().finsler_length(&w, &a).unwrap(), l.finsler_length(&w, &a).unwrap());
            assert!((x - y).abs() < 1e-9 * y.max(1.0), "{w}: {x} vs {y}");
        }
    }

    #[test]
    fn bending_preserves_relator() {
        let (_, l) = base();
        let z = CartanVec::traceless_projection(&[0.3, -0.5, 0.1]);
        let b = bend_generator(&l, 0, 1, &z).unwrap();
        let b = bend_generator(&b, 1, 0, &z).unwrap();
        let r = b.eval(&Word::parse("abABcdCD").unwrap()).unscaled();
        assert!(r.max_abs_diff(&MatD::identity(3)) < 1e-8);
        let inv = b.eval(&Word::parse("b").unwrap()) * b.eval(&Word::parse("B").unwrap());
        assert!(inv.unscaled().max_abs_diff(&MatD::identity(3)) < 1e-10);
    }
}
