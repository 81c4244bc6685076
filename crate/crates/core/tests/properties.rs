use hitchin_core::fuchsian::{sl2_translation_length, Mat2};
use hitchin_core::group::{canonicalize_conjugacy, intersection_number, Letter, Presentation, Splitting, Word};
use hitchin_core::lie::{
    calibrate_alpha0, cartan_projection_pair, finsler_norm, irreducible_rep, jordan_projection_pair, CartanVec,
};
use proptest::prelude::*;

fn letters(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..rank, any::<bool>()), 1..=max_len).prop_map(|v| {
        Word::from_letters(v.into_iter().map(|(i, inv)| if inv { Letter::inv_gen(i) } else { Letter::gen(i) }).collect())
    })
}

fn reduced(max_len: usize) -> impl Strategy<Value = Word> {
    letters(4, max_len).prop_map(|w| w.cyclic_reduce()).prop_filter("nontrivial", |w| !w.is_empty())
}

/// Hyperbolic element `±R(θ) · diag(e^s, e^{-s}) · R(-θ)`, with a shear to
/// make it non-normal.
fn sl2() -> impl Strategy<Value = Mat2> {
    (0.2f64..2.5, -3.0f64..3.0, -1.0f64..1.0, any::<bool>()).prop_map(|(s, th, k, neg)| {
        let r = |a: f64| Mat2::new(a.cos(), -a.sin(), a.sin(), a.cos());
        let shear = Mat2::new(1.0, k, 0.0, 1.0);
        let g = shear * r(th) * Mat2::diag(s.exp(), (-s).exp()) * r(-th) * shear.inverse();
        if neg { g.scale(-1.0) } else { g }
    })
}

/// Eigenvalue accuracy available in double for `τ_d(g)`: machine precision
/// times the condition number of the image.
fn spectral_tol(g: &Mat2, d: usize) -> f64 {
    let m = irreducible_rep(g, d).unwrap().unscaled().max_abs();
    let mi = irreducible_rep(&g.inverse(), d).unwrap().unscaled().max_abs();
    1e-14 * d as f64 * m * mi + 1e-12
}

fn conjugator() -> impl Strategy<Value = Mat2> {
    (-1.5f64..1.5, -1.5f64..1.5, 0.3f64..2.0).prop_map(|(b, c, a)| Mat2::new(a, b, c, (1.0 + b * c) / a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_form_is_a_conjugacy_invariant(w in reduced(10), k in 0usize..10) {
        let p = Presentation::genus2();
        let c = canonicalize_conjugacy(&w, &p);
        prop_assert_eq!(&canonicalize_conjugacy(&c, &p), &c);
        prop_assert_eq!(&canonicalize_conjugacy(&w.rotate(k % w.len()), &p), &c);
    }

    #[test]
    fn canonical_form_preserves_lengths(w in reduced(10)) {
        let p = Presentation::genus2();
        let s = hitchin_core::fuchsian::glue_genus2(
            &hitchin_core::fuchsian::TorusParams::new(4.0, 3.5, 4.9).unwrap(),
            &hitchin_core::fuchsian::TorusParams::new(4.0, 3.5, 4.9).unwrap(),
            0.5,
        ).unwrap();
        let c = canonicalize_conjugacy(&w, &p);
        let (a, b) = (s.rep.length(&w), s.rep.length(&c));
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn intersection_number_scales_with_powers(w in reduced(8), n in 1usize..4) {
        let s = Splitting::genus2_separating();
        let i = intersection_number(&w, &s);
        prop_assert_eq!(intersection_number(&w.pow(n), &s), n as u32 * i);
        prop_assert_eq!(intersection_number(&w.inverse(), &s), i);
        prop_assert_eq!(i % 2, 0);
    }

    #[test]
    fn principal_jordan_projection_is_a_multiple_of_the_half_sum(g in sl2(), d in 2usize..=6) {
        let l = sl2_translation_length(&g);
        let m = irreducible_rep(&g, d).unwrap();
        let lam = jordan_projection_pair(&m, &irreducible_rep(&g.inverse(), d).unwrap()).unwrap();
        for (i, x) in lam.as_slice().iter().enumerate() {
            let expect = (d as f64 - 1.0 - 2.0 * i as f64) * l / 2.0;
            prop_assert!((x - expect).abs() <= spectral_tol(&g, d), "{:?} vs weight {} at ℓ = {}", lam, i, l);
        }
    }

    #[test]
    fn jordan_projection_is_conjugation_invariant(g in sl2(), h in conjugator(), d in 2usize..=5) {
        let gi = g.inverse();
        let a = jordan_projection_pair(&irreducible_rep(&g, d).unwrap(), &irreducible_rep(&gi, d).unwrap()).unwrap();
        let (hg, hgi) = (h * g * h.inverse(), h * gi * h.inverse());
        let b = jordan_projection_pair(&irreducible_rep(&hg, d).unwrap(), &irreducible_rep(&hgi, d).unwrap()).unwrap();
        let tol = spectral_tol(&g, d) + spectral_tol(&hg, d);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= tol, "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn cartan_majorizes_jordan(g in sl2(), h in conjugator(), d in 2usize..=5) {
        let (x, xi) = (h * g * h.inverse(), h * g.inverse() * h.inverse());
        let m = irreducible_rep(&x, d).unwrap();
        let mi = irreducible_rep(&xi, d).unwrap();
        let lam = jordan_projection_pair(&m, &mi).unwrap();
        let mu = cartan_projection_pair(&m, &mi).unwrap();
        prop_assert!(lam.is_weyl_sorted() && mu.is_weyl_sorted(), "{:?} {:?}", lam, mu);
        let tol = spectral_tol(&x, d);
        let (mut sl, mut sm) = (0.0, 0.0);
        for k in 0..d {
            sl += lam.as_slice()[k];
            sm += mu.as_slice()[k];
            prop_assert!(sm >= sl - tol, "partial sums {} < {} at {}", sm, sl, k);
        }
    }

    #[test]
    fn finsler_norm_is_opposition_invariant_and_homogeneous(
        v in prop::collection::vec(-3.0f64..3.0, 3), s in 0.0f64..4.0
    ) {
        let a = calibrate_alpha0(3).unwrap();
        let v = CartanVec::traceless_projection(&v);
        let flip: Vec<f64> = v.as_slice().iter().rev().map(|x| -x).collect();
        let f = finsler_norm(&v, &a);
        prop_assert!((finsler_norm(&CartanVec::traceless_projection(&flip), &a) - f).abs() <= 1e-12 * f.max(1.0));
        prop_assert!((finsler_norm(&v.scale(s), &a) - s * f).abs() <= 1e-12 * (s * f).max(1.0));
    }
}
