//! The invariant suite behind the `check` subcommand. Every check runs on
//! the configured geometry and reports a one-line summary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::census::{build_census, Census, CensusOptions, RepFamily, FUCHSIAN_LABEL};
use crate::experiments::{exterior_power_defect, oracle_agrees, ray_label, twist_graft_defect, Setup};
use crate::fingerprint::FINGERPRINT_SEEDS;
use crate::fuchsian::{axis_translation, glue_genus2, sl2_translation_length, Mat2, Sl2Rep};
use crate::group::{canonicalize_conjugacy, enumerate_classes, intersection_number, Factor, Presentation, Word};
use crate::lie::{special_direction, finsler_norm, irreducible_rep, loxodromy_gaps, CartanVec, LinearRep, MatD};
use crate::fingerprint::{quantize, Fingerprinter};
use crate::thermo::{boundary_mass, di_path, entropy_at, flat_mass_proxy, pressure_form, pressure_speed, PathSample};
use crate::Result;

/// Length cap of the subsurface censuses behind the entropy floor.
pub const SUBSURFACE_CAP: f64 = 20.0;

/// Right end of the ray stretch on which the pressure form is sampled.
pub const FORM_PATH_END: f64 = 2.0;

/// Largest ray parameter at which a generic conjugate of the grafted
/// representation is still representable in double precision.
pub const CONJUGATION_T_MAX: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

/// Fingerprint seeds for the oracle, derived from the configuration seed.
/// Seed 0 gives the library's standard auxiliaries.
pub fn oracle_seeds(seed: u64) -> Vec<u64> {
    if seed == 0 {
        return FINGERPRINT_SEEDS.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![rng.gen(), rng.gen()]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Ray labels plus a uniform stretch `[0, FORM_PATH_END]` for the pressure
/// form, in one Fuchsian-driven census.
fn check_census(setup: &Setup) -> Result<(Census, Vec<String>, PathSample)> {
    let h = setup.config.fd_step;
    let n = (FORM_PATH_END / h).round().max(2.0) as usize;
    let path_grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let mut grid = path_grid.clone();
    for &t in &setup.config.ray_grid {
        if !grid.iter().any(|&g| (g - t).abs() < 1e-12) {
            grid.push(t);
        }
    }
    let (census, _) = setup.ray_census(&grid)?;
    let ray = setup.config.ray_grid.iter().map(|&t| ray_label(t)).collect();
    let path = PathSample::new(path_grid.clone(), path_grid.iter().map(|&t| ray_label(t)).collect())?;
    Ok((census, ray, path))
}

pub fn run_checks(setup: &Setup) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = Presentation::genus2();
    let split = &setup.splitting;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.config.seed);

    let classes = enumerate_classes(&p, 6)?;
    let mut bad = 0;
    for w in &classes {
        let c = canonicalize_conjugacy(w, &p);
        if &c != w || (0..w.len()).any(|k| canonicalize_conjugacy(&w.rotate(k), &p) != c) {
            bad += 1;
        }
    }
    out.push(Check::new(
        "canonical form idempotent and rotation invariant",
        bad == 0,
        format!("{} classes up to length 6, {bad} failures", classes.len()),
    ));

    let mut bad = 0;
    for w in &classes {
        let i = intersection_number(w, split);
        if intersection_number(&w.inverse(), split) != i {
            bad += 1;
        }
        for n in 2..=3 {
            if intersection_number(&w.pow(n), split) != n as u32 * i {
                bad += 1;
            }
        }
    }
    for n in 1..=3 {
        for f in [Factor::First, Factor::Second] {
            if intersection_number(&split.peripheral_in(f).pow(n), split) != 0 {
                bad += 1;
            }
        }
    }
    out.push(Check::new(
        "intersection number: inverse, powers, peripheral",
        bad == 0,
        format!("{bad} failures over {} classes", classes.len()),
    ));

    let seeds = oracle_seeds(setup.config.seed);
    let (agree, n_canon, n_oracle) = oracle_agrees(&p, 4, &seeds)?;
    out.push(Check::new(
        "class enumeration matches fingerprint oracle to length 4",
        agree,
        format!("{n_canon} canonical classes, {n_oracle} oracle classes"),
    ));

    let relator = &p.relators()[0];
    let words = enumerate_classes(&p, 4)?;
    let grafted = setup.grafted_at(setup.direction.scale(*setup.config.ray_grid.last().unwrap_or(&0.0)))?;
    let mut worst = 0.0f64;
    for w in &classes {
        let wr = w.concat(relator);
        let s = &setup.surface.rep;
        let (m0, m1) = (s.eval(w), s.eval(&wr));
        worst = worst.max((m0.trace().abs() - m1.trace().abs()).abs() / m0.frobenius_sq().sqrt().max(1.0));
        for rep in [&setup.base, grafted.rep()] {
            let (m0, m1) = (rep.eval(w), rep.eval(&wr));
            let norm = m0.log_frobenius().exp().max(1.0);
            worst = worst.max((m0.trace().abs() - m1.trace().abs()).abs() / norm);
        }
    }
    out.push(Check::new(
        "relator respected: tr ρ(w·r) = ±tr ρ(w)",
        worst <= 1e-6,
        format!("worst trace defect relative to ‖ρ(w)‖ {worst:.2e} over {} words", classes.len()),
    ));

    let mut worst = 0.0f64;
    for w in &words {
        let m = setup.surface.rep.eval(w);
        let g = random_sl2(&mut rng);
        worst = worst.max((sl2_translation_length(&m.conj(&g)) - sl2_translation_length(&m)).abs());
    }
    out.push(Check::new(
        "translation length conjugation invariant",
        worst <= 1e-9,
        format!("worst defect {worst:.2e}"),
    ));

    out.push(twist_equivariance(setup, &words, 0.7)?);

    let (census, ray, path) = check_census(setup)?;
    let rows = census.rows();

    let mut worst = 0.0f64;
    for r in rows {
        worst = worst.max((r.l_f[0] - r.l_hyp).abs());
    }
    out.push(Check::new(
        "Fuchsian Finsler length equals hyperbolic length",
        worst <= 1e-6,
        format!("worst difference {worst:.2e} over {} rows", rows.len()),
    ));

    for s in [0.1, 0.5, 1.0] {
        let defect = twist_graft_defect(setup, rows, s)?;
        out.push(Check::new(
            "shear graft equals re-twisted surface",
            defect <= 1e-6,
            format!("s = {s}: worst length difference {defect:.2e}"),
        ));
    }

    let d = setup.config.d;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = random_sl2(&mut rng);
        let n = random_sl2(&mut rng);
        let prod = &irreducible_rep(&m, d)? * &irreducible_rep(&n, d)?;
        let direct = irreducible_rep(&(m * n), d)?;
        worst = worst.max(direct.max_abs_diff(&prod) / prod.unscaled().max_abs());
    }
    out.push(Check::new("τ is a homomorphism", worst <= 1e-9, format!("worst relative defect {worst:.2e}")));

    let sample: Vec<&Word> = rows.iter().step_by((rows.len() / 200).max(1)).map(|r| &r.word).collect();
    let moderate = setup.config.ray_grid.iter().copied().filter(|&t| t > 0.0 && t <= CONJUGATION_T_MAX).next();
    let mut conj_reps = vec![setup.base.clone()];
    if let Some(t) = moderate {
        conj_reps.push(setup.grafted_at(setup.direction.scale(t))?.rep().clone());
    }
    let mut worst = 0.0f64;
    for w in &sample {
        let (h, h_inv) = random_conjugator(&mut rng, d)?;
        for rep in &conj_reps {
            let a = rep.jordan(w)?;
            let b = rep.conjugate(&h, &h_inv).jordan(w)?;
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    out.push(Check::new(
        "Jordan projection conjugation invariant",
        worst <= 1e-8,
        format!("worst defect {worst:.2e} over {} words and {} representations", sample.len(), conj_reps.len()),
    ));

    let mut bad = 0;
    let reps: Vec<&LinearRep> = vec![&setup.base, grafted.rep()];
    for w in &sample {
        for rep in &reps {
            let (jordan, cartan) = (rep.jordan(w)?, rep.cartan(w)?);
            if cartan.as_slice()[0] < jordan.as_slice()[0] - 1e-9 * jordan.as_slice()[0].abs().max(1.0) {
                bad += 1;
            }
        }
    }
    out.push(Check::new(
        "spectral radius below top singular value",
        bad == 0,
        format!("{bad} violations over {} words", sample.len()),
    ));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v = CartanVec::traceless_projection(&v);
        let flipped: Vec<f64> = v.as_slice().iter().rev().map(|x| -x).collect();
        let flipped = CartanVec::traceless_projection(&flipped);
        worst = worst.max((finsler_norm(&v, &setup.alpha) - finsler_norm(&flipped, &setup.alpha)).abs());
    }
    for w in &sample {
        let rep = grafted.rep();
        let a = rep.finsler_length(w, &setup.alpha)?;
        let b = rep.finsler_length(&w.inverse(), &setup.alpha)?;
        worst = worst.max((a - b).abs());
    }
    out.push(Check::new(
        "Finsler norm and length invariant under the opposition involution",
        worst <= 1e-9,
        format!("worst defect {worst:.2e}"),
    ));

    out.push(gap_growth(setup)?);

    let defect = exterior_power_defect(grafted.rep(), &sample.iter().map(|w| (*w).clone()).collect::<Vec<_>>())?;
    out.push(Check::new(
        "top eigenvalue of exterior powers",
        defect <= 1e-9,
        format!("worst defect {defect:.2e} over {} words", sample.len()),
    ));

    out.push(crossing_bound(setup, &census, &ray)?);

    let mut bad = 0;
    for label in census.labels() {
        let mut prev = 0;
        for k in 0..=100 {
            let n = census.count(label, census.r_star() * k as f64 / 100.0)?;
            if n < prev {
                bad += 1;
            }
            prev = n;
        }
    }
    out.push(Check::new("class counts nondecreasing in R", bad == 0, format!("{bad} decreases")));

    out.push(inversion_symmetry(&p, &census)?);

    for n in [6, 8] {
        out.push(truncation_honesty(setup, n)?);
    }

    let radius = ray.iter().map(|l| census.radius(l)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min);
    let mut deltas = Vec::new();
    for label in &ray {
        deltas.push(entropy_at(&census, label, radius)?.delta);
    }
    let in_range = deltas.iter().all(|d| (0.1..=1.1).contains(d));
    out.push(Check::new("entropy estimates in [0.1, 1.1]", in_range, format!("δ̂ along the ray grid: {}", fmt_list(&deltas))));

    out.push(entropy_ordering(setup, &deltas, radius)?);

    let mut worst = f64::INFINITY;
    for &t in path.grid() {
        worst = worst.min(pressure_speed(&census, &path, t)?.powi(2));
    }
    let mut raw = f64::INFINITY;
    for &t in path.grid() {
        raw = raw.min(pressure_form(&census, &path, t)?);
    }
    out.push(Check::new(
        "pressure speed squared nonnegative",
        worst >= -1e-6,
        format!("smallest speed² on [0, {FORM_PATH_END}]: {worst:.3e}; smallest raw second difference of J: {raw:.3e}"),
    ));

    out.push(convexity_of_i(&census, &path, "ray")?);
    let twist = twist_path_census(setup)?;
    out.push(convexity_of_i(&twist.0, &twist.1, "twist")?);

    let mut worst = 0.0f64;
    for (&t, label) in setup.config.ray_grid.iter().zip(&ray) {
        let h = setup.height(t);
        let lhs = h * boundary_mass(&census, label)?;
        let rhs = flat_mass_proxy(&census, label, h)?;
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
    }
    out.push(Check::new(
        "flat mass proxy equals height times boundary mass",
        worst <= 1e-12,
        format!("worst relative defect {worst:.2e}"),
    ));

    Ok(out)
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn random_sl2(rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let (a, b, c): (f64, f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if a.abs() > 0.2 {
            return Mat2::new(a, b, c, (1.0 + b * c) / a);
        }
    }
}

/// Random `h` with `‖h‖_F ≤ 10` and its inverse.
fn random_conjugator(rng: &mut ChaCha8Rng, d: usize) -> Result<(MatD, MatD)> {
    loop {
        let e: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let h = MatD::from_fn(d, |i, j| e[i * d + j] + if i == j { 1.0 } else { 0.0 });
        let scale = h.unscaled().max_abs() * d as f64;
        if h.determinant().abs() > 0.1 && scale <= 10.0 {
            return Ok((h, h.inverse()?));
        }
    }
}

/// Twisting the second factor of `glue(p1, p2, s)` by `t` along the axis of
/// the gluing curve agrees with `glue(p1, p2, s + t)` on short traces.
fn twist_equivariance(setup: &Setup, words: &[Word], t: f64) -> Result<Check> {
    let (p1, p2) = setup.config.tori()?;
    let s = setup.config.twist;
    let base = glue_genus2(&p1, &p2, s)?;
    let target = glue_genus2(&p1, &p2, s + t)?;
    let g = base.rep.generators();
    let shift = axis_translation(&base.rep.eval(setup.splitting.peripheral()), t)?;
    let twisted = Sl2Rep::new(vec![g[0], g[1], g[2].conj(&shift), g[3].conj(&shift)]);
    let mut worst = 0.0f64;
    for w in words {
        let (a, b) = (twisted.eval(w).trace().abs(), target.rep.eval(w).trace().abs());
        worst = worst.max((a - b).abs() / a.max(1.0));
    }
    Ok(Check::new(
        "twist parameters add under gluing",
        worst <= 1e-9,
        format!("t = {t}: worst relative trace difference {worst:.2e} over {} words", words.len()),
    ))
}

/// Gaps of `gⁿ` for `g = τ(h)·exp(z)` grow at least linearly in `n`.
fn gap_growth(setup: &Setup) -> Result<Check> {
    let d = setup.config.d;
    let h = irreducible_rep(&Mat2::diag(1.5, 1.0 / 1.5), d)?;
    let rot = irreducible_rep(&Mat2::new(0.8, -0.6, 0.6, 0.8), d)?;
    let z: Vec<f64> = (0..d).map(|i| 0.05 * (i as f64 - 0.5 * (d - 1) as f64)).collect();
    let g = &(&rot * &h) * &(&MatD::exp_diag(&z) * &rot.transpose());
    let g1 = loxodromy_gaps(&g)?;
    let mut worst = f64::INFINITY;
    let mut gn = g;
    for n in 2..=12 {
        gn = &gn * &g;
        for (a, b) in loxodromy_gaps(&gn)?.iter().zip(&g1) {
            worst = worst.min(a / (n as f64 * b));
        }
    }
    Ok(Check::new(
        "loxodromy gaps of powers grow linearly",
        worst >= 1.0 - 1e-6,
        format!("smallest ratio gap(gⁿ)/(n·gap(g)) for n ≤ 12: {worst:.12}"),
    ))
}

/// `ℓ^F(ρ_{tz}(γ)) ≥ κ (t+1) ι(γ)` with `κ` the minimum over the census;
/// stability compares it with the minimum over the shorter half.
fn crossing_bound(setup: &Setup, census: &Census, ray: &[String]) -> Result<Check> {
    let rows = census.rows();
    let kappa = |upto: usize| -> Result<f64> {
        let mut k = f64::INFINITY;
        for (&t, label) in setup.config.ray_grid.iter().zip(ray) {
            let i = census.label_index(label)?;
            for r in rows[..upto].iter().filter(|r| r.iota >= 1) {
                k = k.min(r.l_f[i] / ((t + 1.0) * r.iota as f64));
            }
        }
        Ok(k)
    };
    let (all, half) = (kappa(rows.len())?, kappa(rows.len() / 2)?);
    Ok(Check::new(
        "crossing classes grow with the cylinder",
        all > 0.0 && all >= 0.5 * half,
        format!("κ = {all:.4} over the census, {half:.4} over its shorter half"),
    ))
}

/// Counts below the completeness radius do not change when the word-length
/// bound grows by one.
fn truncation_honesty(setup: &Setup, n: usize) -> Result<Check> {
    let fam = RepFamily::new(
        Presentation::genus2(),
        Some(setup.splitting.clone()),
        setup.surface.rep.clone(),
        setup.config.d,
    )?;
    let cap = n as f64 + 1.0;
    let a = build_census(&fam, &CensusOptions::capped(n, cap))?;
    let b = build_census(&fam, &CensusOptions::capped(n + 1, cap))?;
    let r = a.r_star();
    let mut bad = 0;
    for k in 0..=50 {
        let x = r * k as f64 / 50.0;
        if a.count(FUCHSIAN_LABEL, x)? != b.count(FUCHSIAN_LABEL, x)? {
            bad += 1;
        }
    }
    Ok(Check::new(
        "counts below R★ stable under longer words",
        bad == 0,
        format!("max_word_len {n} → {}: R★ = {r:.3}, N(R★) = {}, {bad} mismatches", n + 1, a.count(FUCHSIAN_LABEL, r)?),
    ))
}

/// Entropy does not rise past `t = 2` beyond noise and stays above the
/// larger subsurface entropy. All estimates share the radius `r`.
fn entropy_ordering(setup: &Setup, deltas: &[f64], r: f64) -> Result<Check> {
    let mut floor = 0.0f64;
    for f in [Factor::First, Factor::Second] {
        let c = setup.subsurface_census(f, SUBSURFACE_CAP.max(r))?;
        floor = floor.max(entropy_at(&c, FUCHSIAN_LABEL, r)?.delta);
    }
    let ts = &setup.config.ray_grid;
    let mut ok = true;
    for i in 0..ts.len() {
        if deltas[i] < floor - 0.1 {
            ok = false;
        }
        for j in i + 1..ts.len() {
            if ts[i] >= 2.0 && deltas[j] > deltas[i] + 0.05 {
                ok = false;
            }
        }
    }
    Ok(Check::new(
        "entropy ordered along the ray and above the subsurface entropy",
        ok,
        format!("at R = {r:.3}: subsurface δ̂ = {floor:.4}; ray δ̂ = {}", fmt_list(deltas)),
    ))
}

/// Each class is matched to the class of its inverse by fingerprint, among
/// rows of equal hyperbolic length. Only rows inside the completeness radius
/// are required to have a partner.
fn inversion_symmetry(p: &Presentation, census: &Census) -> Result<Check> {
    let fp = Fingerprinter::standard(p)?;
    let rows = census.rows();
    let parsed: Vec<Vec<f64>> =
        rows.iter().map(|r| r.fingerprint.split(';').filter_map(|x| x.parse().ok()).collect()).collect();
    let r_star = census.r_star();
    let (mut bad, mut checked) = (0, 0);
    for r in rows.iter().filter(|r| r.l_hyp <= r_star) {
        checked += 1;
        let target: Vec<f64> = fp.raw(&r.word.inverse())?.into_iter().map(quantize).collect();
        let tol = 1e-9 * r.l_hyp.max(1.0);
        let lo = rows.partition_point(|s| s.l_hyp < r.l_hyp - tol);
        let hi = rows.partition_point(|s| s.l_hyp <= r.l_hyp + tol);
        let hit = (lo..hi).any(|k| {
            let s = &rows[k];
            parsed[k].len() == target.len()
                && parsed[k].iter().zip(&target).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0) + 1e-9)
                && s.iota == r.iota
                && s.l_f.iter().zip(&r.l_f).all(|(a, b)| rel_close(*a, *b, 1e-9))
        });
        if !hit {
            bad += 1;
        }
    }
    Ok(Check::new(
        "every class has its inverse with equal lengths and intersection",
        bad == 0,
        format!("{bad} unmatched rows of {checked} below R★ = {r_star:.3}"),
    ))
}

/// A short twist path `s ↦ graft by s·v`, with `v` the special direction,
/// sampled on the same stretch as the ray.
fn twist_path_census(setup: &Setup) -> Result<(Census, PathSample)> {
    let h = setup.config.fd_step;
    let n = (FORM_PATH_END / h).round().max(2.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let v = special_direction(setup.config.d);
    let mut fam = RepFamily::new(
        Presentation::genus2(),
        Some(setup.splitting.clone()),
        setup.surface.rep.clone(),
        setup.config.d,
    )?;
    let labels: Vec<String> = grid.iter().map(|s| format!("twist:{s}")).collect();
    for (&s, label) in grid.iter().zip(&labels) {
        fam.add_label(label, setup.grafted_at(v.scale(s))?.rep().clone())?;
    }
    let census = build_census(&fam, &setup.census_options())?;
    Ok((census, PathSample::new(grid, labels)?))
}

/// Second derivative of `s ↦ I(ρ_t, ρ_{t+s})` at `s = 0` along a path.
/// Unlike the second difference of `J` it is not dominated by entropy-fit
/// noise at desk scale.
fn convexity_of_i(census: &Census, path: &PathSample, name: &str) -> Result<Check> {
    let mut worst = f64::INFINITY;
    let g = path.grid();
    for k in 1..g.len() - 1 {
        worst = worst.min(di_path(census, path, g[k], 2)?);
    }
    Ok(Check::new(
        "intersection along the path is locally convex",
        worst >= -1e-6,
        format!("{name} path on [0, {FORM_PATH_END}]: smallest second derivative of I {worst:.3e}"),
    ))
}
