//! Experiment drivers shared by the command-line runner and the acceptance
//! tests: ray censuses, graft sweeps, pressure paths, pants entropies and
//! the finite-difference probes of grafted length functions.

use nalgebra::DMatrix;

use crate::census::{build_census, Census, CensusOptions, CensusRow, RepFamily, FUCHSIAN_LABEL};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprinter;
use crate::fuchsian::{glue_genus2, PantsParams, SurfaceRep};
use crate::grafting::{
    cylinder_height, hitchin_base, kernel_direction, unit_height_direction, GraftDatum, GraftedRep,
};
use crate::group::{enumerate_classes, walk_reduced_words, Factor, Presentation, Splitting, Word};
use crate::lie::{
    exterior_power, special_direction, Alpha0, CartanVec, LinearRep, MatD, MAX_DIM,
};
use crate::thermo::{
    boundary_mass, entropy_derivative_residual, entropy_estimate, entropy_from_lengths, factor_family,
    intersection_i, normalized_j, pants_diagnostics, pants_family, EntropyDerivative, PathSample,
};

/// Word-length bound for censuses limited only by a length cap.
pub const OPEN_WORD_LEN: usize = 64;

/// Census label of the ray point with parameter `t`.
pub fn ray_label(t: f64) -> String {
    if t == 0.0 {
        FUCHSIAN_LABEL.to_string()
    } else {
        format!("t={t}")
    }
}

/// Surface, base representation and grafting direction for a configuration.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub surface: SurfaceRep,
    pub base: LinearRep,
    pub splitting: Splitting,
    pub alpha: Alpha0,
    /// Grafting direction of unit cylinder height.
    pub direction: CartanVec,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (p1, p2) = config.tori()?;
        let surface = glue_genus2(&p1, &p2, config.twist)?;
        let base = hitchin_base(&surface, config.d)?;
        let alpha = Alpha0::standard(config.d)?;
        let direction = match &config.graft.z {
            Some(z) => {
                let z = CartanVec::new(z.clone())?;
                if config.graft.kernel {
                    GraftDatum::in_kernel(z.clone(), &alpha)?;
                }
                unit_height_direction(&z, &alpha)?
            }
            None => kernel_direction(config.d, &alpha)?,
        };
        Ok(Setup {
            config: config.clone(),
            surface,
            base,
            splitting: Splitting::genus2_separating(),
            alpha,
            direction,
        })
    }

    pub fn grafted_at(&self, z: CartanVec) -> Result<GraftedRep> {
        GraftedRep::new(&self.base, &self.splitting, GraftDatum::new(z))
    }

    /// Cylinder height of the ray point `t`.
    pub fn height(&self, t: f64) -> f64 {
        cylinder_height(&self.direction.scale(t), &self.alpha)
    }

    /// Family with the Fuchsian label and one grafted label per positive
    /// ray parameter.
    pub fn ray_family(&self, ts: &[f64]) -> Result<(RepFamily, Vec<String>)> {
        let mut fam = RepFamily::new(
            Presentation::genus2(),
            Some(self.splitting.clone()),
            self.surface.rep.clone(),
            self.config.d,
        )?;
        let mut labels = Vec::with_capacity(ts.len());
        for &t in ts {
            let name = ray_label(t);
            if t != 0.0 {
                let g = self.grafted_at(self.direction.scale(t))?;
                fam.add_label(&name, g.rep().clone())?;
            }
            labels.push(name);
        }
        Ok((fam, labels))
    }

    pub fn census_options(&self) -> CensusOptions {
        match self.config.length_cap {
            Some(cap) => CensusOptions::capped(self.config.max_word_len, cap),
            None => CensusOptions::exact(self.config.max_word_len),
        }
    }

    /// Fuchsian-driven census carrying every ray label, stamped with the
    /// configuration hash.
    pub fn ray_census(&self, ts: &[f64]) -> Result<(Census, Vec<String>)> {
        let (fam, labels) = self.ray_family(ts)?;
        let mut c = build_census(&fam, &self.census_options())?;
        c.set_config_hash(&self.config.hash());
        Ok((c, labels))
    }

    /// Census driven by the lengths of the ray point `t` itself, with a
    /// length cap grown until about `rows` classes are found.
    pub fn label_census(&self, t: f64, rows: usize) -> Result<Census> {
        let (fam, labels) = self.ray_family(&[t])?;
        budget_census(&fam, &labels[0], rows)
    }

    /// Free-group census of one factor under the restricted Fuchsian
    /// representation.
    pub fn subsurface_census(&self, factor: Factor, cap: f64) -> Result<Census> {
        let fam = factor_family(&self.surface.rep, &self.splitting, factor, self.config.d)?;
        build_census(&fam, &CensusOptions::capped(OPEN_WORD_LEN, cap))
    }
}

/// Word-length bound paired with a length cap. The completeness radius
/// still accounts for classes cut off by it.
pub fn word_len_for_cap(cap: f64) -> usize {
    (cap.ceil() as usize + 2).min(OPEN_WORD_LEN)
}

/// Builds a census driven by `label` whose row count approaches `rows`,
/// extrapolating the length cap from the growth rate of a smaller census.
pub fn budget_census(fam: &RepFamily, label: &str, rows: usize) -> Result<Census> {
    let mut cap = 8.0;
    let mut last = None;
    for _ in 0..6 {
        let opts = CensusOptions::capped(word_len_for_cap(cap), cap).driven_by(label);
        let c = match build_census(fam, &opts) {
            Err(Error::ResourceCap { .. }) if last.is_some() => break,
            r => r?,
        };
        let n = c.rows().len();
        if n as f64 >= 0.7 * rows as f64 {
            return Ok(c);
        }
        let growth = c
            .sorted_lengths(label)
            .ok()
            .and_then(|l| entropy_from_lengths(&l, cap).ok())
            .map(|f| f.delta.max(0.1));
        let step = match growth {
            Some(d) => ((rows as f64 / n.max(1) as f64).ln() / d).clamp(0.5, 3.0),
            None => 2.0,
        };
        cap += step;
        last = Some(c);
    }
    last.ok_or_else(|| Error::InsufficientData(format!("no census for {label}")))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub height: f64,
    pub delta: f64,
    pub stderr: f64,
    pub i: f64,
    pub j: f64,
    pub boundary_mass: f64,
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub census: Census,
    pub rows: Vec<SweepRow>,
    /// Radius of the window behind each boundary-mass value.
    pub mass_radii: Vec<f64>,
}

/// Entropy, intersections with the Fuchsian point and boundary mass along
/// the configured ray grid. Entropy and intersections come from the shared
/// Fuchsian-driven census; each boundary mass comes from a census driven by
/// its own ray point, so that the crossing classes stay inside the window
/// as the cylinder grows.
pub fn graft_sweep(setup: &Setup) -> Result<Sweep> {
    let grid = setup.config.ray_grid.clone();
    let (census, labels) = setup.ray_census(&grid)?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut mass_radii = Vec::with_capacity(grid.len());
    for (&t, label) in grid.iter().zip(&labels) {
        let fit = entropy_estimate(&census, label)?;
        let mc = setup.label_census(t, setup.config.mass_rows)?;
        mass_radii.push(mc.radius(label)?);
        rows.push(SweepRow {
            t,
            height: setup.height(t),
            delta: fit.delta,
            stderr: fit.stderr,
            i: intersection_i(&census, FUCHSIAN_LABEL, label)?,
            j: normalized_j(&census, FUCHSIAN_LABEL, label)?,
            boundary_mass: boundary_mass(&mc, label)?,
        });
    }
    Ok(Sweep { census, rows, mass_radii })
}

/// The ray `[0, pressure_end]` on the `fd_step` grid, in one census.
#[derive(Clone, Debug)]
pub struct RayPath {
    pub census: Census,
    pub path: PathSample,
}

pub fn ray_path(setup: &Setup) -> Result<RayPath> {
    let h = setup.config.fd_step;
    let n = (setup.config.pressure_end / h).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let (census, labels) = setup.ray_census(&grid)?;
    Ok(RayPath { census, path: PathSample::new(grid, labels)? })
}

impl RayPath {
    /// The sub-path on `[0, t_end]`.
    pub fn truncated(&self, t_end: f64) -> Result<PathSample> {
        let g = self.path.grid();
        let k = g.iter().position(|&t| (t - t_end).abs() < 1e-9).ok_or_else(|| {
            Error::GridMismatch(format!("{t_end} is not a node of the ray grid"))
        })?;
        PathSample::new(g[..=k].to_vec(), self.path.labels()[..=k].to_vec())
    }

    pub fn entropy_derivatives(&self, nodes: &[f64]) -> Result<Vec<(f64, EntropyDerivative)>> {
        nodes.iter().map(|&t| Ok((t, entropy_derivative_residual(&self.census, &self.path, t)?))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PantsRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    pub stderr: f64,
    pub r1: f64,
    pub k_hat: f64,
    pub k_lower: f64,
    pub gap_product: f64,
    pub gap_reference: f64,
}

pub fn pants_entropy(cfg: &ExperimentConfig) -> Result<Vec<PantsRow>> {
    let ps = &cfg.pants;
    ps.c.iter()
        .map(|&c| {
            let p = PantsParams::new(ps.a, ps.b, c)?;
            let fam = pants_family(&p, cfg.d)?;
            let census = build_census(&fam, &CensusOptions::capped(ps.max_word_len, ps.length_cap))?;
            let diag = pants_diagnostics(&census, &p)?;
            Ok(PantsRow {
                a: ps.a,
                b: ps.b,
                c,
                delta: diag.fit.delta,
                stderr: diag.fit.stderr,
                r1: diag.fit.r1,
                k_hat: diag.k_hat,
                k_lower: diag.k_lower,
                gap_product: diag.gap_product,
                gap_reference: diag.gap_reference,
            })
        })
        .collect()
}

/// Unit vectors `(e_k - e_{k+1})/√2` spanning the Cartan subspace.
pub fn cartan_basis(d: usize) -> Vec<CartanVec> {
    (0..d - 1)
        .map(|k| {
            let mut v = vec![0.0; d];
            v[k] = std::f64::consts::FRAC_1_SQRT_2;
            v[k + 1] = -std::f64::consts::FRAC_1_SQRT_2;
            CartanVec::traceless_projection(&v)
        })
        .collect()
}

/// Largest ratio `‖Dλ(ρ_z(γ))‖ / ι(γ, γ*)` over rows with `ι ≥ 1`, where
/// `Dλ` is the central-difference Jacobian of the Jordan projection in the
/// Cartan directions at `z` and the norm is the operator norm.
pub fn derivative_bound(setup: &Setup, rows: &[CensusRow], z: &CartanVec, step: f64) -> Result<f64> {
    let d = setup.config.d;
    let basis = cartan_basis(d);
    let pairs = basis
        .iter()
        .map(|e| {
            let plus = setup.grafted_at(z.add(&e.scale(step)))?;
            let minus = setup.grafted_at(z.add(&e.scale(-step)))?;
            Ok((plus, minus))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0.0f64;
    for row in rows.iter().filter(|r| r.iota >= 1) {
        let mut jac = DMatrix::zeros(d, d - 1);
        for (k, (p, m)) in pairs.iter().enumerate() {
            let lp = p.rep().jordan(&row.word)?;
            let lm = m.rep().jordan(&row.word)?;
            for i in 0..d {
                jac[(i, k)] = (lp.as_slice()[i] - lm.as_slice()[i]) / (2.0 * step);
            }
        }
        let norm = jac.singular_values().max();
        best = best.max(norm / row.iota as f64);
    }
    Ok(best)
}

/// Largest difference between the Finsler lengths under the graft by `s·u`
/// (`u` the shearing direction) and the hyperbolic lengths of the surface
/// re-glued with twist `twist + s`.
pub fn twist_graft_defect(setup: &Setup, rows: &[CensusRow], s: f64) -> Result<f64> {
    let (p1, p2) = setup.config.tori()?;
    let twisted = glue_genus2(&p1, &p2, setup.config.twist + s)?;
    let g = setup.grafted_at(special_direction(setup.config.d).scale(s))?;
    let mut worst = 0.0f64;
    for r in rows {
        let a = g.rep().finsler_length(&r.word, &setup.alpha)?;
        worst = worst.max((a - twisted.rep.length(&r.word)).abs());
    }
    Ok(worst)
}

/// `λ₁` of `⋀^k` from the product of exterior powers of the generator
/// images, against `λ₁ + … + λ_k` of the product itself; the largest
/// discrepancy over all words and all `k` with `C(d, k) ≤ 8`.
pub fn exterior_power_defect(rep: &LinearRep, words: &[Word]) -> Result<f64> {
    let d = rep.dim();
    let mut powers = Vec::new();
    for k in 1..d {
        let n = crate::lie::k_subsets(d, k).len();
        if n > MAX_DIM {
            continue;
        }
        let conv = |g: &MatD| exterior_power(g, k).map(|m| MatD::from_dmatrix(&m));
        let gens = rep.generators().iter().map(conv).collect::<Result<Vec<_>>>()?;
        let inv = rep.inverse_generators().iter().map(conv).collect::<Result<Vec<_>>>()?;
        powers.push((k, LinearRep::with_inverses(gens, inv)));
    }
    let mut worst = 0.0f64;
    for w in words {
        let lam = rep.jordan(w)?;
        for (k, pk) in &powers {
            let lhs = pk.jordan(w)?.as_slice()[0];
            let rhs: f64 = lam.as_slice()[..*k].iter().sum();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Brute-force conjugacy classes of cyclically reduced words of length at
/// most `max_len`, grouped by spectral fingerprints under the auxiliaries
/// with the given seeds. No Dehn reduction is involved.
pub fn fingerprint_oracle(p: &Presentation, max_len: usize, seeds: &[u64]) -> Result<Vec<Vec<Word>>> {
    let mut words = Vec::new();
    walk_reduced_words(p, max_len, (), &mut |_, _| Some(()), &mut |buf, _| {
        let w = Word::from_letters(buf.to_vec());
        if w.is_cyclically_reduced() {
            words.push(w);
        }
    });
    let fp = Fingerprinter::seeded(p, seeds)?;
    let merged = fp.merge(words)?;
    let mut classes: Vec<Vec<Word>> = merged.kept.iter().map(|w| vec![w.clone()]).collect();
    let index: std::collections::HashMap<Word, usize> =
        merged.kept.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    for (gone, kept) in merged.merged {
        classes[index[&kept]].push(gone);
    }
    Ok(classes)
}

/// Whether [`enumerate_classes`] and [`fingerprint_oracle`] describe the
/// same classes: equal counts and one canonical word in every oracle class.
pub fn oracle_agrees(p: &Presentation, max_len: usize, seeds: &[u64]) -> Result<(bool, usize, usize)> {
    let canon = enumerate_classes(p, max_len)?;
    let oracle = fingerprint_oracle(p, max_len, seeds)?;
    let canon_set: std::collections::HashSet<&Word> = canon.iter().collect();
    let one_each = oracle.iter().all(|cls| cls.iter().filter(|w| canon_set.contains(w)).count() == 1);
    Ok((one_each && canon.len() == oracle.len(), canon.len(), oracle.len()))
}
