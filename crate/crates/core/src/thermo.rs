//! Census estimators: entropy, the intersection forms I and J, their
//! derivatives along one-parameter families, pressure speeds and lengths,
//! and the grafting-curve mass of the normalized equilibrium current.

use crate::census::{Census, RepFamily, FUCHSIAN_LABEL};
use crate::error::{Error, Result};
use crate::fuchsian::{PantsParams, Sl2Rep};
use crate::group::{Factor, Presentation, Splitting};

/// Minimum number of rows inside the window for an entropy fit.
pub const MIN_FIT_ROWS: usize = 50;
/// Number of sample radii in the entropy window.
pub const FIT_SAMPLES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyFit {
    pub delta: f64,
    pub stderr: f64,
    pub r0: f64,
    pub r1: f64,
    pub samples: usize,
}

/// Neumaier-compensated sum in iteration order.
pub fn stable_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Ordinary least squares `y ≈ a + b x`; returns `(b, a, stderr(b))`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = stable_sum(x.iter().copied()) / n;
    let my = stable_sum(y.iter().copied()) / n;
    let sxx = stable_sum(x.iter().map(|v| (v - mx).powi(2)));
    let sxy = stable_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse = stable_sum(x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)));
    let se = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (b, a, se)
}

/// Slope of `log N(R)` on `[r1/2, r1]` from ascending lengths.
pub fn entropy_from_lengths(sorted: &[f64], r1: f64) -> Result<EntropyFit> {
    let inside = sorted.partition_point(|&l| l <= r1);
    if inside < MIN_FIT_ROWS || !(r1 > 0.0) {
        return Err(Error::InsufficientData(format!("{inside} classes within radius {r1:.3}, need {MIN_FIT_ROWS}")));
    }
    let r0 = r1 / 2.0;
    let mut xs = Vec::with_capacity(FIT_SAMPLES);
    let mut ys = Vec::with_capacity(FIT_SAMPLES);
    for i in 0..FIT_SAMPLES {
        let r = r0 + (r1 - r0) * i as f64 / (FIT_SAMPLES - 1) as f64;
        let n = sorted.partition_point(|&l| l <= r);
        if n > 0 {
            xs.push(r);
            ys.push((n as f64).ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!("empty window [{r0:.3}, {r1:.3}]")));
    }
    let (delta, _, stderr) = linear_fit(&xs, &ys);
    if !(delta > 0.0) {
        return Err(Error::InsufficientData(format!("non-positive growth rate {delta} on [{r0:.3}, {r1:.3}]")));
    }
    Ok(EntropyFit { delta, stderr, r0, r1, samples: xs.len() })
}

pub fn entropy_estimate(c: &Census, label: &str) -> Result<EntropyFit> {
    entropy_from_lengths(&c.sorted_lengths(label)?, c.radius(label)?)
}

/// Entropy fit on the window `[r/2, r]`, with `r` clamped to the label's
/// radius.
pub fn entropy_at(c: &Census, label: &str, r: f64) -> Result<EntropyFit> {
    entropy_from_lengths(&c.sorted_lengths(label)?, r.min(c.radius(label)?))
}

/// Mean of `ℓ_to / ℓ_from` over classes with `ℓ_from` inside its radius.
pub fn intersection_i(c: &Census, from: &str, to: &str) -> Result<f64> {
    intersection_i_at(c, from, to, f64::INFINITY)
}

/// As [`intersection_i`] over `ℓ_from ≤ min(r, radius(from))`.
pub fn intersection_i_at(c: &Census, from: &str, to: &str, r: f64) -> Result<f64> {
    let (fi, ti) = (c.label_index(from)?, c.label_index(to)?);
    let rows = c.window_at(from, r)?;
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no classes in the window of {from:?}")));
    }
    let s = stable_sum(rows.iter().map(|r| r.l_f[ti] / r.l_f[fi]));
    Ok(s / rows.len() as f64)
}

/// `J = (δ(to)/δ(from)) · I(from, to)`.
pub fn normalized_j(c: &Census, from: &str, to: &str) -> Result<f64> {
    normalized_j_at(c, from, to, f64::INFINITY)
}

/// As [`normalized_j`] with every fit and average on a window of radius at
/// most `r`.
pub fn normalized_j_at(c: &Census, from: &str, to: &str, r: f64) -> Result<f64> {
    if from == to {
        return Ok(1.0);
    }
    let df = entropy_at(c, from, r)?.delta;
    let dt = entropy_at(c, to, r)?.delta;
    Ok(dt / df * intersection_i_at(c, from, to, r)?)
}

/// Census labels attached to an evenly spaced parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    grid: Vec<f64>,
    labels: Vec<String>,
    h: f64,
}

impl PathSample {
    pub fn new(grid: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if grid.len() != labels.len() || grid.len() < 2 {
            return Err(Error::GridMismatch("need at least two nodes, one label per node".into()));
        }
        let h = grid[1] - grid[0];
        if !(h > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
            return Err(Error::GridMismatch("grid must be strictly increasing with constant spacing".into()));
        }
        Ok(PathSample { grid, labels, h })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    fn index(&self, t: f64) -> Result<usize> {
        self.grid
            .iter()
            .position(|&g| (g - t).abs() <= 1e-9 * self.h)
            .ok_or_else(|| Error::GridMismatch(format!("t = {t} is not a grid node")))
    }

    fn interior(&self, t: f64) -> Result<usize> {
        let i = self.index(t)?;
        if i == 0 || i + 1 == self.grid.len() {
            return Err(Error::GridMismatch(format!("t = {t} has no neighbours on both sides")));
        }
        Ok(i)
    }
}

/// Second difference of `k ↦ f(i, i+k)` at `k = 0` with `f(i,i) = 1`, in
/// units of the grid step; Richardson-extrapolated when `i ± 2` exist.
fn second_difference(n: usize, i: usize, h: f64, f: &dyn Fn(usize, usize) -> Result<f64>) -> Result<f64> {
    let d1 = (f(i, i + 1)? - 2.0 + f(i, i - 1)?) / (h * h);
    if i >= 2 && i + 2 < n {
        let d2 = (f(i, i + 2)? - 2.0 + f(i, i - 2)?) / (4.0 * h * h);
        Ok((4.0 * d1 - d2) / 3.0)
    } else {
        Ok(d1)
    }
}

/// Largest radius inside every node's completeness radius. All path
/// estimators fit and average on this one window so that neighbouring nodes
/// are compared on equal terms.
pub fn path_radius(c: &Census, path: &PathSample) -> Result<f64> {
    path.labels.iter().map(|l| c.radius(l)).try_fold(f64::INFINITY, |m, r| Ok(m.min(r?)))
}

/// Central difference of `s ↦ I(ρ_t, ρ_{t+s})` at `s = 0`.
pub fn di_path(c: &Census, path: &PathSample, t: f64, order: u8) -> Result<f64> {
    let i = path.interior(t)?;
    let l = &path.labels;
    let r = path_radius(c, path)?;
    let ii = |a: usize, b: usize| intersection_i_at(c, &l[a], &l[b], r);
    match order {
        1 => Ok((ii(i, i + 1)? - ii(i, i - 1)?) / (2.0 * path.h)),
        2 => second_difference(l.len(), i, path.h, &ii),
        _ => Err(Error::InvalidArgument(format!("derivative order {order} is not 1 or 2"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyDerivative {
    pub residual: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub di: f64,
}

/// `|δ'(t) + δ(t) · dI|` with `δ'` the central difference of entropy fits.
pub fn entropy_derivative_residual(c: &Census, path: &PathSample, t: f64) -> Result<EntropyDerivative> {
    let i = path.interior(t)?;
    let l = &path.labels;
    let r = path_radius(c, path)?;
    let delta = entropy_at(c, &l[i], r)?.delta;
    let dp = (entropy_at(c, &l[i + 1], r)?.delta - entropy_at(c, &l[i - 1], r)?.delta) / (2.0 * path.h);
    let di = di_path(c, path, t, 1)?;
    Ok(EntropyDerivative { residual: (dp + delta * di).abs(), delta, delta_prime: dp, di })
}

fn j_between(c: &Census, path: &PathSample, a: usize, b: usize) -> Result<f64> {
    normalized_j_at(c, &path.labels[a], &path.labels[b], path_radius(c, path)?)
}

/// Second derivative of `s ↦ J(ρ_t, ρ_{t+s})` at `s = 0`. At the ends of the
/// grid a one-sided difference is used.
pub fn pressure_form(c: &Census, path: &PathSample, t: f64) -> Result<f64> {
    let i = path.index(t)?;
    let n = path.grid.len();
    let h = path.h;
    let j = |a: usize, b: usize| j_between(c, path, a, b);
    if i > 0 && i + 1 < n {
        second_difference(n, i, h, &j)
    } else if n < 3 {
        Err(Error::GridMismatch("pressure form needs three nodes".into()))
    } else if i == 0 {
        Ok((j(0, 2)? - 2.0 * j(0, 1)? + 1.0) / (h * h))
    } else {
        Ok((j(i, i - 2)? - 2.0 * j(i, i - 1)? + 1.0) / (h * h))
    }
}

pub fn pressure_speed(c: &Census, path: &PathSample, t: f64) -> Result<f64> {
    Ok(pressure_form(c, path, t)?.max(0.0).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureLength {
    /// `(t, speed, cumulative length)` per node.
    pub nodes: Vec<(f64, f64, f64)>,
    pub length: f64,
    pub upper_bound: f64,
}

/// Derivative of `s ↦ I(ρ_t, ρ_{t+s})` at node `i`, central inside the grid
/// and second-order one-sided at its ends.
fn di_node(c: &Census, path: &PathSample, i: usize, order: u8) -> Result<f64> {
    let n = path.grid.len();
    if i > 0 && i + 1 < n {
        return di_path(c, path, path.grid[i], order);
    }
    let l = &path.labels;
    let r = path_radius(c, path)?;
    let (k1, k2, sign) = if i == 0 { (1, 2, 1.0) } else { (n - 2, n - 3, -1.0) };
    let i1 = intersection_i_at(c, &l[i], &l[k1], r)?;
    let i2 = intersection_i_at(c, &l[i], &l[k2], r)?;
    match order {
        1 => Ok(sign * (-3.0 + 4.0 * i1 - i2) / (2.0 * path.h)),
        2 => Ok((1.0 - 2.0 * i1 + i2) / (path.h * path.h)),
        _ => Err(Error::InvalidArgument(format!("derivative order {order} is not 1 or 2"))),
    }
}

/// Trapezoidal pressure length and the bound
/// `√(b−a) · (−I'_b + I'_a + ∫ I'')^{1/2}` over the whole grid.
pub fn pressure_length(c: &Census, path: &PathSample) -> Result<PressureLength> {
    let n = path.grid.len();
    if n < 3 {
        return Err(Error::GridMismatch("pressure length needs three nodes".into()));
    }
    let speeds = path.grid.iter().map(|&t| pressure_speed(c, path, t)).collect::<Result<Vec<_>>>()?;
    let mut nodes = Vec::with_capacity(n);
    let mut cum = 0.0;
    for k in 0..n {
        if k > 0 {
            cum += 0.5 * (speeds[k] + speeds[k - 1]) * path.h;
        }
        nodes.push((path.grid[k], speeds[k], cum));
    }
    let (a, b) = (path.grid[0], path.grid[n - 1]);
    let d1a = di_node(c, path, 0, 1)?;
    let d1b = di_node(c, path, n - 1, 1)?;
    let d2 = (0..n).map(|k| di_node(c, path, k, 2)).collect::<Result<Vec<_>>>()?;
    let integral = stable_sum(d2.windows(2).map(|w| 0.5 * (w[0] + w[1]) * path.h));
    let upper_bound = ((b - a) * (-d1b + d1a + integral).max(0.0)).sqrt();
    Ok(PressureLength { nodes, length: cum, upper_bound })
}

/// Mean of `ι(γ, γ*) / ℓ_label(γ)` over the label's window.
pub fn boundary_mass(c: &Census, label: &str) -> Result<f64> {
    let i = c.label_index(label)?;
    let rows = c.window(label)?;
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no classes in the window of {label:?}")));
    }
    Ok(stable_sum(rows.iter().map(|r| r.iota as f64 / r.l_f[i])) / rows.len() as f64)
}

/// Mean of `ι · height / ℓ_label` over the same window; equals
/// `height · boundary_mass`.
pub fn flat_mass_proxy(c: &Census, label: &str, height: f64) -> Result<f64> {
    let i = c.label_index(label)?;
    let rows = c.window(label)?;
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no classes in the window of {label:?}")));
    }
    Ok(stable_sum(rows.iter().map(|r| r.iota as f64 * height / r.l_f[i])) / rows.len() as f64)
}

/// Family for one factor of the splitting, as a free group of rank two with
/// the restricted Fuchsian representation.
pub fn factor_family(surface: &Sl2Rep, splitting: &Splitting, factor: Factor, d: usize) -> Result<RepFamily> {
    let gens = splitting.factor_generators(factor).iter().map(|&g| surface.generators()[g]).collect();
    RepFamily::new(Presentation::free(2), None, Sl2Rep::new(gens), d)
}

pub fn pants_family(p: &PantsParams, d: usize) -> Result<RepFamily> {
    RepFamily::new(Presentation::free(2), None, crate::fuchsian::pants_rep(p)?, d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PantsDiagnostics {
    pub fit: EntropyFit,
    /// Shortest census class that is not a power of a boundary curve.
    pub k_hat: f64,
    pub k_lower: f64,
    /// `δ̂ · max(a, b, c)` against `log(2)/4`; reported, never asserted.
    pub gap_product: f64,
    pub gap_reference: f64,
}

/// Entropy fit plus the interior-systole diagnostics for a pants census
/// built from [`pants_family`].
pub fn pants_diagnostics(c: &Census, p: &PantsParams) -> Result<PantsDiagnostics> {
    let fit = entropy_estimate(c, FUCHSIAN_LABEL)?;
    let boundary: Vec<crate::group::Word> =
        ["a", "b", "ab"].iter().map(|s| crate::group::Word::parse(s)).collect::<Result<_>>()?;
    let p2 = Presentation::free(2);
    let is_boundary_power = |w: &crate::group::Word| {
        boundary.iter().any(|b| {
            (1..=w.len()).any(|n| {
                let bp = crate::group::canonicalize_conjugacy(&b.pow(n), &p2);
                let bi = crate::group::canonicalize_conjugacy(&b.inverse().pow(n), &p2);
                &bp == w || &bi == w
            })
        })
    };
    let k_hat = c
        .rows()
        .iter()
        .filter(|r| !is_boundary_power(&r.word))
        .map(|r| r.l_hyp)
        .fold(f64::INFINITY, f64::min);
    let k_lower = p.max_length();
    Ok(PantsDiagnostics { fit, k_hat, k_lower, gap_product: fit.delta * k_lower, gap_reference: 0.25 * 2f64.ln() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::CensusRow;
    use crate::group::Word;

    fn synthetic(lengths: &[Vec<f64>], labels: &[&str], r_star: f64, iota: &[u32]) -> Census {
        let rows = lengths
            .iter()
            .zip(iota)
            .enumerate()
            .map(|(i, (l, &k))| CensusRow {
                word: Word::parse(&"a".repeat(i + 1)).unwrap(),
                wlen: i + 1,
                l_hyp: l[0],
                l_f: l.clone(),
                iota: k,
                fingerprint: String::new(),
            })
            .collect();
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let radii = vec![r_star; labels.len()];
        Census::from_parts(labels, rows, r_star, radii).unwrap()
    }

    /// Lengths with `N(R) = ⌈e^R⌉`: the k-th class (1-based) sits at `ln k`
    /// rounded up to where the ceiling first reaches k.
    fn exponential_lengths(r_max: f64) -> Vec<f64> {
        let n = r_max.exp().ceil() as usize;
        (1..=n).map(|k| ((k - 1) as f64).ln().max(0.0) + 1e-12).collect()
    }

    #[test]
    fn exact_exponential_gives_unit_entropy() {
        let l = exponential_lengths(12.0);
        let fit = entropy_from_lengths(&l, 12.0).unwrap();
        assert!((fit.delta - 1.0).abs() <= 0.02, "{fit:?}");
        assert_eq!(fit.samples, FIT_SAMPLES);
    }

    #[test]
    fn too_few_rows() {
        let l: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert!(matches!(entropy_from_lengths(&l, 9.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn intersection_of_label_with_itself_is_one() {
        let ls: Vec<Vec<f64>> = (1..100).map(|k| vec![k as f64 * 0.1, k as f64 * 0.2]).collect();
        let c = synthetic(&ls, &["x", "y"], 10.0, &vec![0; 99]);
        assert_eq!(intersection_i(&c, "x", "x").unwrap(), 1.0);
        assert!((intersection_i(&c, "x", "y").unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn intersection_is_a_mean() {
        let ls: Vec<Vec<f64>> = (1..60).map(|k| vec![k as f64 * 0.1, (k as f64 * 0.1).powf(1.3)]).collect();
        let doubled: Vec<Vec<f64>> = ls.iter().flat_map(|l| [l.clone(), l.clone()]).collect();
        let a = synthetic(&ls, &["x", "y"], 5.0, &vec![0; ls.len()]);
        let b = synthetic(&doubled, &["x", "y"], 5.0, &vec![0; doubled.len()]);
        let (ia, ib) = (intersection_i(&a, "x", "y").unwrap(), intersection_i(&b, "x", "y").unwrap());
        assert!((ia - ib).abs() < 1e-12);
    }

    #[test]
    fn j_is_scale_invariant() {
        let base = exponential_lengths(9.0);
        let mk = |s: f64| {
            let ls: Vec<Vec<f64>> = base.iter().map(|&l| vec![l, 1.3 * l + 0.01 * (l * 7.0).sin().abs()]).collect();
            let ls: Vec<Vec<f64>> = ls.into_iter().map(|v| vec![v[0] * s, v[1] * s]).collect();
            let n = ls.len();
            let mut c = synthetic(&ls, &["x", "y"], 9.0 * s, &vec![0; n]);
            let r = 9.0 * s;
            c = Census::from_parts(c.labels().to_vec(), c.rows().to_vec(), r, vec![r, r]).unwrap();
            c
        };
        let (j1, j2) = (normalized_j(&mk(1.0), "x", "y").unwrap(), normalized_j(&mk(2.5), "x", "y").unwrap());
        assert!((j1 - j2).abs() < 1e-12, "{j1} {j2}");
    }

    #[test]
    fn constant_path_has_zero_derivatives_and_speed() {
        let ls: Vec<Vec<f64>> = exponential_lengths(8.0).iter().map(|&l| vec![l; 5]).collect();
        let n = ls.len();
        let labels = ["p0", "p1", "p2", "p3", "p4"];
        let c = synthetic(&ls, &labels, 8.0, &vec![1; n]);
        let path = PathSample::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], labels.iter().map(|s| s.to_string()).collect()).unwrap();
        for t in [0.25, 0.5, 0.75] {
            assert_eq!(di_path(&c, &path, t, 1).unwrap(), 0.0);
            assert_eq!(di_path(&c, &path, t, 2).unwrap(), 0.0);
            assert!(entropy_derivative_residual(&c, &path, t).unwrap().residual < 1e-12);
        }
        let pl = pressure_length(&c, &path).unwrap();
        assert_eq!((pl.length, pl.upper_bound), (0.0, 0.0));
        assert!(matches!(di_path(&c, &path, 0.0, 1), Err(Error::GridMismatch(_))));
        assert!(matches!(di_path(&c, &path, 0.3, 1), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn uneven_grid_rejected() {
        let l = vec!["a".to_string(), "b".into(), "c".into()];
        assert!(matches!(PathSample::new(vec![0.0, 1.0, 3.0], l), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn flat_mass_identity() {
        let ls: Vec<Vec<f64>> = (1..80).map(|k| vec![0.1 * k as f64]).collect();
        let iota: Vec<u32> = (1..80).map(|k| (k % 3) as u32).collect();
        let c = synthetic(&ls, &["x"], 6.0, &iota);
        let m = boundary_mass(&c, "x").unwrap();
        assert!((flat_mass_proxy(&c, "x", 2.5).unwrap() - 2.5 * m).abs() < 1e-12);
    }
}
