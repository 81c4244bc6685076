//! Spectral fingerprints of conjugacy classes under seeded auxiliary
//! representations into `SL(3,R)`.
//!
//! Fuchsian traces cannot separate a class from its inverse, so the genus-2
//! auxiliaries are Fuchsian representations pushed through `τ₃` and then
//! bent along both handles and grafted along the separating curve with
//! generic Cartan parameters. Free groups use random `SL(3,R)` generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fuchsian::{glue_genus2, TorusParams};
use crate::grafting::{bend_generator, hitchin_base, GraftDatum, GraftedRep};
use crate::group::{shortlex, Presentation, PresentationKind, Splitting, Word};
use crate::lie::{CartanVec, LinearRep, MatD};

pub const FINGERPRINT_SEEDS: [u64; 2] = [0x6a09_e667_f3bc_c908, 0xbb67_ae85_84ca_a73b];

/// Rounding applied to fingerprint coordinates.
pub const FINGERPRINT_QUANTUM: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Fingerprinter {
    reps: Vec<LinearRep>,
}

/// Outcome of merging words by fingerprint.
#[derive(Clone, Debug, Default)]
pub struct MergeResult {
    /// One representative per fingerprint class, the shortlex-least.
    pub kept: Vec<Word>,
    /// `(dropped, kept)` pairs.
    pub merged: Vec<(Word, Word)>,
}

impl Fingerprinter {
    pub fn standard(p: &Presentation) -> Result<Self> {
        Self::seeded(p, &FINGERPRINT_SEEDS)
    }

    pub fn seeded(p: &Presentation, seeds: &[u64]) -> Result<Self> {
        let reps = seeds
            .iter()
            .map(|&s| match p.kind() {
                PresentationKind::Genus2 => generic_genus2_rep(s),
                PresentationKind::Free => Ok(random_free_rep(p.rank(), s)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Fingerprinter { reps })
    }

    pub fn reps(&self) -> &[LinearRep] {
        &self.reps
    }

    /// Jordan projections under every auxiliary, evaluated on the least
    /// cyclic rotation so that rotations of a word agree bit for bit.
    pub fn raw(&self, w: &Word) -> Result<Vec<f64>> {
        let v = w.min_rotation();
        let mut out = Vec::with_capacity(3 * self.reps.len());
        for r in &self.reps {
            out.extend_from_slice(r.jordan(&v)?.as_slice());
        }
        Ok(out)
    }

    /// Jordan projections under every auxiliary, rounded to 1e-9.
    pub fn fingerprint(&self, w: &Word) -> Result<Vec<f64>> {
        Ok(self.raw(w)?.into_iter().map(quantize).collect())
    }

    /// Merges words whose fingerprints agree coordinatewise within
    /// `1e-9 · max(1, |x|)`.
    pub fn merge(&self, words: Vec<Word>) -> Result<MergeResult> {
        let fps = words.iter().map(|w| self.raw(w)).collect::<Result<Vec<_>>>()?;
        Ok(merge_by_fingerprint(words, &fps))
    }
}

pub fn quantize(x: f64) -> f64 {
    (x / FINGERPRINT_QUANTUM).round() * FINGERPRINT_QUANTUM
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= FINGERPRINT_QUANTUM * a.abs().max(1.0)
}

pub fn merge_by_fingerprint(words: Vec<Word>, fps: &[Vec<f64>]) -> MergeResult {
    let n = words.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| fps[i][0].total_cmp(&fps[j][0]).then_with(|| shortlex(&words[i], &words[j])));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..n {
        let i = order[a];
        for &j in &order[a + 1..] {
            if !close(fps[i][0], fps[j][0]) {
                break;
            }
            if fps[i].iter().zip(&fps[j]).all(|(x, y)| close(*x, *y)) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    // root is the shortlex-least member
                    if shortlex(&words[ri], &words[rj]).is_le() {
                        parent[rj] = ri;
                    } else {
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let mut result = MergeResult::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        if r == i {
            result.kept.push(words[i].clone());
        } else {
            result.merged.push((words[i].clone(), words[r].clone()));
        }
    }
    result
}

fn random_cartan(rng: &mut ChaCha8Rng, scale: f64) -> CartanVec {
    let a = rng.gen_range(-scale..scale);
    let b = rng.gen_range(-scale..scale);
    CartanVec::traceless_projection(&[a, b, -a - b])
}

/// A Fuchsian genus-2 representation with random trace coordinates, pushed
/// to `SL(3,R)`, bent in both handles and grafted along the separating curve.
pub fn generic_genus2_rep(seed: u64) -> Result<LinearRep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boundary = rng.gen_range(3.0..6.0);
    let torus = |rng: &mut ChaCha8Rng| loop {
        let x = rng.gen_range(2.5..5.0);
        let y = rng.gen_range(2.5..5.0);
        if let Ok(t) = TorusParams::with_boundary(x, y, boundary) {
            return t;
        }
    };
    let p1 = torus(&mut rng);
    let p2 = torus(&mut rng);
    let twist = rng.gen_range(-1.0..1.0);
    let surface = glue_genus2(&p1, &p2, twist)?;
    let mut rep = hitchin_base(&surface, 3)?;
    // (axis, target): b ← b·Z(a), then a ← a·Z(b), for each handle
    for (axis, target) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
        let z = random_cartan(&mut rng, 0.6);
        rep = bend_generator(&rep, axis, target, &z)?;
    }
    let z = random_cartan(&mut rng, 0.6);
    let g = GraftedRep::new(&rep, &Splitting::genus2_separating(), GraftDatum::new(z))?;
    Ok(g.rep().balanced())
}

/// Random generators of `SL(3,R)`.
pub fn random_free_rep(rank: usize, seed: u64) -> LinearRep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens: Vec<MatD> = (0..rank)
        .map(|_| loop {
            let entries: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = MatD::from_fn(3, |i, j| entries[3 * i + j] + if i == j { 1.0 } else { 0.0 });
            let det = m.determinant();
            if det.abs() < 0.05 {
                continue;
            }
            let s = det.abs().cbrt();
            let sign = if det < 0.0 { -1.0 } else { 1.0 };
            break MatD::from_fn(3, |i, j| m.get(i, j) / s * sign);
        })
        .collect();
    LinearRep::new(gens).expect("nonsingular generators")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_inverses_and_respects_conjugacy() {
        let p = Presentation::genus2();
        let f = Fingerprinter::standard(&p).unwrap();
        let w = Word::parse("acB").unwrap();
        let x = f.fingerprint(&w).unwrap();
        let y = f.fingerprint(&w.inverse()).unwrap();
        assert!(x.iter().zip(&y).any(|(a, b)| (a - b).abs() > 1e-6));
        let z = f.raw(&w.rotate(1)).unwrap();
        assert!(f.raw(&w).unwrap().iter().zip(&z).all(|(a, b)| close(*a, *b)));
        let conj = Word::parse("d").unwrap().concat(&w).concat(&Word::parse("D").unwrap());
        let z = f.raw(&conj).unwrap();
        assert!(f.raw(&w).unwrap().iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-7));
    }

    #[test]
    fn relator_is_trivial_for_auxiliaries() {
        for s in FINGERPRINT_SEEDS {
            let r = generic_genus2_rep(s).unwrap();
            let m = r.eval(&Presentation::genus2().relators()[0]).unscaled();
            assert!(m.max_abs_diff(&MatD::identity(3)) < 1e-8);
        }
    }

    #[test]
    fn merge_keeps_shortlex_least() {
        let words: Vec<Word> = ["ab", "c", "ba"].iter().map(|s| Word::parse(s).unwrap()).collect();
        let fps = vec![vec![1.0, 2.0], vec![3.0, 0.0], vec![1.0 + 1e-12, 2.0]];
        let m = merge_by_fingerprint(words, &fps);
        assert_eq!(m.kept.len(), 2);
        assert_eq!(m.merged, vec![(Word::parse("ba").unwrap(), Word::parse("ab").unwrap())]);
    }
}
