//! Tables of conjugacy classes with their lengths under a labelled family of
//! representations, the completeness radius below which counts are exact,
//! and CSV persistence.
//!
//! Two enumeration modes exist. The exact mode lists every class whose
//! canonical word has length ≤ `max_word_len`. The capped mode walks
//! Dehn-reduced words whose prefixes stay within `length_cap + margin` of a
//! balanced basepoint and keeps classes of hyperbolic length ≤ `length_cap`;
//! it reaches radii that exact enumeration cannot.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::fingerprint::{quantize, Fingerprinter};
use crate::fuchsian::{Mat2, Sl2Rep};
use crate::grafting::linear_from_sl2;
use crate::group::{
    canonicalize_conjugacy, enumerate_dehn_canonical, intersection_number, shortlex, Letter, Presentation, Splitting,
    Word,
};
use crate::lie::{jordan_projection_pair, Alpha0, LinearRep, MatD};

pub const CENSUS_MAGIC: &str = "hitchin-census,v1";
pub const FUCHSIAN_LABEL: &str = "fuchsian";

/// Default slack between the length cap and the prefix-displacement cap.
pub const DEFAULT_MARGIN: f64 = 7.0;

/// Two merged words whose hyperbolic lengths differ by more than this are
/// counted as a fingerprint collision and kept apart.
pub const COLLISION_TOL: f64 = 1e-6;

/// A group presentation with a Fuchsian representation and labelled
/// representations into `SL(d,R)`. The first label is always the Fuchsian
/// one pushed through `τ_d`.
#[derive(Clone, Debug)]
pub struct RepFamily {
    presentation: Presentation,
    splitting: Option<Splitting>,
    fuchsian: Sl2Rep,
    alpha: Alpha0,
    labels: Vec<(String, LinearRep)>,
}

impl RepFamily {
    pub fn new(presentation: Presentation, splitting: Option<Splitting>, fuchsian: Sl2Rep, d: usize) -> Result<Self> {
        if fuchsian.rank() != presentation.rank() {
            return Err(Error::InvalidArgument("representation rank differs from presentation".into()));
        }
        let alpha = Alpha0::standard(d)?;
        let base = linear_from_sl2(fuchsian.generators(), d)?;
        Ok(RepFamily { presentation, splitting, fuchsian, alpha, labels: vec![(FUCHSIAN_LABEL.to_string(), base)] })
    }

    pub fn add_label(&mut self, name: &str, rep: LinearRep) -> Result<()> {
        if self.labels.iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidArgument(format!("duplicate label {name:?}")));
        }
        if name.contains(',') || name.is_empty() {
            return Err(Error::InvalidArgument(format!("bad label {name:?}")));
        }
        if rep.dim() != self.alpha.dim() || rep.rank() != self.presentation.rank() {
            return Err(Error::InvalidArgument(format!("label {name:?} has the wrong shape")));
        }
        self.labels.push((name.to_string(), rep));
        Ok(())
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn splitting(&self) -> Option<&Splitting> {
        self.splitting.as_ref()
    }

    pub fn fuchsian(&self) -> &Sl2Rep {
        &self.fuchsian
    }

    pub fn alpha(&self) -> &Alpha0 {
        &self.alpha
    }

    pub fn labels(&self) -> &[(String, LinearRep)] {
        &self.labels
    }

    pub fn rep(&self, label: &str) -> Option<&LinearRep> {
        self.labels.iter().find(|(n, _)| n == label).map(|(_, r)| r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusRow {
    pub word: Word,
    pub wlen: usize,
    pub l_hyp: f64,
    /// Finsler lengths in label order.
    pub l_f: Vec<f64>,
    pub iota: u32,
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusOptions {
    pub max_word_len: usize,
    /// `None` for exact enumeration by word length.
    pub length_cap: Option<f64>,
    pub margin: f64,
    pub candidate_cap: u64,
    /// Label whose lengths the cap and the completeness radius refer to.
    pub driver: String,
}

impl CensusOptions {
    pub fn exact(max_word_len: usize) -> Self {
        CensusOptions {
            max_word_len,
            length_cap: None,
            margin: DEFAULT_MARGIN,
            candidate_cap: crate::group::DEFAULT_CANDIDATE_CAP,
            driver: FUCHSIAN_LABEL.to_string(),
        }
    }

    /// Capped census complete for the lengths of `label`.
    pub fn driven_by(self, label: &str) -> Self {
        CensusOptions { driver: label.to_string(), ..self }
    }

    pub fn capped(max_word_len: usize, length_cap: f64) -> Self {
        CensusOptions { length_cap: Some(length_cap), candidate_cap: 400_000_000, ..Self::exact(max_word_len) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Census {
    labels: Vec<String>,
    rows: Vec<CensusRow>,
    r_star: f64,
    radii: Vec<f64>,
    driver: usize,
    max_word_len: usize,
    length_cap: Option<f64>,
    collisions: usize,
    config_hash: String,
}

impl Census {
    /// Assembles a census from precomputed rows, e.g. synthetic length
    /// spectra. Rows are re-sorted by the first label.
    pub fn from_parts(labels: Vec<String>, mut rows: Vec<CensusRow>, r_star: f64, radii: Vec<f64>) -> Result<Census> {
        if labels.is_empty() || radii.len() != labels.len() {
            return Err(Error::InvalidArgument("labels and radii must be nonempty and aligned".into()));
        }
        if rows.iter().any(|r| r.l_f.len() != labels.len()) {
            return Err(Error::InvalidArgument("row length count differs from label count".into()));
        }
        rows.sort_by(|a, b| a.l_f[0].total_cmp(&b.l_f[0]).then_with(|| shortlex(&a.word, &b.word)));
        let max_word_len = rows.iter().map(|r| r.wlen).max().unwrap_or(0);
        Ok(Census {
            labels,
            rows,
            r_star,
            radii,
            driver: 0,
            max_word_len,
            length_cap: None,
            collisions: 0,
            config_hash: String::new(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[CensusRow] {
        &self.rows
    }

    /// Completeness radius for the driver label.
    pub fn r_star(&self) -> f64 {
        self.r_star
    }

    pub fn driver(&self) -> &str {
        &self.labels[self.driver]
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn length_cap(&self) -> Option<f64> {
        self.length_cap
    }

    pub fn collisions(&self) -> usize {
        self.collisions
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn set_config_hash(&mut self, h: &str) {
        self.config_hash = h.to_string();
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown label {label:?}")))
    }

    /// Completeness radius for counting by the given label's lengths.
    pub fn radius(&self, label: &str) -> Result<f64> {
        Ok(self.radii[self.label_index(label)?])
    }

    /// Lengths under a label, ascending.
    pub fn sorted_lengths(&self, label: &str) -> Result<Vec<f64>> {
        let i = self.label_index(label)?;
        let mut v: Vec<f64> = self.rows.iter().map(|r| r.l_f[i]).collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// `#{γ : ℓ_label(γ) ≤ r}` from the rows.
    pub fn count(&self, label: &str, r: f64) -> Result<usize> {
        let i = self.label_index(label)?;
        Ok(self.rows.iter().filter(|row| row.l_f[i] <= r).count())
    }

    /// Rows with `ℓ_label ≤ radius(label)`.
    pub fn window(&self, label: &str) -> Result<Vec<&CensusRow>> {
        self.window_at(label, self.radius(label)?)
    }

    /// Rows with `ℓ_label ≤ r`; `r` is clamped to the label's radius.
    pub fn window_at(&self, label: &str, r: f64) -> Result<Vec<&CensusRow>> {
        let i = self.label_index(label)?;
        let r = r.min(self.radii[i]);
        Ok(self.rows.iter().filter(|row| row.l_f[i] <= r).collect())
    }

    pub fn find(&self, w: &Word) -> Option<&CensusRow> {
        self.rows.iter().find(|r| &r.word == w)
    }
}

/// Forbidden subwords for linear Dehn pruning: every piece longer than half
/// of a cyclic relator.
fn long_pieces(p: &Presentation) -> HashSet<Vec<Letter>> {
    let mut out = HashSet::new();
    for r in p.relators() {
        let k = r.len() / 2 + 1;
        for base in [r.clone(), r.inverse()] {
            for j in 0..base.len() {
                out.insert(base.rotate(j).letters()[..k].to_vec());
            }
        }
    }
    out
}

/// A representation seen from a basepoint: prefix products, an upper bound
/// for the Finsler displacement of the basepoint, and translation lengths.
trait Walker {
    type State: Clone;
    fn identity(&self) -> Self::State;
    fn step(&self, s: &Self::State, l: Letter) -> Self::State;
    fn displacement(&self, s: &Self::State) -> f64;
    /// Translation length of a cyclically reduced word, or `None` when it
    /// certainly exceeds `cap`.
    fn length_within(&self, s: &Self::State, cap: f64) -> Result<Option<f64>>;
}

struct Sl2Walker {
    gens: Vec<Mat2>,
}

impl Walker for Sl2Walker {
    type State = Mat2;
    fn identity(&self) -> Mat2 {
        Mat2::IDENTITY
    }
    fn step(&self, s: &Mat2, l: Letter) -> Mat2 {
        let g = self.gens[l.index()];
        *s * if l.is_inverse() { g.adj() } else { g }
    }
    fn displacement(&self, s: &Mat2) -> f64 {
        // ‖P‖_F² = 2 cosh d(o, P o)
        (0.5 * s.frobenius_sq()).max(1.0).acosh()
    }
    fn length_within(&self, s: &Mat2, cap: f64) -> Result<Option<f64>> {
        let l = crate::fuchsian::sl2_translation_length(s);
        Ok((l <= cap * (1.0 + 1e-12)).then_some(l))
    }
}

struct LinearWalker {
    rep: LinearRep,
    alpha: Alpha0,
    /// `c_d · Σ_{w_i>0} w_i`, so that `F(κ(g)) ≤ bound · (ln‖g‖ + ln‖g⁻¹‖)`.
    bound: f64,
}

impl LinearWalker {
    fn new(rep: &LinearRep, alpha: &Alpha0) -> Self {
        let pos: f64 = alpha.weights().iter().filter(|w| **w > 0.0).sum();
        LinearWalker { rep: rep.balanced(), alpha: alpha.clone(), bound: alpha.normalization() * pos }
    }
}

impl Walker for LinearWalker {
    type State = (MatD, MatD);
    fn identity(&self) -> Self::State {
        let d = self.rep.dim();
        (MatD::identity(d), MatD::identity(d))
    }
    fn step(&self, s: &Self::State, l: Letter) -> Self::State {
        let mut g = &s.0 * self.rep.image(l);
        let mut gi = self.rep.image(l.inverse()) * &s.1;
        g.renormalize();
        gi.renormalize();
        (g, gi)
    }
    fn displacement(&self, s: &Self::State) -> f64 {
        self.bound * (s.0.log_frobenius() + s.1.log_frobenius())
    }
    fn length_within(&self, s: &Self::State, cap: f64) -> Result<Option<f64>> {
        let l = self.alpha.apply(jordan_projection_pair(&s.0, &s.1)?.as_slice());
        Ok((l <= cap * (1.0 + 1e-12)).then_some(l))
    }
}

struct Search<'a, W: Walker> {
    p: &'a Presentation,
    walker: &'a W,
    alphabet: Vec<Letter>,
    pieces: HashSet<Vec<Letter>>,
    piece_len: usize,
    disp_cap: f64,
    cap: f64,
    max_len: usize,
    candidate_cap: u64,
    visited: u64,
    stack: Vec<Letter>,
    out: HashSet<Word>,
}

impl<W: Walker> Search<'_, W> {
    fn run(&mut self, state: &W::State) -> Result<()> {
        if self.stack.len() == self.max_len {
            return Ok(());
        }
        for k in 0..self.alphabet.len() {
            let l = self.alphabet[k];
            if self.stack.last() == Some(&l.inverse()) {
                continue;
            }
            self.stack.push(l);
            let n = self.stack.len();
            if n >= self.piece_len && self.pieces.contains(&self.stack[n - self.piece_len..]) {
                self.stack.pop();
                continue;
            }
            let next = self.walker.step(state, l);
            if self.walker.displacement(&next) > self.disp_cap {
                self.stack.pop();
                continue;
            }
            self.visited += 1;
            if self.visited > self.candidate_cap {
                return Err(Error::ResourceCap { projected: self.visited, cap: self.candidate_cap });
            }
            if (n == 1 || self.stack[0] != self.stack[n - 1].inverse())
                && self.walker.length_within(&next, self.cap)?.is_some()
            {
                let c = canonicalize_conjugacy(&Word::from_letters(self.stack.clone()), self.p);
                if !c.is_empty() {
                    self.out.insert(c);
                }
            }
            self.run(&next)?;
            self.stack.pop();
        }
        Ok(())
    }
}

fn search<W: Walker>(p: &Presentation, walker: &W, max_len: usize, cap: f64, margin: f64, candidate_cap: u64) -> Result<HashSet<Word>> {
    let pieces = long_pieces(p);
    let piece_len = pieces.iter().map(|v| v.len()).next().unwrap_or(usize::MAX);
    let mut s = Search {
        p,
        walker,
        alphabet: p.alphabet().collect(),
        pieces,
        piece_len,
        disp_cap: cap + margin,
        cap,
        max_len,
        candidate_cap,
        visited: 0,
        stack: Vec::with_capacity(max_len),
        out: HashSet::new(),
    };
    s.run(&walker.identity())?;
    log::debug!("capped enumeration visited {} words, kept {} forms", s.visited, s.out.len());
    Ok(s.out)
}

/// Dehn-canonical forms of classes of hyperbolic length ≤ `cap` reachable by
/// reduced words of length ≤ `max_len` whose prefixes move the balanced
/// basepoint by at most `cap + margin`.
pub fn enumerate_short_classes(
    p: &Presentation,
    rep: &Sl2Rep,
    max_len: usize,
    cap: f64,
    margin: f64,
    candidate_cap: u64,
) -> Result<HashSet<Word>> {
    let walker = Sl2Walker { gens: rep.balanced().0.generators().to_vec() };
    search(p, &walker, max_len, cap, margin, candidate_cap)
}

/// As [`enumerate_short_classes`] for Finsler length under a linear
/// representation. Prefixes are pruned by an upper bound on the Finsler
/// norm of their Cartan projection.
pub fn enumerate_short_classes_linear(
    p: &Presentation,
    rep: &LinearRep,
    alpha: &Alpha0,
    max_len: usize,
    cap: f64,
    margin: f64,
    candidate_cap: u64,
) -> Result<HashSet<Word>> {
    search(p, &LinearWalker::new(rep, alpha), max_len, cap, margin, candidate_cap)
}

fn fingerprint_string(fp: &[f64]) -> String {
    fp.iter().map(|x| format!("{:.9}", quantize(*x))).collect::<Vec<_>>().join(";")
}

/// Builds the census for a family. Rows are sorted by Fuchsian length, then
/// shortlex.
pub fn build_census(family: &RepFamily, opts: &CensusOptions) -> Result<Census> {
    if opts.max_word_len == 0 {
        return Err(Error::InvalidArgument("max_word_len must be at least 1".into()));
    }
    let p = family.presentation();
    let driver = family
        .labels()
        .iter()
        .position(|(n, _)| *n == opts.driver)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown driver label {:?}", opts.driver)))?;
    let (n, m, cc) = (opts.max_word_len, opts.margin, opts.candidate_cap);
    let mut words: Vec<Word> = match opts.length_cap {
        None => enumerate_dehn_canonical(p, n, cc)?.into_iter().collect(),
        Some(cap) if driver == 0 => enumerate_short_classes(p, family.fuchsian(), n, cap, m, cc)?.into_iter().collect(),
        Some(cap) => {
            let rep = &family.labels()[driver].1;
            enumerate_short_classes_linear(p, rep, family.alpha(), n, cap, m, cc)?.into_iter().collect()
        }
    };
    words.sort_by(shortlex);
    let fp = Fingerprinter::standard(p)?;
    let raw: Vec<Vec<f64>> = words
        .iter()
        .map(|w| fp.raw(w).map_err(|e| attach_word(e, w)))
        .collect::<Result<_>>()?;
    let (words, raw, collisions) = if p.has_relators() {
        merge_with_collision_check(words, raw, family.fuchsian())
    } else {
        (words, raw, 0)
    };
    let mut rows = Vec::with_capacity(words.len());
    for (w, f) in words.into_iter().zip(raw) {
        let l_hyp = family.fuchsian().length(&w);
        if driver == 0 && opts.length_cap.is_some_and(|cap| l_hyp > cap) {
            continue;
        }
        let l_f = family
            .labels()
            .iter()
            .map(|(_, r)| r.finsler_length(&w, family.alpha()).map_err(|e| attach_word(e, &w)))
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = l_f.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::NonFinite(format!("length {bad} for word {w}")));
        }
        if driver != 0 && opts.length_cap.is_some_and(|cap| l_f[driver] > cap) {
            continue;
        }
        let iota = family.splitting().map_or(0, |s| intersection_number(&w, s));
        rows.push(CensusRow { wlen: w.len(), word: w, l_hyp, l_f, iota, fingerprint: fingerprint_string(&f) });
    }
    rows.sort_by(|a, b| a.l_f[0].total_cmp(&b.l_f[0]).then_with(|| shortlex(&a.word, &b.word)));
    let r_word = completeness_from_word_length(&rows, driver, opts.max_word_len);
    let r_star = match opts.length_cap {
        Some(cap) => r_word.min(cap),
        None => r_word,
    };
    let radii = label_radii(&rows, driver, family.labels().len(), r_star);
    Ok(Census {
        labels: family.labels().iter().map(|(n, _)| n.clone()).collect(),
        rows,
        r_star,
        radii,
        driver,
        max_word_len: opts.max_word_len,
        length_cap: opts.length_cap,
        collisions,
        config_hash: String::new(),
    })
}

fn attach_word(e: Error, w: &Word) -> Error {
    match e {
        Error::EigenFailure(m) => Error::EigenFailure(format!("{m} (word {w})")),
        Error::NonFinite(m) => Error::NonFinite(format!("{m} (word {w})")),
        other => other,
    }
}

fn merge_with_collision_check(words: Vec<Word>, raw: Vec<Vec<f64>>, fuchsian: &Sl2Rep) -> (Vec<Word>, Vec<Vec<f64>>, usize) {
    let merged = crate::fingerprint::merge_by_fingerprint(words.clone(), &raw);
    let mut dropped: HashSet<Word> = HashSet::new();
    let mut collisions = 0;
    for (gone, kept) in &merged.merged {
        if (fuchsian.length(gone) - fuchsian.length(kept)).abs() > COLLISION_TOL {
            collisions += 1;
            log::warn!("fingerprint collision between {gone} and {kept}");
        } else {
            dropped.insert(gone.clone());
        }
    }
    let mut out_w = Vec::new();
    let mut out_f = Vec::new();
    for (w, f) in words.into_iter().zip(raw) {
        if !dropped.contains(&w) {
            out_w.push(w);
            out_f.push(f);
        }
    }
    (out_w, out_f, collisions)
}

fn driver_length(r: &CensusRow, driver: usize) -> f64 {
    if driver == 0 {
        r.l_hyp
    } else {
        r.l_f[driver]
    }
}

/// Fits `ℓ(γ) ≥ ĉ|γ| - b̂` for the driver's lengths as the lower-convex-hull
/// supporting line of the per-word-length minima at the middle word length,
/// and returns `ĉ · max_word_len - b̂`.
pub fn completeness_from_word_length(rows: &[CensusRow], driver: usize, max_word_len: usize) -> f64 {
    let mut mins: Vec<(f64, f64)> = Vec::new();
    for k in 1..=max_word_len {
        if let Some(m) = rows.iter().filter(|r| r.wlen == k).map(|r| driver_length(r, driver)).min_by(f64::total_cmp) {
            mins.push((k as f64, m));
        }
    }
    if mins.is_empty() {
        return 0.0;
    }
    if mins.len() == 1 {
        return mins[0].1;
    }
    let hull = lower_hull(&mins);
    let mid = 0.5 * (mins[0].0 + mins[mins.len() - 1].0);
    let mut edge = (hull[hull.len() - 2], hull[hull.len() - 1]);
    for w in hull.windows(2) {
        if w[0].0 <= mid && mid < w[1].0 {
            edge = (w[0], w[1]);
            break;
        }
    }
    let c = (edge.1 .1 - edge.0 .1) / (edge.1 .0 - edge.0 .0);
    let b = c * edge.0 .0 - edge.0 .1;
    c.max(0.0) * max_word_len as f64 - if c > 0.0 { b } else { -edge.0 .1 }
}

fn lower_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h
}

/// `R★ · min(ℓ_label/ℓ_driver)` over rows inside `R★`: any class with label
/// length below that radius has driver length below `R★`.
fn label_radii(rows: &[CensusRow], driver: usize, n_labels: usize, r_star: f64) -> Vec<f64> {
    (0..n_labels)
        .map(|i| {
            if i == driver {
                return r_star;
            }
            let ratio = rows
                .iter()
                .filter(|r| driver_length(r, driver) <= r_star && driver_length(r, driver) > 0.0)
                .map(|r| r.l_f[i] / driver_length(r, driver))
                .fold(f64::INFINITY, f64::min);
            if ratio.is_finite() {
                r_star * ratio.min(1.0)
            } else {
                r_star
            }
        })
        .collect()
}

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

/// Writes the census as CSV, gzipped when the path ends in `.gz`.
pub fn save_census(c: &Census, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut w = GzEncoder::new(BufWriter::new(file), Compression::default());
        write_census(c, &mut w)?;
        w.finish()?.flush()?;
    } else {
        let mut w = BufWriter::new(file);
        write_census(c, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn write_census(c: &Census, w: &mut impl Write) -> Result<()> {
    let cap = c.length_cap.map_or("none".to_string(), fmt_f);
    let radii: Vec<String> = c.radii.iter().map(|x| fmt_f(*x)).collect();
    writeln!(
        w,
        "{CENSUS_MAGIC},config={},r_star={},driver={},max_word_len={},length_cap={},collisions={},radii={},version={}",
        if c.config_hash.is_empty() { "none" } else { &c.config_hash },
        fmt_f(c.r_star),
        c.labels[c.driver],
        c.max_word_len,
        cap,
        c.collisions,
        radii.join(";"),
        env!("CARGO_PKG_VERSION")
    )?;
    let mut header = vec!["word".to_string(), "wlen".into(), "l_hyp".into()];
    header.extend(c.labels.iter().map(|l| format!("l_F:{l}")));
    header.push("iota".into());
    header.push("fingerprint".into());
    writeln!(w, "{}", header.join(","))?;
    for r in &c.rows {
        let mut f = vec![r.word.compact(), r.wlen.to_string(), fmt_f(r.l_hyp)];
        f.extend(r.l_f.iter().map(|x| fmt_f(*x)));
        f.push(r.iota.to_string());
        f.push(r.fingerprint.clone());
        writeln!(w, "{}", f.join(","))?;
    }
    Ok(())
}

/// Reads a census. With `expected_hash`, a differing config hash is an error.
pub fn load_census(path: &Path, expected_hash: Option<&str>) -> Result<Census> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> =
        if path.extension().is_some_and(|e| e == "gz") { Box::new(GzDecoder::new(file)) } else { Box::new(file) };
    read_census(BufReader::new(reader), expected_hash)
}

pub fn read_census(r: impl BufRead, expected_hash: Option<&str>) -> Result<Census> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty census file".into()))??;
    let mut parts = first.split(',');
    let magic = format!("{},{}", parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    if magic != CENSUS_MAGIC {
        return Err(Error::FormatVersionMismatch { found: magic, expected: CENSUS_MAGIC.into() });
    }
    let mut meta = std::collections::HashMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {p:?}")))?;
        meta.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| meta.get(k).cloned().ok_or_else(|| Error::Parse(format!("missing header field {k}")));
    let pf = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
    let config_hash = match get("config")?.as_str() {
        "none" => String::new(),
        h => h.to_string(),
    };
    if let Some(exp) = expected_hash {
        if config_hash != exp {
            return Err(Error::ConfigHashMismatch { found: config_hash, expected: exp.to_string() });
        }
    }
    let r_star = pf(&get("r_star")?)?;
    let max_word_len = get("max_word_len")?.parse().map_err(|e| Error::Parse(format!("max_word_len: {e}")))?;
    let length_cap = match get("length_cap")?.as_str() {
        "none" => None,
        s => Some(pf(s)?),
    };
    let collisions = get("collisions")?.parse().map_err(|e| Error::Parse(format!("collisions: {e}")))?;
    let radii = get("radii")?.split(';').map(pf).collect::<Result<Vec<_>>>()?;
    let header = lines.next().ok_or_else(|| Error::Parse("missing column header".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 5 || cols[0] != "word" || cols[1] != "wlen" || cols[2] != "l_hyp" {
        return Err(Error::Parse(format!("unexpected columns {header:?}")));
    }
    let labels: Vec<String> = cols[3..cols.len() - 2]
        .iter()
        .map(|c| c.strip_prefix("l_F:").map(str::to_string).ok_or_else(|| Error::Parse(format!("bad column {c:?}"))))
        .collect::<Result<_>>()?;
    if radii.len() != labels.len() {
        return Err(Error::Parse("radius count differs from label count".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(Error::Parse(format!("row {} has {} fields", i + 1, f.len())));
        }
        let n = labels.len();
        rows.push(CensusRow {
            word: Word::parse(f[0])?,
            wlen: f[1].parse().map_err(|e| Error::Parse(format!("wlen: {e}")))?,
            l_hyp: pf(f[2])?,
            l_f: f[3..3 + n].iter().map(|s| pf(s)).collect::<Result<_>>()?,
            iota: f[3 + n].parse().map_err(|e| Error::Parse(format!("iota: {e}")))?,
            fingerprint: f[4 + n].to_string(),
        });
    }
    let driver_name = get("driver")?;
    let driver = labels
        .iter()
        .position(|l| *l == driver_name)
        .ok_or_else(|| Error::Parse(format!("driver {driver_name:?} is not a column")))?;
    Ok(Census { labels, rows, r_star, radii, driver, max_word_len, length_cap, collisions, config_hash })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{glue_genus2, TorusParams};

    fn family() -> RepFamily {
        let t = TorusParams::new(4.0, 4.0, 4.0).unwrap();
        let s = glue_genus2(&t, &t, 0.0).unwrap();
        RepFamily::new(Presentation::genus2(), Some(Splitting::genus2_separating()), s.rep, 3).unwrap()
    }

    #[test]
    fn length_one_census() {
        let c = build_census(&family(), &CensusOptions::exact(1)).unwrap();
        assert_eq!(c.rows().len(), 8);
    }

    #[test]
    fn round_trip_plain_and_gzip() {
        let mut c = build_census(&family(), &CensusOptions::exact(3)).unwrap();
        c.set_config_hash("abc123");
        let dir = tempfile::tempdir().unwrap();
        for name in ["c.csv", "c.csv.gz"] {
            let path = dir.path().join(name);
            save_census(&c, &path).unwrap();
            assert_eq!(load_census(&path, None).unwrap(), c);
            assert!(matches!(load_census(&path, Some("other")), Err(Error::ConfigHashMismatch { .. })));
        }
        let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
        assert!(text.starts_with("hitchin-census,v1"));
    }

    #[test]
    fn version_mismatch_rejected() {
        let r = read_census("hitchin-census,v2,config=none\n".as_bytes(), None);
        assert!(matches!(r, Err(Error::FormatVersionMismatch { .. })));
    }

    #[test]
    fn hull_line_lies_below_minima() {
        let c = build_census(&family(), &CensusOptions::exact(5)).unwrap();
        let r = c.r_star();
        assert!(r > 0.0);
        // every class of word length 5 is at least as long as the bound at 5
        let m5 = c.rows().iter().filter(|x| x.wlen == 5).map(|x| x.l_hyp).fold(f64::INFINITY, f64::min);
        assert!(r <= m5 + 1e-12);
    }

    #[test]
    fn capped_agrees_with_exact_below_radius() {
        let fam = family();
        let exact = build_census(&fam, &CensusOptions::exact(6)).unwrap();
        let capped = build_census(&fam, &CensusOptions::capped(6, 6.0)).unwrap();
        let r = exact.r_star().min(capped.r_star());
        assert_eq!(exact.count(FUCHSIAN_LABEL, r).unwrap(), capped.count(FUCHSIAN_LABEL, r).unwrap());
    }
}
