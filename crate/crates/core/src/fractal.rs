//! Equal-ratio iterated function systems `F_i(x) = λ(x − b_i) + b_i` in ℝⁿ,
//! their words and cells, and the self-similar (Hutchinson) measure.
//!
//! Geometry is measured in the ℓ∞ norm. The attractor `K` is bounded by the
//! axis-aligned hull box of the fixed points, which every `F_i` maps into
//! itself; cell boxes are the images of that hull box and all diameter
//! bounds are taken from it.

use std::fmt;

use crate::error::{Error, Result};
use crate::lorentz_ideal::IdealParameter;

/// Default cap on `N^L` for cell enumeration.
pub const DEFAULT_CELL_CAP: usize = 1_000_000;

/// A finite word over the branch alphabet. Letters are stored 0-based and
/// displayed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    /// Builds a word from 1-based letters, checking them against `branches`.
    pub fn from_one_based(letters: &[usize], branches: usize) -> Result<Self> {
        letters
            .iter()
            .map(|&l| {
                if l == 0 || l > branches {
                    Err(Error::input(format!("letter {l} outside 1..={branches}")))
                } else {
                    Ok(l - 1)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|l| l + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn concat(&self, tail: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&tail.0);
        Word(letters)
    }

    /// All words of length `len` over `branches` letters, lexicographically.
    pub fn all(branches: usize, len: usize) -> impl Iterator<Item = Word> {
        let total = branches.checked_pow(len as u32).unwrap_or(usize::MAX);
        (0..total).map(move |mut code| {
            let mut letters = vec![0; len];
            for slot in letters.iter_mut().rev() {
                *slot = code % branches;
                code /= branches;
            }
            Word(letters)
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("K");
        }
        let parts: Vec<String> = self.0.iter().map(|l| (l + 1).to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfsSpec {
    lambda: f64,
    points: Vec<Vec<f64>>,
    dimension: f64,
    hull_lo: Vec<f64>,
    hull_hi: Vec<f64>,
    diameter: f64,
    centroid: Vec<f64>,
}

/// The cell `K_w = F_w(K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub word: Word,
    /// `F_w` applied to the centroid of the fixed points.
    pub representative: Vec<f64>,
    /// ℓ∞ diameter bound `λ^|w| · diam K`.
    pub diameter: f64,
    /// Hutchinson measure `N^(-|w|)`.
    pub measure: f64,
}

pub fn build_ifs(lambda: f64, points: Vec<Vec<f64>>) -> Result<IfsSpec> {
    IfsSpec::new(lambda, points)
}

impl IfsSpec {
    pub fn new(lambda: f64, points: Vec<Vec<f64>>) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::input(format!("ratio lambda = {lambda} must lie in (0, 1)")));
        }
        if points.len() < 2 {
            return Err(Error::input(format!("need at least 2 fixed points, got {}", points.len())));
        }
        let n = points[0].len();
        if n == 0 {
            return Err(Error::input("fixed points must have at least one coordinate"));
        }
        if points.iter().any(|b| b.len() != n) {
            return Err(Error::input("fixed points have inconsistent dimensions"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fixed point coordinate".into()));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::input(format!(
                        "fixed points {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let big_n = points.len() as f64;
        let dimension = big_n.ln() / (1.0 / lambda).ln();
        let mut hull_lo = vec![f64::INFINITY; n];
        let mut hull_hi = vec![f64::NEG_INFINITY; n];
        let mut centroid = vec![0.0; n];
        for b in &points {
            for k in 0..n {
                hull_lo[k] = hull_lo[k].min(b[k]);
                hull_hi[k] = hull_hi[k].max(b[k]);
                centroid[k] += b[k] / big_n;
            }
        }
        let diameter = (0..n).map(|k| hull_hi[k] - hull_lo[k]).fold(0.0, f64::max);
        Ok(IfsSpec {
            lambda,
            points,
            dimension,
            hull_lo,
            hull_hi,
            diameter,
            centroid,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.lambda
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn branches(&self) -> usize {
        self.points.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.hull_lo.len()
    }

    /// Similarity dimension `log N / log(1/λ)`.
    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    /// ℓ∞ diameter of the fixed-point hull box, the bound used for `diam K`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    pub fn hull(&self) -> (&[f64], &[f64]) {
        (&self.hull_lo, &self.hull_hi)
    }

    /// The dimension as an ideal parameter; fails when it is below 1.
    pub fn ideal_parameter(&self) -> Result<IdealParameter> {
        IdealParameter::new(self.dimension).map_err(|_| {
            Error::input(format!(
                "similarity dimension {} is below 1; estimators need p >= 1",
                self.dimension
            ))
        })
    }

    pub fn map_point(&self, branch: usize, x: &[f64]) -> Vec<f64> {
        let b = &self.points[branch];
        x.iter()
            .zip(b)
            .map(|(&xi, &bi)| self.lambda * (xi - bi) + bi)
            .collect()
    }

    /// `F_w(x) = F_{w_1} ∘ … ∘ F_{w_m}(x)`, innermost map first.
    pub fn apply_word(&self, word: &Word, x: &[f64]) -> Vec<f64> {
        word.letters()
            .iter()
            .rev()
            .fold(x.to_vec(), |y, &l| self.map_point(l, &y))
    }

    /// Axis-aligned box `F_w(hull)` containing `K_w`.
    pub fn cell_box(&self, word: &Word) -> (Vec<f64>, Vec<f64>) {
        (self.apply_word(word, &self.hull_lo), self.apply_word(word, &self.hull_hi))
    }

    pub fn measure(&self, len: usize) -> f64 {
        (self.branches() as f64).powi(-(len as i32))
    }

    pub fn cell(&self, word: &Word) -> Cell {
        Cell {
            word: word.clone(),
            representative: self.apply_word(word, &self.centroid),
            diameter: self.lambda.powi(word.len() as i32) * self.diameter,
            measure: self.measure(word.len()),
        }
    }

    fn check_cap(&self, level: usize, cap: usize) -> Result<usize> {
        match self.branches().checked_pow(level as u32) {
            Some(count) if count <= cap => Ok(count),
            _ => Err(Error::resource(format!(
                "{}^{} cells exceed the cap of {cap}",
                self.branches(),
                level
            ))),
        }
    }

    /// All level-`level` cells in lexicographic word order.
    pub fn enumerate_cells(&self, level: usize) -> Result<Vec<Cell>> {
        self.enumerate_cells_capped(level, DEFAULT_CELL_CAP)
    }

    pub fn enumerate_cells_capped(&self, level: usize, cap: usize) -> Result<Vec<Cell>> {
        self.check_cap(level, cap)?;
        Ok(Word::all(self.branches(), level).map(|w| self.cell(&w)).collect())
    }

    /// Sufficient test for disjointness of the first-level images: the `N`
    /// level-1 hull boxes must be pairwise disjoint (touching counts as
    /// overlapping).
    pub fn validate_separation(&self) -> bool {
        self.boxes_disjoint(1)
    }

    /// Whether all `N^level` cell boxes are pairwise disjoint.
    pub fn boxes_disjoint(&self, level: usize) -> bool {
        let boxes: Vec<_> = Word::all(self.branches(), level).map(|w| self.cell_box(&w)).collect();
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if !boxes_separated(&boxes[i], &boxes[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// The IFS on the selected fixed points (0-based indices) with the same
    /// ratio. Letter `k` of the result corresponds to `subset[k]`.
    pub fn sub_ifs(&self, subset: &[usize]) -> Result<IfsSpec> {
        if subset.len() < 2 {
            return Err(Error::input("a sub-IFS needs at least 2 branches"));
        }
        let mut points = Vec::with_capacity(subset.len());
        for &i in subset {
            let b = self
                .points
                .get(i)
                .ok_or_else(|| Error::input(format!("branch index {} out of range", i + 1)))?;
            points.push(b.clone());
        }
        IfsSpec::new(self.lambda, points)
    }
}

fn boxes_separated(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> bool {
    a.0.iter()
        .zip(&a.1)
        .zip(b.0.iter().zip(&b.1))
        .any(|((alo, ahi), (blo, bhi))| ahi < blo || bhi < alo)
}

/// A clopen set `ω = ∪ K_w` given by distinct words of a common length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaSet {
    base_level: usize,
    words: Vec<Word>,
}

impl OmegaSet {
    pub fn new(base_level: usize, mut words: Vec<Word>) -> Result<Self> {
        if let Some(w) = words.iter().find(|w| w.len() != base_level) {
            return Err(Error::input(format!(
                "word {w} has length {}, expected {base_level}",
                w.len()
            )));
        }
        words.sort();
        if words.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::input("omega words must be distinct"));
        }
        Ok(OmegaSet { base_level, words })
    }

    /// The whole attractor, `{∅}` at level 0.
    pub fn whole() -> Self {
        OmegaSet {
            base_level: 0,
            words: vec![Word::empty()],
        }
    }

    pub fn cell(word: Word) -> Self {
        OmegaSet {
            base_level: word.len(),
            words: vec![word],
        }
    }

    pub fn empty(base_level: usize) -> Self {
        OmegaSet {
            base_level,
            words: Vec::new(),
        }
    }

    pub fn base_level(&self) -> usize {
        self.base_level
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Hutchinson measure `|words| · N^(-base_level)`.
    pub fn measure(&self, branches: usize) -> f64 {
        self.words.len() as f64 * (branches as f64).powi(-(self.base_level as i32))
    }

    /// Whether `word` lies under one of the generating words.
    pub fn covers(&self, word: &Word) -> bool {
        if word.len() < self.base_level {
            return false;
        }
        self.words.binary_search(&word.prefix(self.base_level)).is_ok()
    }

    /// Replaces every word by all of its descendants of length `level`.
    pub fn refine(&self, level: usize, branches: usize) -> Result<OmegaSet> {
        if level < self.base_level {
            return Err(Error::input(format!(
                "cannot refine level {} omega to coarser level {level}",
                self.base_level
            )));
        }
        let depth = level - self.base_level;
        let tails: Vec<Word> = Word::all(branches, depth).collect();
        let words = self
            .words
            .iter()
            .flat_map(|w| tails.iter().map(move |t| w.concat(t)))
            .collect();
        Ok(OmegaSet {
            base_level: level,
            words,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> IfsSpec {
        let corners = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        build_ifs(1.0 / 3.0, corners).unwrap()
    }

    fn line(lambda: f64) -> IfsSpec {
        build_ifs(lambda, vec![vec![0.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn dimensions() {
        assert!((square().dimension() - 4f64.ln() / 3f64.ln()).abs() < 1e-15);
        assert!((square().dimension() - 1.261860).abs() < 1e-6);
        let cantor = line(1.0 / 3.0);
        assert!((cantor.dimension() - 0.630930).abs() < 1e-6);
        assert!(cantor.ideal_parameter().is_err());
        assert_eq!(line(0.5).dimension(), 1.0);
    }

    #[test]
    fn build_errors() {
        assert!(build_ifs(1.0, vec![vec![0.0], vec![1.0]]).is_err());
        assert!(build_ifs(0.0, vec![vec![0.0], vec![1.0]]).is_err());
        assert!(build_ifs(0.3, vec![vec![0.0]]).is_err());
        assert!(build_ifs(0.3, vec![vec![0.0], vec![0.0]]).is_err());
        assert!(build_ifs(0.3, vec![vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn separation_examples() {
        assert!(square().validate_separation());
        assert!(!line(0.5).validate_separation());
        assert!(line(0.4).validate_separation());
    }

    #[test]
    fn enumerate_examples() {
        let k = square();
        let root = k.enumerate_cells(0).unwrap();
        assert_eq!(root.len(), 1);
        assert_eq!(root[0].measure, 1.0);
        assert_eq!(root[0].representative, vec![0.5, 0.5]);
        let level2 = k.enumerate_cells(2).unwrap();
        assert_eq!(level2.len(), 16);
        assert!(level2.iter().all(|c| c.measure == 1.0 / 16.0));
        let level1 = k.enumerate_cells(1).unwrap();
        assert!(level1.iter().all(|c| (c.diameter - 1.0 / 3.0).abs() < 1e-15));
        assert!(level2.windows(2).all(|w| w[0].word < w[1].word));
        assert!(matches!(k.enumerate_cells_capped(3, 63), Err(Error::Resource(_))));
    }

    #[test]
    fn omega_refinement() {
        let whole = OmegaSet::whole().refine(1, 4).unwrap();
        assert_eq!(whole.words().len(), 4);
        assert_eq!(whole.measure(4), 1.0);
        let one = OmegaSet::cell(Word::new(vec![2]));
        let r = one.refine(3, 4).unwrap();
        assert_eq!(r.words().len(), 16);
        assert!((r.measure(4) - 1.0 / 4.0).abs() < 1e-15);
        assert_eq!(r.measure(4), one.measure(4));
        assert_eq!(one.refine(2, 4).unwrap().refine(3, 4).unwrap(), r);
        assert!(r.refine(2, 4).is_err());
        assert!(OmegaSet::new(1, vec![Word::new(vec![0]), Word::new(vec![0])]).is_err());
        assert!(OmegaSet::new(1, vec![Word::new(vec![0, 1])]).is_err());
    }

    #[test]
    fn sub_ifs_examples() {
        let k = square();
        let two = k.sub_ifs(&[0, 1]).unwrap();
        assert!((two.dimension() - 0.630930).abs() < 1e-6);
        assert!((k.sub_ifs(&[0, 1, 2]).unwrap().dimension() - 1.0).abs() < 1e-15);
        assert_eq!(k.sub_ifs(&[0, 1, 2, 3]).unwrap(), k);
        assert!(k.sub_ifs(&[0]).is_err());
        assert!(k.sub_ifs(&[0, 7]).is_err());
    }

    #[test]
    fn word_display_and_parse() {
        let w = Word::from_one_based(&[1, 4, 2], 4).unwrap();
        assert_eq!(w.letters(), &[0, 3, 1]);
        assert_eq!(w.to_string(), "1.4.2");
        assert_eq!(Word::empty().to_string(), "K");
        assert!(Word::from_one_based(&[5], 4).is_err());
        assert!(Word::from_one_based(&[0], 4).is_err());
    }
}
