//! Finite models of commuting Hermitian tuples with joint spectrum in an
//! attractor `K`.
//!
//! A discretized tuple lives on the span of level-`L` cell indicators of a
//! clopen set `ω`: each basis vector is a *site* `(part, word, copy)` and
//! component `i` acts diagonally by the `i`-th coordinate of the cell
//! representative. Multiplicity is modeled by repeating sites, so `τ ⊗ I_m`
//! and an `m`-fold repetition coincide in the canonical site order.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::block::BlockMatrix;
use crate::error::{Error, Result};
use crate::fractal::{IfsSpec, OmegaSet, Word};

/// Default cap on the dimension of a discretized tuple.
pub const DEFAULT_MAX_DIM: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Component {
    pub fn dim(&self) -> usize {
        match self {
            Component::Diagonal(d) => d.len(),
            Component::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Component::Diagonal(d) => DMatrix::from_diagonal(d),
            Component::Dense(m) => m.clone(),
        }
    }

    pub fn operator_norm(&self) -> f64 {
        match self {
            Component::Diagonal(d) => d.amax(),
            Component::Dense(m) if m.is_empty() => 0.0,
            Component::Dense(m) => m.clone().singular_values().max(),
        }
    }
}

/// Basis metadata for a discretized tuple, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    /// Summand index in a direct sum.
    pub part: usize,
    /// Ambient-level cell containing this site's spectral point.
    pub word: Word,
    /// Copy index below the cell's multiplicity.
    pub copy: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Discretized,
    Ampliated,
    Sum,
    Translated,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleOperator {
    arity: usize,
    dim: usize,
    components: Vec<Component>,
    sites: Option<Vec<Site>>,
    ambient_level: Option<usize>,
    provenance: Provenance,
}

/// Cell-constant multiplicities keyed by words of one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityProfile {
    level: usize,
    values: BTreeMap<Word, usize>,
}

impl MultiplicityProfile {
    pub fn new(level: usize, values: BTreeMap<Word, usize>) -> Result<Self> {
        if let Some(w) = values.keys().find(|w| w.len() != level) {
            return Err(Error::input(format!("profile word {w} is not of level {level}")));
        }
        Ok(MultiplicityProfile { level, values })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Multiplicity of the cell containing `word`; zero off the support.
    pub fn at(&self, word: &Word) -> usize {
        self.values.get(&word.prefix(self.level)).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Multiplicity {
    Uniform(usize),
    Profile(MultiplicityProfile),
}

impl Multiplicity {
    fn at(&self, word: &Word) -> usize {
        match self {
            Multiplicity::Uniform(m) => *m,
            Multiplicity::Profile(p) => p.at(word),
        }
    }
}

impl TupleOperator {
    /// The zero-dimensional `n`-tuple.
    pub fn empty(arity: usize) -> Self {
        TupleOperator {
            arity,
            dim: 0,
            components: (0..arity).map(|_| Component::Diagonal(DVector::zeros(0))).collect(),
            sites: Some(Vec::new()),
            ambient_level: None,
            provenance: Provenance::Raw,
        }
    }

    /// A tuple of real symmetric matrices with no site metadata.
    pub fn raw(components: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::input("tuple must have at least one component"))?;
        let dim = first.nrows();
        for (i, c) in components.iter().enumerate() {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::input(format!("component {i} is not {dim}x{dim}")));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("component {i}")));
            }
            let asym = (c - c.transpose()).amax();
            if asym > 1e-12 * c.amax().max(1.0) {
                return Err(Error::input(format!("component {i} is not Hermitian")));
            }
        }
        Ok(TupleOperator {
            arity: components.len(),
            dim,
            components: components.into_iter().map(Component::Dense).collect(),
            sites: None,
            ambient_level: None,
            provenance: Provenance::Raw,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn sites(&self) -> Option<&[Site]> {
        self.sites.as_deref()
    }

    pub fn ambient_level(&self) -> Option<usize> {
        self.ambient_level
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_diagonal(&self) -> bool {
        self.components.iter().all(|c| matches!(c, Component::Diagonal(_)))
    }

    pub fn dense_components(&self) -> Vec<DMatrix<f64>> {
        self.components.iter().map(Component::to_dense).collect()
    }

    /// Joint spectral point of each site, for diagonal tuples.
    pub fn joint_points(&self) -> Option<Vec<Vec<f64>>> {
        let diags: Option<Vec<&DVector<f64>>> = self
            .components
            .iter()
            .map(|c| match c {
                Component::Diagonal(d) => Some(d),
                Component::Dense(_) => None,
            })
            .collect();
        let diags = diags?;
        Some((0..self.dim).map(|s| diags.iter().map(|d| d[s]).collect()).collect())
    }

    /// `‖τ‖ = max_i ‖T_i‖`.
    pub fn operator_norm(&self) -> f64 {
        self.components.iter().map(Component::operator_norm).fold(0.0, f64::max)
    }

    /// `max_{i,j} ‖[T_i, T_j]‖` (entrywise max), zero for diagonal tuples.
    pub fn commutation_defect(&self) -> f64 {
        if self.is_diagonal() {
            return 0.0;
        }
        let dense = self.dense_components();
        let mut worst = 0.0_f64;
        for i in 0..dense.len() {
            for j in i + 1..dense.len() {
                let c = &dense[i] * &dense[j] - &dense[j] * &dense[i];
                worst = worst.max(c.amax());
            }
        }
        worst
    }

    fn diagonals(&self) -> Option<Vec<&DVector<f64>>> {
        self.components
            .iter()
            .map(|c| match c {
                Component::Diagonal(d) => Some(d),
                Component::Dense(_) => None,
            })
            .collect()
    }
}

/// Compression of the coordinate multiplication tuple on `L²(ω)` to level
/// `level` cell indicators, each cell repeated by its multiplicity.
pub fn discretize(
    ifs: &IfsSpec,
    omega: &OmegaSet,
    level: usize,
    multiplicity: &Multiplicity,
    max_dim: usize,
) -> Result<TupleOperator> {
    if omega.is_empty() {
        return Err(Error::input("cannot discretize over an empty omega"));
    }
    if level < omega.base_level() {
        return Err(Error::input(format!(
            "ambient level {level} is below omega level {}",
            omega.base_level()
        )));
    }
    let branches = ifs.branches();
    let depth = level - omega.base_level();
    let per_word = branches.checked_pow(depth as u32).unwrap_or(usize::MAX);
    if per_word.saturating_mul(omega.words().len()) > crate::fractal::DEFAULT_CELL_CAP {
        return Err(Error::resource(format!(
            "refining omega to level {level} exceeds the cell cap"
        )));
    }
    let refined = omega.refine(level, branches)?;
    let mut dim = 0usize;
    for w in refined.words() {
        dim += multiplicity.at(w);
    }
    if dim > max_dim {
        return Err(Error::resource(format!(
            "discretized dimension {dim} exceeds cap {max_dim}"
        )));
    }
    let n = ifs.ambient_dim();
    let mut coords: Vec<Vec<f64>> = vec![Vec::with_capacity(dim); n];
    let mut sites = Vec::with_capacity(dim);
    for w in refined.words() {
        let m = multiplicity.at(w);
        if m == 0 {
            continue;
        }
        let point = ifs.cell(w).representative;
        for copy in 0..m {
            for (k, c) in coords.iter_mut().enumerate() {
                c.push(point[k]);
            }
            sites.push(Site {
                part: 0,
                word: w.clone(),
                copy,
            });
        }
    }
    Ok(TupleOperator {
        arity: n,
        dim,
        components: coords
            .into_iter()
            .map(|c| Component::Diagonal(DVector::from_vec(c)))
            .collect(),
        sites: Some(sites),
        ambient_level: Some(level),
        provenance: Provenance::Discretized,
    })
}

/// `τ ⊗ I_m`; basis index `i·m + a`.
pub fn ampliate(tau: &TupleOperator, m: usize) -> Result<TupleOperator> {
    if m == 0 {
        return Err(Error::input("ampliation multiplicity must be at least 1"));
    }
    let components = tau
        .components
        .iter()
        .map(|c| match c {
            Component::Diagonal(d) => {
                Component::Diagonal(DVector::from_iterator(d.len() * m, d.iter().flat_map(|&v| std::iter::repeat_n(v, m))))
            }
            Component::Dense(t) => Component::Dense(t.kronecker(&DMatrix::identity(m, m))),
        })
        .collect();
    let sites = tau.sites.as_ref().map(|sites| {
        sites
            .iter()
            .flat_map(|s| {
                (0..m).map(move |a| Site {
                    part: s.part,
                    word: s.word.clone(),
                    copy: s.copy * m + a,
                })
            })
            .collect()
    });
    Ok(TupleOperator {
        arity: tau.arity,
        dim: tau.dim * m,
        components,
        sites,
        ambient_level: tau.ambient_level,
        provenance: Provenance::Ampliated,
    })
}

/// `σ ⊕ τ`, block diagonal; the second summand's parts are renumbered after
/// the first's.
pub fn direct_sum(first: &TupleOperator, second: &TupleOperator) -> Result<TupleOperator> {
    if first.arity != second.arity {
        return Err(Error::input(format!(
            "cannot sum a {}-tuple with a {}-tuple",
            first.arity, second.arity
        )));
    }
    if second.dim == 0 {
        return Ok(first.clone());
    }
    if first.dim == 0 {
        return Ok(second.clone());
    }
    let components = first
        .components
        .iter()
        .zip(&second.components)
        .map(|(a, b)| match (a, b) {
            (Component::Diagonal(x), Component::Diagonal(y)) => {
                Component::Diagonal(DVector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied()))
            }
            _ => {
                let (da, db) = (a.to_dense(), b.to_dense());
                let mut m = DMatrix::zeros(first.dim + second.dim, first.dim + second.dim);
                m.view_mut((0, 0), (first.dim, first.dim)).copy_from(&da);
                m.view_mut((first.dim, first.dim), (second.dim, second.dim)).copy_from(&db);
                Component::Dense(m)
            }
        })
        .collect();
    let sites = match (&first.sites, &second.sites) {
        (Some(a), Some(b)) => {
            let offset = a.iter().map(|s| s.part + 1).max().unwrap_or(0);
            let mut all = a.clone();
            all.extend(b.iter().map(|s| Site {
                part: s.part + offset,
                word: s.word.clone(),
                copy: s.copy,
            }));
            Some(all)
        }
        _ => None,
    };
    let ambient_level = match (first.ambient_level, second.ambient_level) {
        (Some(a), Some(b)) if a == b => Some(a),
        _ => None,
    };
    Ok(TupleOperator {
        arity: first.arity,
        dim: first.dim + second.dim,
        components,
        sites,
        ambient_level,
        provenance: Provenance::Sum,
    })
}

/// `τ − v ⊗ I`.
pub fn translate(tau: &TupleOperator, shift: &[f64]) -> Result<TupleOperator> {
    if shift.len() != tau.arity {
        return Err(Error::input(format!(
            "shift has length {}, tuple has {} components",
            shift.len(),
            tau.arity
        )));
    }
    let components = tau
        .components
        .iter()
        .zip(shift)
        .map(|(c, &v)| match c {
            Component::Diagonal(d) => Component::Diagonal(d.map(|x| x - v)),
            Component::Dense(m) => Component::Dense(m - DMatrix::identity(m.nrows(), m.ncols()) * v),
        })
        .collect();
    Ok(TupleOperator {
        components,
        provenance: Provenance::Translated,
        ..tau.clone()
    })
}

/// Scalar multiple `s·τ`.
pub fn scale(tau: &TupleOperator, s: f64) -> TupleOperator {
    let components = tau
        .components
        .iter()
        .map(|c| match c {
            Component::Diagonal(d) => Component::Diagonal(d * s),
            Component::Dense(m) => Component::Dense(m * s),
        })
        .collect();
    TupleOperator {
        components,
        ..tau.clone()
    }
}

/// `([A, T_i])_i` for a dense square `A`.
pub fn commutator(a: &DMatrix<f64>, tau: &TupleOperator) -> Result<Vec<DMatrix<f64>>> {
    if a.nrows() != tau.dim || a.ncols() != tau.dim {
        return Err(Error::input(format!(
            "candidate is {}x{}, tuple dimension is {}",
            a.nrows(),
            a.ncols(),
            tau.dim
        )));
    }
    Ok(tau
        .components
        .iter()
        .map(|c| match c {
            Component::Diagonal(t) => DMatrix::from_fn(tau.dim, tau.dim, |j, k| a[(j, k)] * (t[k] - t[j])),
            Component::Dense(t) => a * t - t * a,
        })
        .collect())
}

/// `([A, T_i])_i` keeping `A`'s block structure when `τ` is diagonal.
pub fn commutator_blocks(a: &BlockMatrix, tau: &TupleOperator) -> Result<Vec<BlockMatrix>> {
    if a.dim() != tau.dim {
        return Err(Error::input(format!(
            "candidate dimension {} differs from tuple dimension {}",
            a.dim(),
            tau.dim
        )));
    }
    match tau.diagonals() {
        Some(diags) => Ok(diags
            .into_iter()
            .map(|t| {
                a.map_blocks(|b| {
                    let idx = b.indices();
                    DMatrix::from_fn(idx.len(), idx.len(), |j, k| b.values()[(j, k)] * (t[idx[k]] - t[idx[j]]))
                })
            })
            .collect()),
        None => commutator(&a.to_dense(), tau)?
            .into_iter()
            .map(BlockMatrix::from_dense)
            .collect(),
    }
}

/// Indicator of the sites whose cell lies in `ω`.
pub fn spectral_indicator(tau: &TupleOperator, omega: &OmegaSet) -> Result<Vec<bool>> {
    let sites = tau
        .sites
        .as_ref()
        .ok_or_else(|| Error::input("spectral projections need a discretized tuple"))?;
    if let Some(level) = tau.ambient_level {
        if omega.base_level() > level {
            return Err(Error::input(format!(
                "omega level {} is finer than ambient level {level}",
                omega.base_level()
            )));
        }
    }
    if let Some(s) = sites.iter().find(|s| s.word.len() < omega.base_level()) {
        return Err(Error::input(format!("site {} is coarser than omega", s.word)));
    }
    Ok(sites.iter().map(|s| omega.covers(&s.word)).collect())
}

/// `E(τ; ω)` as a diagonal 0/1 matrix.
pub fn spectral_projection(tau: &TupleOperator, omega: &OmegaSet) -> Result<BlockMatrix> {
    let ind = spectral_indicator(tau, omega)?;
    Ok(BlockMatrix::diagonal(
        &ind.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
    ))
}

/// One summand of a model: a clopen set with a multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPart {
    pub omega: OmegaSet,
    pub multiplicity: Multiplicity,
}

/// A recipe producing the discretized tuple `τ_{ω_1} ⊕ …` at any ambient
/// level, relative to the common base level of its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    ifs: IfsSpec,
    parts: Vec<ModelPart>,
    base_level: usize,
    max_dim: usize,
}

impl ModelSpec {
    pub fn new(ifs: IfsSpec, parts: Vec<ModelPart>, max_dim: usize) -> Result<Self> {
        let base_level = parts.first().map(|p| p.omega.base_level()).unwrap_or(0);
        if parts.iter().any(|p| p.omega.base_level() != base_level) {
            return Err(Error::input("all model parts must share a base level"));
        }
        Ok(ModelSpec {
            ifs,
            parts,
            base_level,
            max_dim,
        })
    }

    /// `τ_ω ⊗ I_m` with uniform multiplicity.
    pub fn single(ifs: IfsSpec, omega: OmegaSet, m: usize, max_dim: usize) -> Result<Self> {
        Self::new(
            ifs,
            vec![ModelPart {
                omega,
                multiplicity: Multiplicity::Uniform(m),
            }],
            max_dim,
        )
    }

    pub fn ifs(&self) -> &IfsSpec {
        &self.ifs
    }

    pub fn parts(&self) -> &[ModelPart] {
        &self.parts
    }

    pub fn base_level(&self) -> usize {
        self.base_level
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn is_empty(&self) -> bool {
        self.parts.iter().all(|p| p.omega.is_empty())
    }

    /// `∫ m dμ = Σ_w m_w μ(K_w)` over all parts.
    pub fn multiplicity_integral(&self) -> f64 {
        let n = self.ifs.branches();
        self.parts
            .iter()
            .map(|p| {
                let mu = self.ifs.measure(p.omega.base_level());
                p.omega
                    .words()
                    .iter()
                    .map(|w| match &p.multiplicity {
                        Multiplicity::Uniform(m) => *m as f64 * mu,
                        Multiplicity::Profile(prof) if prof.level() <= w.len() => prof.at(w) as f64 * mu,
                        Multiplicity::Profile(prof) => {
                            let fine = OmegaSet::cell(w.clone()).refine(prof.level(), n).unwrap_or_else(|_| OmegaSet::empty(0));
                            fine.words().iter().map(|v| prof.at(v) as f64).sum::<f64>() * self.ifs.measure(prof.level())
                        }
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// The tuple at absolute ambient level `base_level + depth`.
    pub fn build(&self, depth: usize) -> Result<TupleOperator> {
        let level = self.base_level + depth;
        let mut acc = TupleOperator::empty(self.ifs.ambient_dim());
        for part in self.parts.iter().filter(|p| !p.omega.is_empty()) {
            let tau = discretize(&self.ifs, &part.omega, level, &part.multiplicity, self.max_dim)?;
            acc = if acc.dim() == 0 { tau } else { direct_sum(&acc, &tau)? };
            if acc.dim() > self.max_dim {
                return Err(Error::resource(format!(
                    "model dimension {} exceeds cap {}",
                    acc.dim(),
                    self.max_dim
                )));
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::build_ifs;

    fn square() -> IfsSpec {
        let corners = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        build_ifs(1.0 / 3.0, corners).unwrap()
    }

    fn diag(tau: &TupleOperator, i: usize) -> Vec<f64> {
        match &tau.components()[i] {
            Component::Diagonal(d) => d.iter().copied().collect(),
            Component::Dense(_) => panic!("expected diagonal"),
        }
    }

    #[test]
    fn discretize_level_one() {
        let k = square();
        let tau = discretize(&k, &OmegaSet::whole(), 1, &Multiplicity::Uniform(1), 4096).unwrap();
        assert_eq!(tau.dim(), 4);
        let expected: Vec<f64> = k.enumerate_cells(1).unwrap().iter().map(|c| c.representative[0]).collect();
        assert_eq!(diag(&tau, 0), expected);
        assert_eq!(tau.commutation_defect(), 0.0);
    }

    #[test]
    fn multiplicity_matches_ampliation() {
        let k = square();
        let one = discretize(&k, &OmegaSet::whole(), 2, &Multiplicity::Uniform(1), 4096).unwrap();
        let two = discretize(&k, &OmegaSet::whole(), 2, &Multiplicity::Uniform(2), 4096).unwrap();
        let amp = ampliate(&one, 2).unwrap();
        assert_eq!(two.components(), amp.components());
        assert_eq!(two.sites(), amp.sites());
    }

    #[test]
    fn single_cell_sites_stay_in_box() {
        let k = square();
        let w = Word::new(vec![2]);
        let tau = discretize(&k, &OmegaSet::cell(w.clone()), 2, &Multiplicity::Uniform(1), 4096).unwrap();
        assert_eq!(tau.dim(), 4);
        let (lo, hi) = k.cell_box(&w);
        for p in tau.joint_points().unwrap() {
            for i in 0..2 {
                assert!(p[i] >= lo[i] && p[i] <= hi[i]);
            }
        }
    }

    #[test]
    fn discretize_errors() {
        let k = square();
        assert!(discretize(&k, &OmegaSet::empty(0), 1, &Multiplicity::Uniform(1), 4096).is_err());
        let cell = OmegaSet::cell(Word::new(vec![0, 1]));
        assert!(discretize(&k, &cell, 1, &Multiplicity::Uniform(1), 4096).is_err());
        assert!(matches!(
            discretize(&k, &OmegaSet::whole(), 7, &Multiplicity::Uniform(1), 4096),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn ampliate_and_sum_shapes() {
        let k = square();
        let tau = discretize(&k, &OmegaSet::whole(), 1, &Multiplicity::Uniform(1), 4096).unwrap();
        assert_eq!(ampliate(&tau, 1).unwrap().components(), tau.components());
        assert!(ampliate(&tau, 0).is_err());
        let empty = TupleOperator::empty(2);
        assert_eq!(direct_sum(&tau, &empty).unwrap(), tau);
        let doubled = direct_sum(&tau, &tau).unwrap();
        let mut a: Vec<f64> = diag(&doubled, 0);
        let mut b: Vec<f64> = diag(&ampliate(&tau, 2).unwrap(), 0);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        assert!(direct_sum(&tau, &TupleOperator::empty(3)).is_err());
        let parts: Vec<usize> = doubled.sites().unwrap().iter().map(|s| s.part).collect();
        assert_eq!(parts, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn translate_shifts_diagonal() {
        let k = square();
        let tau = discretize(&k, &OmegaSet::whole(), 1, &Multiplicity::Uniform(1), 4096).unwrap();
        let shifted = translate(&tau, &[0.5, -1.0]).unwrap();
        let before = diag(&tau, 1);
        let after = diag(&shifted, 1);
        for (x, y) in before.iter().zip(after) {
            assert_eq!(x + 1.0, y);
        }
        assert_eq!(translate(&tau, &[0.0, 0.0]).unwrap().components(), tau.components());
        assert!(translate(&tau, &[0.0]).is_err());
    }

    #[test]
    fn commutator_two_by_two() {
        let tau = TupleOperator::raw(vec![DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))]).unwrap();
        let a = DMatrix::from_element(2, 2, 0.5);
        let c = commutator(&a, &tau).unwrap();
        assert_eq!(c[0], nalgebra::dmatrix![0.0, 0.5; -0.5, 0.0]);
        let ident = commutator(&DMatrix::identity(2, 2), &tau).unwrap();
        assert_eq!(ident[0].amax(), 0.0);
        assert!(commutator(&DMatrix::identity(3, 3), &tau).is_err());
    }

    #[test]
    fn spectral_projection_counts() {
        let k = square();
        let tau = discretize(&k, &OmegaSet::whole(), 2, &Multiplicity::Uniform(1), 4096).unwrap();
        let full = spectral_projection(&tau, &OmegaSet::whole()).unwrap();
        assert_eq!(full.to_dense(), DMatrix::identity(16, 16));
        let one = spectral_projection(&tau, &OmegaSet::cell(Word::new(vec![1]))).unwrap();
        assert_eq!(one.trace(), 4.0);
        let fine = OmegaSet::cell(Word::new(vec![0, 0, 0]));
        assert!(spectral_projection(&tau, &fine).is_err());
    }

    #[test]
    fn model_spec_integral_and_build() {
        let k = square();
        let parts = vec![
            ModelPart {
                omega: OmegaSet::cell(Word::new(vec![0])),
                multiplicity: Multiplicity::Uniform(2),
            },
            ModelPart {
                omega: OmegaSet::cell(Word::new(vec![3])),
                multiplicity: Multiplicity::Uniform(1),
            },
        ];
        let spec = ModelSpec::new(k, parts, 4096).unwrap();
        assert!((spec.multiplicity_integral() - 0.75).abs() < 1e-15);
        let tau = spec.build(1).unwrap();
        assert_eq!(tau.dim(), 4 * 2 + 4);
        assert_eq!(tau.sites().unwrap().last().unwrap().part, 1);
    }
}
