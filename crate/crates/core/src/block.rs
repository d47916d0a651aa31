//! Real matrices stored as a list of principal blocks over disjoint index
//! sets. Entries outside every block are zero.
//!
//! The lab's candidates are block diagonal over spectral cells, and so are
//! their commutators with diagonal tuples; keeping that structure lets the
//! estimators reach several thousand sites without dense `d × d` storage.
//! A dense matrix is the special case of a single block covering all indices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lorentz_ideal::SingularSpectrum;

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    indices: Vec<usize>,
    values: DMatrix<f64>,
}

impl Block {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    dim: usize,
    blocks: Vec<Block>,
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl BlockMatrix {
    /// Validates that index sets are sorted, in range and pairwise disjoint.
    pub fn new(dim: usize, blocks: Vec<(Vec<usize>, DMatrix<f64>)>) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut out = Vec::with_capacity(blocks.len());
        for (indices, values) in blocks {
            if values.nrows() != indices.len() || values.ncols() != indices.len() {
                return Err(Error::input(format!(
                    "block of {} indices carries a {}x{} matrix",
                    indices.len(),
                    values.nrows(),
                    values.ncols()
                )));
            }
            if indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::input("block indices must be strictly increasing"));
            }
            for &i in &indices {
                if i >= dim {
                    return Err(Error::input(format!("block index {i} out of range {dim}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::input(format!("index {i} appears in two blocks")));
                }
            }
            if !indices.is_empty() {
                out.push(Block { indices, values });
            }
        }
        Ok(BlockMatrix { dim, blocks: out })
    }

    pub fn zeros(dim: usize) -> Self {
        BlockMatrix { dim, blocks: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let blocks = entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| Block {
                indices: vec![i],
                values: DMatrix::from_element(1, 1, v),
            })
            .collect();
        BlockMatrix { dim: entries.len(), blocks }
    }

    /// One block covering every index.
    pub fn from_dense(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::input("block matrices are square"));
        }
        let dim = m.nrows();
        if dim == 0 {
            return Ok(Self::zeros(0));
        }
        Ok(BlockMatrix {
            dim,
            blocks: vec![Block { indices: (0..dim).collect(), values: m }],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            for (r, &i) in b.indices.iter().enumerate() {
                for (c, &j) in b.indices.iter().enumerate() {
                    m[(i, j)] = b.values[(r, c)];
                }
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.values.iter().all(|v| v.is_finite()))
    }

    /// Same blocks with new values; `f` receives each block in order.
    pub fn map_blocks<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&Block) -> DMatrix<f64>,
    {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                indices: b.indices.clone(),
                values: f(b),
            })
            .collect();
        BlockMatrix { dim: self.dim, blocks }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_blocks(|b| &b.values * s)
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        self.map_blocks(|b| (&b.values + b.values.transpose()) * 0.5)
    }

    /// `A ⊗ I_m` with index `i ↦ i·m + a`.
    pub fn kron_identity(&self, m: usize) -> Self {
        let blocks = self
            .blocks
            .iter()
            .flat_map(|b| {
                (0..m).map(move |a| Block {
                    indices: b.indices.iter().map(|&i| i * m + a).collect(),
                    values: b.values.clone(),
                })
            })
            .collect();
        BlockMatrix { dim: self.dim * m, blocks }
    }

    /// `A ⊕ B` with `B`'s indices shifted past `A`'s.
    pub fn direct_sum(&self, other: &BlockMatrix) -> Self {
        let shift = self.dim;
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().map(|b| Block {
            indices: b.indices.iter().map(|&i| i + shift).collect(),
            values: b.values.clone(),
        }));
        BlockMatrix { dim: self.dim + other.dim, blocks }
    }

    /// Finest index partition refined by the blocks of every input.
    fn common_groups(dim: usize, mats: &[&BlockMatrix]) -> Vec<Vec<usize>> {
        let mut sets = DisjointSets::new(dim);
        let mut covered = vec![false; dim];
        for m in mats {
            for b in &m.blocks {
                let first = b.indices[0];
                for &i in &b.indices {
                    covered[i] = true;
                    sets.union(first, i);
                }
            }
        }
        let mut slot = vec![usize::MAX; dim];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, _) in covered.iter().enumerate().filter(|(_, &c)| c) {
            let root = sets.find(i);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(i);
        }
        groups
    }

    /// Dense restriction to each group; groups must be unions of this
    /// matrix's blocks.
    fn restrict(&self, groups: &[Vec<usize>]) -> Vec<DMatrix<f64>> {
        let mut owner = vec![(usize::MAX, 0usize); self.dim];
        for (g, idx) in groups.iter().enumerate() {
            for (pos, &i) in idx.iter().enumerate() {
                owner[i] = (g, pos);
            }
        }
        let mut out: Vec<DMatrix<f64>> = groups.iter().map(|g| DMatrix::zeros(g.len(), g.len())).collect();
        for b in &self.blocks {
            let g = owner[b.indices[0]].0;
            let target = &mut out[g];
            for (r, &i) in b.indices.iter().enumerate() {
                let pi = owner[i].1;
                for (c, &j) in b.indices.iter().enumerate() {
                    target[(pi, owner[j].1)] += b.values[(r, c)];
                }
            }
        }
        out
    }

    fn check_dims(mats: &[&BlockMatrix]) -> Result<usize> {
        let dim = mats.first().map(|m| m.dim).unwrap_or(0);
        if mats.iter().any(|m| m.dim != dim) {
            return Err(Error::input("block matrices have different dimensions"));
        }
        Ok(dim)
    }

    /// Sums possibly overlapping principal pieces, merging pieces that share
    /// an index into one block.
    pub fn accumulate(dim: usize, pieces: Vec<(Vec<usize>, DMatrix<f64>)>) -> Result<Self> {
        let mut sets = DisjointSets::new(dim);
        let mut covered = vec![false; dim];
        for (idx, values) in &pieces {
            if values.nrows() != idx.len() || values.ncols() != idx.len() {
                return Err(Error::input("piece shape does not match its indices"));
            }
            for &i in idx {
                if i >= dim {
                    return Err(Error::input(format!("piece index {i} out of range {dim}")));
                }
                covered[i] = true;
                sets.union(idx[0], i);
            }
        }
        let mut owner = vec![(usize::MAX, 0usize); dim];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; dim];
        for (i, _) in covered.iter().enumerate().filter(|(_, &c)| c) {
            let root = sets.find(i);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            owner[i] = (slot[root], groups[slot[root]].len());
            groups[slot[root]].push(i);
        }
        let mut acc: Vec<DMatrix<f64>> = groups.iter().map(|g| DMatrix::zeros(g.len(), g.len())).collect();
        for (idx, values) in pieces {
            if idx.is_empty() {
                continue;
            }
            let target = &mut acc[owner[idx[0]].0];
            for (r, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    target[(owner[i].1, owner[j].1)] += values[(r, c)];
                }
            }
        }
        Ok(BlockMatrix {
            dim,
            blocks: groups
                .into_iter()
                .zip(acc)
                .map(|(indices, values)| Block { indices, values })
                .collect(),
        })
    }

    /// `Σ c_k M_k` on the coarsest common block structure.
    pub fn linear_combination(terms: &[(f64, &BlockMatrix)]) -> Result<Self> {
        let mats: Vec<&BlockMatrix> = terms.iter().map(|(_, m)| *m).collect();
        let dim = Self::check_dims(&mats)?;
        let pieces = terms
            .iter()
            .flat_map(|(c, m)| m.blocks.iter().map(move |b| (b.indices.clone(), &b.values * *c)))
            .collect();
        Self::accumulate(dim, pieces)
    }

    pub fn add(&self, other: &BlockMatrix) -> Result<Self> {
        Self::linear_combination(&[(1.0, self), (1.0, other)])
    }

    pub fn sub(&self, other: &BlockMatrix) -> Result<Self> {
        Self::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    /// Product of several factors, in order.
    pub fn product(factors: &[&BlockMatrix]) -> Result<Self> {
        let dim = Self::check_dims(factors)?;
        let groups = Self::common_groups(dim, factors);
        let mut acc: Option<Vec<DMatrix<f64>>> = None;
        for f in factors {
            let r = f.restrict(&groups);
            acc = Some(match acc {
                None => r,
                Some(prev) => prev.iter().zip(r.iter()).map(|(a, b)| a * b).collect(),
            });
        }
        let acc = acc.unwrap_or_default();
        Ok(BlockMatrix {
            dim,
            blocks: groups
                .into_iter()
                .zip(acc)
                .map(|(indices, values)| Block { indices, values })
                .collect(),
        })
    }

    fn uncovered(&self) -> usize {
        self.dim - self.blocks.iter().map(|b| b.indices.len()).sum::<usize>()
    }

    /// Eigenvalues of the symmetric part, uncovered indices contributing zeros.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.dim);
        for b in &self.blocks {
            let sym = (&b.values + b.values.transpose()) * 0.5;
            out.extend(SymmetricEigen::new(sym).eigenvalues.iter().copied());
        }
        out.extend(std::iter::repeat_n(0.0, self.uncovered()));
        out
    }

    /// `(min, max)` eigenvalue of the symmetric part; `(0, 0)` when empty.
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        let eig = self.symmetric_eigenvalues();
        if eig.is_empty() {
            return (0.0, 0.0);
        }
        eig.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Applies `f` to the eigenvalues of the symmetric part of each block.
    /// Uncovered indices stay zero, so `f(0)` must be `0`.
    pub fn map_eigenvalues<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        debug_assert_eq!(f(0.0), 0.0);
        self.map_blocks(|b| {
            let sym = (&b.values + b.values.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let mapped = eig.eigenvalues.map(&f);
            &eig.eigenvectors * DMatrix::from_diagonal(&mapped) * eig.eigenvectors.transpose()
        })
    }

    /// Singular values over all blocks, padded with zeros to length `dim`.
    pub fn singular_values(&self) -> Result<SingularSpectrum> {
        let mut values: Vec<f64> = Vec::with_capacity(self.dim);
        for b in &self.blocks {
            values.extend(crate::lorentz_ideal::singular_values(&b.values)?.values());
        }
        values.extend(std::iter::repeat_n(0.0, self.uncovered()));
        SingularSpectrum::new(values)
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.values.trace()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.values.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute entry difference against another matrix.
    pub fn max_abs_diff(&self, other: &BlockMatrix) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d
            .blocks
            .iter()
            .flat_map(|b| b.values.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs())))
    }
}

/// Singular values of the column operator `[X_1; …; X_n]` for block
/// matrices; the components are coarsened to a common structure first.
pub fn column_singular_values(components: &[BlockMatrix]) -> Result<SingularSpectrum> {
    let refs: Vec<&BlockMatrix> = components.iter().collect();
    let dim = BlockMatrix::check_dims(&refs)?;
    let groups = BlockMatrix::common_groups(dim, &refs);
    let restricted: Vec<Vec<DMatrix<f64>>> = refs.iter().map(|m| m.restrict(&groups)).collect();
    let mut values: Vec<f64> = Vec::with_capacity(dim);
    for (g, idx) in groups.iter().enumerate() {
        let k = idx.len();
        let mut stacked = DMatrix::zeros(k * components.len(), k);
        for (c, r) in restricted.iter().enumerate() {
            stacked.rows_mut(c * k, k).copy_from(&r[g]);
        }
        values.extend(crate::lorentz_ideal::singular_values(&stacked)?.values());
    }
    let covered: usize = groups.iter().map(|g| g.len()).sum();
    values.extend(std::iter::repeat_n(0.0, dim - covered));
    SingularSpectrum::new(values)
}
