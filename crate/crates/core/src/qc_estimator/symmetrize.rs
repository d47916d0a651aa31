use nalgebra::DMatrix;

use super::ContractionCandidate;
use crate::block::BlockMatrix;
use crate::error::{Error, Result};

/// `Φ(B) = (1/m)·Tr_2(B) ⊗ I_m` for `B` on `ℂ^d ⊗ ℂ^m` with basis index
/// `i·m + a`.
///
/// This is the trace-preserving conditional expectation onto `B(ℂ^d) ⊗ I_m`,
/// so it agrees with the average over any unitary group whose commutant is
/// that algebra.
pub fn conditional_expectation(b: &BlockMatrix, m: usize) -> Result<BlockMatrix> {
    if m == 0 || !b.dim().is_multiple_of(m) {
        return Err(Error::input(format!(
            "dimension {} is not divisible by multiplicity {m}",
            b.dim()
        )));
    }
    let weight = 1.0 / m as f64;
    let mut pieces = Vec::with_capacity(b.blocks().len());
    for blk in b.blocks() {
        let idx = blk.indices();
        let mut cells: Vec<usize> = idx.iter().map(|&i| i / m).collect();
        cells.dedup();
        let pos: Vec<usize> = idx.iter().map(|&i| cells.binary_search(&(i / m)).unwrap_or(0)).collect();
        let mut reduced = DMatrix::zeros(cells.len(), cells.len());
        for (x, &i) in idx.iter().enumerate() {
            for (y, &j) in idx.iter().enumerate() {
                if i % m == j % m {
                    reduced[(pos[x], pos[y])] += blk.values()[(x, y)] * weight;
                }
            }
        }
        pieces.push((cells, reduced));
    }
    Ok(BlockMatrix::accumulate(b.dim() / m, pieces)?.kron_identity(m))
}

/// `Φ` applied to a candidate. A floor of the form `Q ⊗ I_m` is preserved
/// because `Φ` is positive and fixes it.
pub fn symmetrize(b: &ContractionCandidate, m: usize) -> Result<ContractionCandidate> {
    let matrix = conditional_expectation(b.matrix(), m)?;
    let floor = b.floor().map(|f| conditional_expectation(f, m)).transpose()?;
    ContractionCandidate::new(matrix, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn half_identity_from_corner() {
        let b = BlockMatrix::diagonal(&[1.0, 0.0]);
        let phi = conditional_expectation(&b, 2).unwrap();
        assert_eq!(phi.to_dense(), DMatrix::identity(2, 2) * 0.5);
    }

    #[test]
    fn fixes_ampliations() {
        let a = BlockMatrix::from_dense(dmatrix![0.6, 0.2; 0.2, 0.3]).unwrap().kron_identity(3);
        let phi = conditional_expectation(&a, 3).unwrap();
        assert!(phi.max_abs_diff(&a).unwrap() < 1e-15);
    }

    #[test]
    fn indivisible_dimension() {
        assert!(conditional_expectation(&BlockMatrix::identity(5), 2).is_err());
        assert!(conditional_expectation(&BlockMatrix::identity(4), 0).is_err());
    }
}
