//! Finite-rank positive contractions and the commutator norms they realize.
//!
//! Every candidate here satisfies `0 ≤ A ≤ I` and is evaluated against a
//! tuple through `|[A, τ]|`, either per component (max convention) or through
//! the column modulus (tilde convention). The values are upper estimators at
//! a fixed candidate level; none of them is the quasicentral modulus itself.

mod flatten;
mod projection;
mod refine;
mod symmetrize;

pub use flatten::{flatten_commutator, CandidateSource, FlattenOutcome, CellSource};
pub use projection::{
    estimate_upper, extrapolate, gamma_estimate, projection_constant, cell_projection, EstimatorOptions,
    EstimatorSeries, Extrapolation, GammaEstimate, LevelRecord, Xi,
};
pub use refine::{refine_candidate, RefineOutcome, StepSchedule};
pub use symmetrize::{conditional_expectation, symmetrize};

use crate::block::{column_singular_values, BlockMatrix};
use crate::error::{Error, Result};
use crate::lorentz_ideal::{lorentz_p1_norm, IdealParameter, NormConvention, SingularSpectrum, CLAMP_EPS};
use crate::operator_model::{commutator_blocks, TupleOperator};

/// Slack allowed below a floor projection.
pub const FLOOR_TOL: f64 = 1e-8;

/// A matrix `A` with `0 ≤ A ≤ I`, optionally bounded below by a projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCandidate {
    matrix: BlockMatrix,
    floor: Option<BlockMatrix>,
    rank: usize,
}

impl ContractionCandidate {
    /// Checks the eigenvalue window `[−1e−10, 1 + 1e−10]` and clamps into
    /// `[0, 1]`; with a floor `P`, also `A − P ⪰ −1e−8`.
    pub fn new(matrix: BlockMatrix, floor: Option<BlockMatrix>) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NonFinite("candidate entries".into()));
        }
        let eig = matrix.symmetric_eigenvalues();
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo < -CLAMP_EPS || hi > 1.0 + CLAMP_EPS {
            return Err(Error::input(format!(
                "candidate eigenvalues span [{lo:e}, {hi:e}], outside [0, 1]"
            )));
        }
        let matrix = if lo < 0.0 || hi > 1.0 {
            matrix.map_eigenvalues(|v| v.clamp(0.0, 1.0))
        } else {
            matrix
        };
        if let Some(p) = &floor {
            if p.dim() != matrix.dim() {
                return Err(Error::input("floor and candidate dimensions differ"));
            }
            let (gap, _) = matrix.sub(p)?.eigenvalue_range();
            if gap < -FLOOR_TOL {
                return Err(Error::input(format!("candidate lies below its floor by {:e}", -gap)));
            }
        }
        let rank = eig.iter().filter(|&&v| v > CLAMP_EPS).count();
        Ok(ContractionCandidate { matrix, floor, rank })
    }

    /// For constructions that are feasible by design.
    pub(crate) fn trusted(matrix: BlockMatrix, floor: Option<BlockMatrix>, rank: usize) -> Self {
        ContractionCandidate { matrix, floor, rank }
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.matrix
    }

    pub fn floor(&self) -> Option<&BlockMatrix> {
        self.floor.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn into_matrix(self) -> BlockMatrix {
        self.matrix
    }
}

/// `|[A, τ]|` under a convention together with `‖[A, τ]‖ = max_i ‖[A, T_i]‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub operator_norm: f64,
}

pub fn evaluate(
    a: &BlockMatrix,
    tau: &TupleOperator,
    p: IdealParameter,
    convention: NormConvention,
) -> Result<Evaluation> {
    let comm = commutator_blocks(a, tau)?;
    let spectra: Vec<SingularSpectrum> = comm.iter().map(BlockMatrix::singular_values).collect::<Result<_>>()?;
    let operator_norm = spectra.iter().map(SingularSpectrum::largest).fold(0.0, f64::max);
    let value = match convention {
        NormConvention::Max => spectra.iter().map(|s| lorentz_p1_norm(s, p)).fold(0.0, f64::max),
        NormConvention::Tilde => lorentz_p1_norm(&column_singular_values(&comm)?, p),
    };
    if !value.is_finite() || !operator_norm.is_finite() {
        return Err(Error::NonFinite("commutator norm".into()));
    }
    Ok(Evaluation { value, operator_norm })
}
