use nalgebra::DVector;

use super::projection::cell_groups;
use super::{evaluate, ContractionCandidate};
use crate::block::BlockMatrix;
use crate::error::{Error, Result};
use crate::lorentz_ideal::{IdealParameter, NormConvention};
use crate::operator_model::{Component, TupleOperator};

/// Upper limit on `N`; beyond it the step count stops being desk scale.
const MAX_AVERAGED: usize = 100_000;

/// Produces candidates dominating a given projection.
pub trait CandidateSource {
    /// A candidate `A` with `Q ≤ A ≤ I`. `support` marks the sites met by
    /// the range of `Q`.
    fn propose(&mut self, tau: &TupleOperator, floor: &BlockMatrix, support: &[bool]) -> Result<BlockMatrix>;
}

/// Extends `Q` by the level-`level` cell projections of up to
/// `blocks_per_step` cells that `Q` does not yet meet.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSource {
    /// Absolute cell level.
    pub level: usize,
    pub blocks_per_step: usize,
    pub xi: Option<Vec<f64>>,
}

impl CandidateSource for CellSource {
    fn propose(&mut self, tau: &TupleOperator, floor: &BlockMatrix, support: &[bool]) -> Result<BlockMatrix> {
        let mut pieces: Vec<(Vec<usize>, nalgebra::DMatrix<f64>)> =
            floor.blocks().iter().map(|b| (b.indices().to_vec(), b.values().clone())).collect();
        let mut added = 0;
        for group in cell_groups(tau, self.level)? {
            if added == self.blocks_per_step {
                break;
            }
            let free: Vec<usize> = group.into_iter().filter(|&i| !support[i]).collect();
            let v = DVector::from_iterator(
                free.len(),
                free.iter().map(|&i| self.xi.as_ref().map_or(1.0, |x| x[i])),
            );
            let n2 = v.norm_squared();
            if n2 == 0.0 {
                continue;
            }
            pieces.push((free, &v * v.transpose() / n2));
            added += 1;
        }
        BlockMatrix::accumulate(tau.dim(), pieces)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlattenOutcome {
    /// `B_N = N⁻¹(A_4 + A_8 + … + A_{4N})` with floor `P`.
    pub candidate: ContractionCandidate,
    pub n: usize,
    pub value: f64,
    pub operator_norm: f64,
    /// `2‖τ‖/N`.
    pub operator_bound: f64,
    /// Largest `|[A_j, τ]|` over all source outputs.
    pub source_max: f64,
    /// First step whose successor projection is `I`.
    pub saturated_at: Option<usize>,
    /// The space was exhausted before step `4N`; later candidates are forced
    /// to equal `I`.
    pub truncated: bool,
}

fn support_of(m: &BlockMatrix) -> Vec<bool> {
    let mut out = vec![false; m.dim()];
    for b in m.blocks() {
        for (r, &i) in b.indices().iter().enumerate() {
            if b.values().row(r).iter().any(|&v| v != 0.0) {
                out[i] = true;
            }
        }
    }
    out
}

/// Sites met by `τ_i·Q` for every component.
fn image_support(tau: &TupleOperator, support: &[bool]) -> Vec<bool> {
    let mut out = support.to_vec();
    for c in tau.components() {
        if let Component::Dense(t) = c {
            for (col, _) in support.iter().enumerate().filter(|(_, &s)| s) {
                for (row, flag) in out.iter_mut().enumerate() {
                    if t[(row, col)] != 0.0 {
                        *flag = true;
                    }
                }
            }
        }
    }
    out
}

/// Smallest `N ≥ 1` with `2‖τ‖ ≤ N·ε`.
fn averaging_count(norm: f64, eps: f64) -> Result<usize> {
    let target = 2.0 * norm;
    let mut n = (target / eps).ceil().max(1.0);
    if n > MAX_AVERAGED as f64 {
        return Err(Error::resource(format!("flattening would average {n} candidates")));
    }
    while target > n * eps {
        n += 1.0;
    }
    while n > 1.0 && target <= (n - 1.0) * eps {
        n -= 1.0;
    }
    Ok(n as usize)
}

/// Builds nested projections `P = P_1 ≤ P_2 ≤ …` with `P_{j+1}` the site
/// support of `P_j`, `τP_j` and `A_j`, where `A_j` comes from `source`, and
/// returns the average of every fourth candidate.
pub fn flatten_commutator<S: CandidateSource>(
    tau: &TupleOperator,
    start: &BlockMatrix,
    eps: f64,
    source: &mut S,
    p: IdealParameter,
    convention: NormConvention,
) -> Result<FlattenOutcome> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::input(format!("flattening target must be positive, got {eps}")));
    }
    if start.dim() != tau.dim() {
        return Err(Error::input("starting projection and tuple dimensions differ"));
    }
    let squared = BlockMatrix::product(&[start, start])?;
    if squared.max_abs_diff(start)? > 1e-10 || start.max_abs_diff(&start.symmetrized())? > 1e-12 {
        return Err(Error::input("starting operator is not an orthogonal projection"));
    }
    let norm = tau.operator_norm();
    let n = averaging_count(norm, eps)?;
    let mut current = start.clone();
    let mut support = image_support(tau, &support_of(start));
    let mut kept = Vec::with_capacity(n);
    let mut source_max = 0.0_f64;
    let mut saturated_at = None;
    for j in 1..=4 * n {
        let a = source.propose(tau, &current, &support)?;
        source_max = source_max.max(evaluate(&a, tau, p, convention)?.value);
        let a_support = support_of(&a);
        let next: Vec<bool> = support.iter().zip(&a_support).map(|(&x, &y)| x || y).collect();
        let next = image_support(tau, &next);
        if j % 4 == 0 {
            kept.push(a);
        }
        if saturated_at.is_none() && next.iter().all(|&s| s) {
            saturated_at = Some(j);
        }
        current = BlockMatrix::diagonal(&next.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect::<Vec<_>>());
        support = next;
    }
    let weight = 1.0 / n as f64;
    let terms: Vec<(f64, &BlockMatrix)> = kept.iter().map(|a| (weight, a)).collect();
    let b = BlockMatrix::linear_combination(&terms)?;
    let eval = evaluate(&b, tau, p, convention)?;
    let candidate = ContractionCandidate::new(b, Some(start.clone()))?;
    Ok(FlattenOutcome {
        candidate,
        n,
        value: eval.value,
        operator_norm: eval.operator_norm,
        operator_bound: 2.0 * norm / n as f64,
        source_max,
        saturated_at,
        truncated: saturated_at.is_some_and(|s| s < 4 * n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{build_ifs, OmegaSet};
    use crate::operator_model::{discretize, Multiplicity};
    use crate::qc_estimator::cell_projection;

    fn tau64() -> TupleOperator {
        let k = build_ifs(1.0 / 3.0, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        discretize(&k, &OmegaSet::whole(), 3, &Multiplicity::Uniform(1), 4096).unwrap()
    }

    #[test]
    fn count_rule() {
        assert_eq!(averaging_count(1.0, 2.0).unwrap(), 1);
        assert_eq!(averaging_count(1.0, 0.2).unwrap(), 10);
        assert_eq!(averaging_count(0.0, 0.1).unwrap(), 1);
    }

    #[test]
    fn large_target_uses_one_average() {
        let tau = tau64();
        let start = cell_projection(&tau, None, 1).unwrap().into_matrix();
        let mut src = CellSource { level: 2, blocks_per_step: 1, xi: None };
        let p = IdealParameter::Finite(1.5);
        let out = flatten_commutator(&tau, &start, 2.0 * tau.operator_norm(), &mut src, p, NormConvention::Max).unwrap();
        assert_eq!(out.n, 1);
    }

    #[test]
    fn rejects_non_projection() {
        let tau = tau64();
        let half = BlockMatrix::identity(64).scale(0.5);
        let mut src = CellSource { level: 2, blocks_per_step: 1, xi: None };
        let p = IdealParameter::Finite(1.5);
        assert!(flatten_commutator(&tau, &half, 0.1, &mut src, p, NormConvention::Max).is_err());
    }
}
