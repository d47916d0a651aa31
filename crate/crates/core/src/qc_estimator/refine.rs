use nalgebra::{DMatrix, SymmetricEigen};

use super::ContractionCandidate;
use crate::block::BlockMatrix;
use crate::error::{Error, Result};
use crate::lorentz_ideal::{IdealParameter, NormConvention};
use crate::operator_model::{Component, TupleOperator};

/// Relative gap within which components count as tied for the maximum.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `η₀/√(t+1)` at step `t`.
    InverseSqrt(f64),
}

impl StepSchedule {
    fn at(self, t: usize) -> f64 {
        match self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InverseSqrt(eta) => eta / ((t + 1) as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub candidate: ContractionCandidate,
    pub initial: f64,
    pub value: f64,
    pub steps_taken: usize,
    pub improved: bool,
}

/// `[X, T]` for one component.
fn bracket(x: &DMatrix<f64>, c: &Component) -> DMatrix<f64> {
    match c {
        Component::Diagonal(t) => DMatrix::from_fn(x.nrows(), x.ncols(), |j, k| x[(j, k)] * (t[k] - t[j])),
        Component::Dense(t) => x * t - t * x,
    }
}

/// Value and one subgradient `U·diag(w)·Vᵀ` of `X ↦ Σ w_j s_j(X)`.
fn lorentz_subgradient(x: &DMatrix<f64>, p: IdealParameter) -> (f64, DMatrix<f64>) {
    let svd = x.clone().svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return (f64::NAN, DMatrix::zeros(x.nrows(), x.ncols()));
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut value = 0.0;
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for (rank, &k) in order.iter().enumerate() {
        let s = svd.singular_values[k];
        if s <= 0.0 {
            continue;
        }
        let w = p.weight(rank + 1);
        value += w * s;
        g += u.column(k) * v_t.row(k) * w;
    }
    (value, g)
}

/// Objective and gradient with respect to `A`.
fn objective(
    a: &DMatrix<f64>,
    tau: &TupleOperator,
    p: IdealParameter,
    convention: NormConvention,
) -> (f64, DMatrix<f64>) {
    let comps = tau.components();
    let d = a.nrows();
    match convention {
        NormConvention::Max => {
            let parts: Vec<(f64, DMatrix<f64>)> = comps.iter().map(|c| lorentz_subgradient(&bracket(a, c), p)).collect();
            let best = parts.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<usize> = (0..parts.len())
                .filter(|&i| parts[i].0 >= best - TIE_TOL * best.abs().max(1.0))
                .collect();
            let mut grad = DMatrix::zeros(d, d);
            for &i in &tied {
                grad += bracket(&parts[i].1, &comps[i]);
            }
            (best.max(0.0), grad / tied.len().max(1) as f64)
        }
        NormConvention::Tilde => {
            let mut stacked = DMatrix::zeros(d * comps.len(), d);
            for (i, c) in comps.iter().enumerate() {
                stacked.rows_mut(i * d, d).copy_from(&bracket(a, c));
            }
            let (value, g) = lorentz_subgradient(&stacked, p);
            let mut grad = DMatrix::zeros(d, d);
            for (i, c) in comps.iter().enumerate() {
                grad += bracket(&g.rows(i * d, d).into_owned(), c);
            }
            (value, grad)
        }
    }
}

fn clip(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|v| v.clamp(0.0, 1.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Symmetrize, clip to `[0, 1]`, impose `A = P + (I−P)A(I−P)`, clip again.
fn project(a: &DMatrix<f64>, floor: &DMatrix<f64>) -> DMatrix<f64> {
    let clipped = clip(a);
    let comp = DMatrix::identity(a.nrows(), a.ncols()) - floor;
    clip(&(floor + &comp * clipped * &comp))
}

/// Projected subgradient descent on `A ↦ |[A, τ]|` over `P ≤ A ≤ I`,
/// returning the best iterate seen, `A0` included.
pub fn refine_candidate(
    tau: &TupleOperator,
    p: IdealParameter,
    convention: NormConvention,
    a0: &ContractionCandidate,
    floor: &BlockMatrix,
    steps: usize,
    schedule: StepSchedule,
) -> Result<RefineOutcome> {
    let d = tau.dim();
    if a0.dim() != d || floor.dim() != d {
        return Err(Error::input("candidate, floor and tuple dimensions differ"));
    }
    let floor_dense = floor.to_dense();
    if (&floor_dense * &floor_dense - &floor_dense).amax() > 1e-10 {
        return Err(Error::input("floor is not a projection"));
    }
    ContractionCandidate::new(a0.matrix().clone(), Some(floor.clone()))
        .map_err(|e| Error::input(format!("starting candidate is infeasible: {e}")))?;
    let mut a = a0.matrix().to_dense();
    let (initial, mut grad) = objective(&a, tau, p, convention);
    if !initial.is_finite() {
        return Err(Error::NonFinite("objective at the starting candidate".into()));
    }
    let mut best = (initial, None::<DMatrix<f64>>);
    let mut taken = 0;
    for t in 0..steps {
        let sym = (&grad + grad.transpose()) * 0.5;
        let norm = sym.norm();
        if norm == 0.0 {
            break;
        }
        a = project(&(&a - sym * (schedule.at(t) / norm)), &floor_dense);
        let (value, g) = objective(&a, tau, p, convention);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("objective at step {t}")));
        }
        taken = t + 1;
        grad = g;
        if value < best.0 {
            best = (value, Some(a.clone()));
        }
    }
    let (value, best_matrix) = best;
    let candidate = match best_matrix {
        None => a0.clone(),
        Some(m) => ContractionCandidate::new(BlockMatrix::from_dense(m)?, Some(floor.clone()))?,
    };
    Ok(RefineOutcome {
        improved: value < initial,
        candidate,
        initial,
        value,
        steps_taken: taken,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn toy_descends_toward_commuting() {
        let tau = TupleOperator::raw(vec![dmatrix![0.0, 0.0; 0.0, 1.0]]).unwrap();
        let a0 = ContractionCandidate::new(BlockMatrix::from_dense(dmatrix![0.5, 0.5; 0.5, 0.5]).unwrap(), None).unwrap();
        let out = refine_candidate(
            &tau,
            IdealParameter::Finite(1.5),
            NormConvention::Max,
            &a0,
            &BlockMatrix::zeros(2),
            200,
            StepSchedule::InverseSqrt(0.2),
        )
        .unwrap();
        assert!(out.initial > 0.8);
        assert!(out.value < 0.05 * out.initial, "{}", out.value);
    }

    #[test]
    fn identity_floor_pins_candidate() {
        let tau = TupleOperator::raw(vec![dmatrix![0.0, 1.0; 1.0, 0.0]]).unwrap();
        let id = ContractionCandidate::new(BlockMatrix::identity(2), None).unwrap();
        let out = refine_candidate(
            &tau,
            IdealParameter::Infinity,
            NormConvention::Tilde,
            &id,
            &BlockMatrix::identity(2),
            10,
            StepSchedule::Constant(0.1),
        )
        .unwrap();
        assert_eq!(out.value, 0.0);
        assert!(!out.improved);
    }
}
