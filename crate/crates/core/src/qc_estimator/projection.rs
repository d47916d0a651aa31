use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate, symmetrize, ContractionCandidate};
use crate::block::BlockMatrix;
use crate::error::{Error, Result};
use crate::fractal::{IfsSpec, OmegaSet, Word};
use crate::lorentz_ideal::{IdealParameter, NormConvention};
use crate::operator_model::{ModelSpec, TupleOperator, DEFAULT_MAX_DIM};

/// Relative change below which successive levels count as stable.
const STABLE_CHANGE: f64 = 0.02;

/// Cyclic vector used by the projection construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Xi {
    #[default]
    Uniform,
    /// Entries drawn uniformly from `[0.5, 1.5)`.
    Seeded(u64),
}

impl Xi {
    /// `None` stands for the all-ones vector.
    pub fn vector(&self, dim: usize) -> Option<Vec<f64>> {
        match self {
            Xi::Uniform => None,
            Xi::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Some((0..dim).map(|_| rng.random_range(0.5..1.5)).collect())
            }
        }
    }
}

/// Site indices grouped by `(part, level-prefix of the word, copy)`, in site
/// order.
pub(crate) fn cell_groups(tau: &TupleOperator, level: usize) -> Result<Vec<Vec<usize>>> {
    let sites = tau
        .sites()
        .ok_or_else(|| Error::input("the projection construction needs a discretized tuple"))?;
    let mut groups: BTreeMap<(usize, Word, usize), Vec<usize>> = BTreeMap::new();
    for (i, s) in sites.iter().enumerate() {
        if s.word.len() < level {
            return Err(Error::input(format!(
                "candidate level {level} is finer than site {}",
                s.word
            )));
        }
        groups.entry((s.part, s.word.prefix(level), s.copy)).or_default().push(i);
    }
    Ok(groups.into_values().collect())
}

/// `P_L`: for every level-`level` cell (per part and copy) the rank-one
/// projection onto `ξ` restricted to the cell's sites. `level` is absolute.
pub fn cell_projection(tau: &TupleOperator, xi: Option<&[f64]>, level: usize) -> Result<ContractionCandidate> {
    if let Some(x) = xi {
        if x.len() != tau.dim() {
            return Err(Error::input(format!("xi has length {}, tuple dimension is {}", x.len(), tau.dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("xi".into()));
        }
    }
    let mut blocks = Vec::new();
    for idx in cell_groups(tau, level)? {
        let v = DVector::from_iterator(idx.len(), idx.iter().map(|&i| xi.map_or(1.0, |x| x[i])));
        let n2 = v.norm_squared();
        if n2 == 0.0 {
            continue;
        }
        blocks.push((idx, &v * v.transpose() / n2));
    }
    if blocks.is_empty() && tau.dim() > 0 {
        return Err(Error::Degenerate("xi vanishes on every cell".into()));
    }
    let rank = blocks.len();
    Ok(ContractionCandidate::trusted(BlockMatrix::new(tau.dim(), blocks)?, None, rank))
}

/// `c = p·2^{1+1/p}·diam K` with `μ(K) = 1`; `None` at `p = ∞`.
pub fn projection_constant(diameter: f64, p: IdealParameter) -> Option<f64> {
    match p {
        IdealParameter::Finite(p) => Some(p * 2f64.powf(1.0 + 1.0 / p) * diameter),
        IdealParameter::Infinity => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Three successive values within 2% of each other.
    Stabilized,
    /// No stable run; the last value is reported.
    LastLevel,
    Empty,
}

/// Value at the last level closing a stable run of three, else the last
/// value with `converged = false`.
pub fn extrapolate(values: &[f64]) -> (f64, Extrapolation, bool) {
    let change = |a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (b - a).abs() / scale
        }
    };
    let Some(&last) = values.last() else {
        return (0.0, Extrapolation::Empty, true);
    };
    for i in (2..values.len()).rev() {
        if change(values[i - 2], values[i - 1]) < STABLE_CHANGE && change(values[i - 1], values[i]) < STABLE_CHANGE {
            return (values[i], Extrapolation::Stabilized, true);
        }
    }
    (last, Extrapolation::LastLevel, false)
}

/// One `(L, L')` evaluation. Levels are relative to the model's base level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub ambient: usize,
    pub dim: usize,
    pub rank: usize,
    pub value: f64,
    pub operator_norm: f64,
    /// `2λ^ℓ·diam K` at absolute candidate level `ℓ`.
    pub operator_bound: f64,
    /// Largest singular value bound times the sum of the first `r` weights,
    /// `r` the rank bound of the commutator.
    pub weight_bound: f64,
    /// `c·S^{1/p}`, finite `p` only.
    pub c_bound: Option<f64>,
    /// `S = #blocks·λ^{ℓp}`, which is the μ-measure of the covered cells when
    /// `p` is the similarity dimension.
    pub support_content: Option<f64>,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSeries {
    pub p: IdealParameter,
    pub convention: NormConvention,
    pub records: Vec<LevelRecord>,
    pub extrapolated: f64,
    pub method: Extrapolation,
    pub converged: bool,
}

impl EstimatorSeries {
    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn last_value(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.value)
    }

    pub fn record_at(&self, level: usize, ambient: usize) -> Option<&LevelRecord> {
        self.records.iter().find(|r| r.level == level && r.ambient == ambient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatorOptions {
    pub xi: Xi,
    /// Replace each candidate `B` by its conditional expectation onto
    /// operators of the form `A ⊗ I_m`.
    pub symmetrize: Option<usize>,
}

fn check_levels(levels: &[(usize, usize)]) -> Result<()> {
    if let Some(&(l, lp)) = levels.iter().find(|(l, lp)| l > lp) {
        return Err(Error::input(format!("candidate level {l} exceeds ambient level {lp}")));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("level pairs must be strictly increasing"));
    }
    Ok(())
}

fn weight_sum(p: IdealParameter, count: usize) -> f64 {
    (1..=count).map(|j| p.weight(j)).sum()
}

/// Builds `P_L` on `τ` at ambient depth `L'` for each pair and records
/// `|[P_L, τ]|` with its explicit bounds.
pub fn estimate_upper(
    model: &ModelSpec,
    p: IdealParameter,
    convention: NormConvention,
    levels: &[(usize, usize)],
    options: &EstimatorOptions,
) -> Result<EstimatorSeries> {
    check_levels(levels)?;
    let ifs = model.ifs();
    let arity = ifs.ambient_dim() as f64;
    let mut records = Vec::with_capacity(levels.len());
    for &(level, ambient) in levels {
        let absolute = model.base_level() + level;
        let scale = ifs.ratio().powi(absolute as i32) * ifs.diameter();
        let (dim, rank, eval) = if model.is_empty() {
            (0, 0, super::Evaluation { value: 0.0, operator_norm: 0.0 })
        } else {
            let tau = model.build(ambient)?;
            let xi = options.xi.vector(tau.dim());
            let mut candidate = cell_projection(&tau, xi.as_deref(), absolute)?;
            if let Some(m) = options.symmetrize {
                candidate = symmetrize(&candidate, m)?;
            }
            let eval = evaluate(candidate.matrix(), &tau, p, convention)?;
            (tau.dim(), candidate.rank(), eval)
        };
        let (largest, count) = match convention {
            NormConvention::Max => (scale / 2.0, 2 * rank),
            NormConvention::Tilde => (arity.sqrt() * scale / 2.0, (arity as usize + 1) * rank),
        };
        let weight_bound = largest * weight_sum(p, count.min(dim));
        let support_content = match p {
            IdealParameter::Finite(pv) => Some(rank as f64 * ifs.ratio().powf(absolute as f64 * pv)),
            IdealParameter::Infinity => None,
        };
        let c_bound = projection_constant(ifs.diameter(), p)
            .zip(support_content)
            .map(|(c, s)| c * s.powf(p.reciprocal()));
        let operator_bound = 2.0 * scale;
        let slack = |b: f64| b * (1.0 + 1e-12) + 1e-15;
        let within_bounds = eval.operator_norm <= slack(operator_bound)
            && eval.value <= slack(weight_bound)
            && c_bound.is_none_or(|c| eval.value <= slack(c));
        records.push(LevelRecord {
            level,
            ambient,
            dim,
            rank,
            value: eval.value,
            operator_norm: eval.operator_norm,
            operator_bound,
            weight_bound,
            c_bound,
            support_content,
            within_bounds,
        });
    }
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let (extrapolated, method, converged) = extrapolate(&values);
    Ok(EstimatorSeries {
        p,
        convention,
        records,
        extrapolated,
        method,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// `(extrapolated estimate for τ_K)^p / μ(K)` with `μ(K) = 1`.
    pub gamma: f64,
    pub series: EstimatorSeries,
}

/// Requires a finite `p > 1`.
pub fn gamma_estimate(
    ifs: &IfsSpec,
    p: IdealParameter,
    levels: &[(usize, usize)],
    options: &EstimatorOptions,
) -> Result<GammaEstimate> {
    let pv = match p {
        IdealParameter::Finite(v) if v > 1.0 => v,
        _ => return Err(Error::input(format!("the measure coefficient needs finite p > 1, got {p}"))),
    };
    let model = ModelSpec::single(ifs.clone(), OmegaSet::whole(), 1, DEFAULT_MAX_DIM)?;
    let series = estimate_upper(&model, p, NormConvention::Max, levels, options)?;
    Ok(GammaEstimate {
        gamma: series.extrapolated.powf(pv),
        series,
    })
}
