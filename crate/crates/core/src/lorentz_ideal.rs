//! Singular values and the Lorentz `(p,1)` ideal norm.
//!
//! The norm of an operator `T` with singular values `s_1 ≥ s_2 ≥ …` is
//! `Σ_j s_j · j^(-1+1/p)`. At `p = 1` it is the trace norm; at `p = ∞` the
//! weights are `j^(-1)` (the Macaev norm). Tuples of operators are normed
//! either by the maximum over components or by the norm of the column
//! modulus `(T_1*T_1 + … + T_n*T_n)^(1/2)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{ComplexField, DMatrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative threshold below which negative singular values are clamped to zero.
pub const CLAMP_EPS: f64 = 1e-10;

/// Non-increasing sequence of non-negative reals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Sorts `values` into non-increasing order, clamping entries in
    /// `[-1e-10·max, 0)` to zero.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("singular value {bad}")));
        }
        let largest = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let floor = -CLAMP_EPS * largest;
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v < floor {
                    return Err(Error::input(format!(
                        "negative singular value {v} below clamp threshold {floor}"
                    )));
                }
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(SingularSpectrum { values })
    }

    pub fn empty() -> Self {
        SingularSpectrum { values: Vec::new() }
    }

    /// Multiset union of several spectra, e.g. the blocks of a block-diagonal
    /// operator.
    pub fn merge<I>(parts: I) -> Self
    where
        I: IntoIterator<Item = SingularSpectrum>,
    {
        let mut values: Vec<f64> = parts.into_iter().flat_map(|s| s.values).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        SingularSpectrum { values }
    }

    /// Each value repeated `m` times, the spectrum of `X ⊗ I_m`.
    pub fn repeated(&self, m: usize) -> Self {
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, m))
            .collect();
        SingularSpectrum { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest singular value, zero for an empty spectrum.
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Number of entries above `tol · largest`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        let cut = tol * self.largest();
        self.values.iter().filter(|&&v| v > cut).count()
    }
}

/// The ideal exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdealParameter {
    Finite(f64),
    Infinity,
}

impl IdealParameter {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::input(format!("ideal parameter p = {p} must satisfy p >= 1")));
        }
        if p.is_infinite() {
            Ok(IdealParameter::Infinity)
        } else {
            Ok(IdealParameter::Finite(p))
        }
    }

    /// `p` as a float, `f64::INFINITY` for the symbolic value.
    pub fn value(self) -> f64 {
        match self {
            IdealParameter::Finite(p) => p,
            IdealParameter::Infinity => f64::INFINITY,
        }
    }

    /// `1/p`, exactly zero at infinity.
    pub fn reciprocal(self) -> f64 {
        match self {
            IdealParameter::Finite(p) => 1.0 / p,
            IdealParameter::Infinity => 0.0,
        }
    }

    /// Weight `j^(-1+1/p)` of the `j`-th singular value (1-based).
    pub fn weight(self, j: usize) -> f64 {
        debug_assert!(j >= 1);
        match self {
            IdealParameter::Finite(1.0) => 1.0,
            IdealParameter::Finite(p) => (j as f64).powf(-1.0 + 1.0 / p),
            IdealParameter::Infinity => 1.0 / j as f64,
        }
    }

    /// `m^(1/p)`, the ampliation factor.
    pub fn ampliation_factor(self, m: usize) -> f64 {
        (m as f64).powf(self.reciprocal())
    }
}

impl fmt::Display for IdealParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdealParameter::Finite(p) => write!(f, "{p}"),
            IdealParameter::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for IdealParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(IdealParameter::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::input(format!("cannot parse ideal parameter '{other}'")))?;
                IdealParameter::new(p)
            }
        }
    }
}

impl Serialize for IdealParameter {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IdealParameter::Finite(p) => serializer.serialize_f64(*p),
            IdealParameter::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for IdealParameter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(p) => IdealParameter::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// How an ideal norm is extended from operators to tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormConvention {
    /// Maximum of the component norms.
    Max,
    /// Norm of the column modulus `(Σ T_i*T_i)^(1/2)`; rotation invariant.
    Tilde,
}

impl NormConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            NormConvention::Max => "max",
            NormConvention::Tilde => "tilde",
        }
    }
}

impl fmt::Display for NormConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(NormConvention::Max),
            "tilde" => Ok(NormConvention::Tilde),
            other => Err(Error::input(format!("unknown norm convention '{other}'"))),
        }
    }
}

/// Singular values of an arbitrary rectangular real or complex matrix.
pub fn singular_values<T>(m: &DMatrix<T>) -> Result<SingularSpectrum>
where
    T: ComplexField<RealField = f64>,
{
    if m.iter().any(|x| !x.clone().is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(SingularSpectrum::empty());
    }
    let values = m.clone().singular_values();
    SingularSpectrum::new(values.iter().copied().collect())
}

pub fn lorentz_p1_norm(s: &SingularSpectrum, p: IdealParameter) -> f64 {
    s.values
        .iter()
        .enumerate()
        .map(|(j, &v)| v * p.weight(j + 1))
        .sum()
}

/// `|X ⊗ I_m|` from the spectrum of `X`: the `k`-th singular value carries
/// the weights of positions `m(k-1)+1 ..= mk`.
pub fn ampliation_norm_grouped(s: &SingularSpectrum, m: usize, p: IdealParameter) -> Result<f64> {
    if m == 0 {
        return Err(Error::input("ampliation multiplicity must be at least 1"));
    }
    let total = s
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let group: f64 = (m * k + 1..=m * (k + 1)).map(|j| p.weight(j)).sum();
            v * group
        })
        .sum();
    Ok(total)
}

fn check_shapes<T: nalgebra::Scalar>(tuple: &[DMatrix<T>]) -> Result<(usize, usize)> {
    let first = tuple
        .first()
        .ok_or_else(|| Error::input("tuple must have at least one component"))?;
    let shape = first.shape();
    if let Some((i, c)) = tuple.iter().enumerate().find(|(_, c)| c.shape() != shape) {
        return Err(Error::input(format!(
            "component {i} has shape {:?}, expected {:?}",
            c.shape(),
            shape
        )));
    }
    Ok(shape)
}

pub fn tuple_norm_max<T>(tuple: &[DMatrix<T>], p: IdealParameter) -> Result<f64>
where
    T: ComplexField<RealField = f64>,
{
    check_shapes(tuple)?;
    tuple.iter().try_fold(0.0_f64, |acc, c| {
        Ok(acc.max(lorentz_p1_norm(&singular_values(c)?, p)))
    })
}

/// Singular values of the column operator `[T_1; …; T_n]`, which are the
/// eigenvalues of `(Σ T_i*T_i)^(1/2)`.
pub fn column_modulus_spectrum<T>(tuple: &[DMatrix<T>]) -> Result<SingularSpectrum>
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = check_shapes(tuple)?;
    let mut stacked = DMatrix::<T>::zeros(rows * tuple.len(), cols);
    for (i, c) in tuple.iter().enumerate() {
        stacked.rows_mut(i * rows, rows).copy_from(c);
    }
    singular_values(&stacked)
}

pub fn tuple_norm_tilde<T>(tuple: &[DMatrix<T>], p: IdealParameter) -> Result<f64>
where
    T: ComplexField<RealField = f64>,
{
    Ok(lorentz_p1_norm(&column_modulus_spectrum(tuple)?, p))
}

pub fn tuple_norm<T>(tuple: &[DMatrix<T>], p: IdealParameter, convention: NormConvention) -> Result<f64>
where
    T: ComplexField<RealField = f64>,
{
    match convention {
        NormConvention::Max => tuple_norm_max(tuple, p),
        NormConvention::Tilde => tuple_norm_tilde(tuple, p),
    }
}

/// `max_i ‖T_i‖`.
pub fn operator_norm_tuple<T>(tuple: &[DMatrix<T>]) -> Result<f64>
where
    T: ComplexField<RealField = f64>,
{
    check_shapes(tuple)?;
    tuple
        .iter()
        .try_fold(0.0_f64, |acc, c| Ok(acc.max(singular_values(c)?.largest())))
}
