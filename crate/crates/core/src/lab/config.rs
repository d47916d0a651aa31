use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{IfsSpec, OmegaSet, Word};
use crate::lorentz_ideal::{IdealParameter, NormConvention};
use crate::operator_model::{ModelPart, ModelSpec, Multiplicity, DEFAULT_MAX_DIM};
use crate::qc_estimator::Xi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::E1 => "E1",
            ExperimentId::E2 => "E2",
            ExperimentId::E3 => "E3",
            ExperimentId::E4 => "E4",
            ExperimentId::E5 => "E5",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown experiment {s:?}, expected E1..E5")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::config(format!("unknown format {other:?}, expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiKind {
    #[default]
    Uniform,
    /// Seeded positive entries.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsConfig {
    pub lambda: f64,
    pub points: Vec<Vec<f64>>,
}

impl Default for IfsConfig {
    fn default() -> Self {
        IfsConfig {
            lambda: 1.0 / 3.0,
            points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative, on the ampliation ratio.
    pub e1: f64,
    /// Relative, on the transport identity.
    pub e2: f64,
    /// Coefficient of variation of the measure coefficient.
    pub e3_cv: f64,
    /// Final singular-carrier value over the `τ_K` estimate.
    pub e4: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            e1: 0.10,
            e2: 1e-10,
            e3_cv: 0.15,
            e4: 0.25,
        }
    }
}

/// A clopen set given by one-based words of a common length, with a uniform
/// multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaCase {
    pub name: String,
    pub level: usize,
    pub words: Vec<Vec<usize>>,
    #[serde(default = "one")]
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumPair {
    pub name: String,
    pub level: usize,
    pub first: Vec<Vec<usize>>,
    pub second: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E2Config {
    /// One-based words; empty means every word of length 1 and 2.
    pub words: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E3Config {
    pub cases: Vec<OmegaCase>,
}

impl Default for E3Config {
    fn default() -> Self {
        let case = |name: &str, level, words: Vec<Vec<usize>>, multiplicity| OmegaCase {
            name: name.into(),
            level,
            words,
            multiplicity,
        };
        E3Config {
            cases: vec![
                case("K", 0, vec![vec![]], 1),
                case("cell-1", 1, vec![vec![1]], 1),
                case("cells-1-4", 1, vec![vec![1], vec![4]], 1),
                case("cell-2-m2", 1, vec![vec![2]], 2),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E4Config {
    /// One-based branch indices of each sub-system.
    pub subsets: Vec<Vec<usize>>,
    pub levels: Vec<[usize; 2]>,
}

impl Default for E4Config {
    fn default() -> Self {
        E4Config {
            subsets: vec![vec![1, 2]],
            levels: vec![[2, 4], [3, 5], [4, 6], [5, 7]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E5Config {
    pub pairs: Vec<SumPair>,
}

impl Default for E5Config {
    fn default() -> Self {
        let pair = |name: &str, first: Vec<Vec<usize>>, second: Vec<Vec<usize>>| SumPair {
            name: name.into(),
            level: 1,
            first,
            second,
        };
        E5Config {
            pairs: vec![
                pair("equal", vec![vec![1]], vec![vec![1]]),
                pair("empty", vec![vec![1]], vec![]),
                pair("disjoint", vec![vec![1]], vec![vec![4]]),
            ],
        }
    }
}

fn one() -> usize {
    1
}

fn default_experiments() -> Vec<ExperimentId> {
    ExperimentId::ALL.to_vec()
}

fn default_conventions() -> Vec<NormConvention> {
    vec![NormConvention::Max, NormConvention::Tilde]
}

fn default_levels() -> Vec<[usize; 2]> {
    vec![[1, 3], [2, 4], [3, 5]]
}

fn default_multiplicities() -> Vec<usize> {
    vec![2, 3]
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

/// Everything a run needs; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub ifs: IfsConfig,
    #[serde(default = "default_experiments")]
    pub experiments: Vec<ExperimentId>,
    /// Defaults to the similarity dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<IdealParameter>,
    #[serde(default = "default_conventions")]
    pub conventions: Vec<NormConvention>,
    /// `(L, L')` pairs relative to each set's base level.
    #[serde(default = "default_levels")]
    pub levels: Vec<[usize; 2]>,
    #[serde(default = "default_multiplicities")]
    pub multiplicities: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub xi: XiKind,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub e2: E2Config,
    #[serde(default)]
    pub e3: E3Config,
    #[serde(default)]
    pub e4: E4Config,
    #[serde(default)]
    pub e5: E5Config,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ifs: IfsConfig::default(),
            experiments: default_experiments(),
            p: None,
            conventions: default_conventions(),
            levels: default_levels(),
            multiplicities: default_multiplicities(),
            seed: 0,
            xi: XiKind::Uniform,
            max_dim: DEFAULT_MAX_DIM,
            output: None,
            format: ReportFormat::Json,
            tolerances: Tolerances::default(),
            e2: E2Config::default(),
            e3: E3Config::default(),
            e4: E4Config::default(),
            e5: E5Config::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn ifs_spec(&self) -> Result<IfsSpec> {
        IfsSpec::new(self.ifs.lambda, self.ifs.points.clone()).map_err(|e| Error::config(e.to_string()))
    }

    /// Explicit `p`, else the similarity dimension.
    pub fn ideal_parameter(&self, ifs: &IfsSpec) -> Result<IdealParameter> {
        match self.p {
            Some(p) => Ok(p),
            None => ifs.ideal_parameter().map_err(|e| Error::config(e.to_string())),
        }
    }

    pub fn level_pairs(&self) -> Vec<(usize, usize)> {
        pairs(&self.levels)
    }

    pub fn xi_choice(&self) -> Xi {
        match self.xi {
            XiKind::Uniform => Xi::Uniform,
            XiKind::Random => Xi::Seeded(self.seed),
        }
    }
}

pub(crate) fn pairs(levels: &[[usize; 2]]) -> Vec<(usize, usize)> {
    levels.iter().map(|&[l, lp]| (l, lp)).collect()
}

pub(crate) fn omega_from(ifs: &IfsSpec, level: usize, words: &[Vec<usize>]) -> Result<OmegaSet> {
    let words = words
        .iter()
        .map(|w| Word::from_one_based(w, ifs.branches()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::config(e.to_string()))?;
    OmegaSet::new(level, words).map_err(|e| Error::config(e.to_string()))
}

pub(crate) fn case_model(ifs: &IfsSpec, case: &OmegaCase, max_dim: usize) -> Result<ModelSpec> {
    if case.multiplicity == 0 {
        return Err(Error::config(format!("case {}: multiplicity must be at least 1", case.name)));
    }
    let omega = omega_from(ifs, case.level, &case.words)?;
    ModelSpec::single(ifs.clone(), omega, case.multiplicity, max_dim)
}

pub(crate) fn pair_models(ifs: &IfsSpec, pair: &SumPair, max_dim: usize) -> Result<[ModelSpec; 3]> {
    let first = omega_from(ifs, pair.level, &pair.first)?;
    let second = omega_from(ifs, pair.level, &pair.second)?;
    let part = |omega: &OmegaSet| ModelPart {
        omega: omega.clone(),
        multiplicity: Multiplicity::Uniform(1),
    };
    Ok([
        ModelSpec::new(ifs.clone(), vec![part(&first)], max_dim)?,
        ModelSpec::new(ifs.clone(), vec![part(&second)], max_dim)?,
        ModelSpec::new(ifs.clone(), vec![part(&first), part(&second)], max_dim)?,
    ])
}

/// Dimension of `model.build(depth)` without building it.
pub(crate) fn predicted_dim(model: &ModelSpec, depth: usize) -> usize {
    let cells = model.ifs().branches().saturating_pow(depth as u32);
    model
        .parts()
        .iter()
        .map(|p| {
            let m = match &p.multiplicity {
                Multiplicity::Uniform(m) => *m,
                Multiplicity::Profile(_) => 1,
            };
            p.omega.words().len().saturating_mul(cells).saturating_mul(m)
        })
        .fold(0usize, usize::saturating_add)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_minimal_toml() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ExperimentConfig::from_toml_str("levelz = [[1, 2]]"), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml_str("[tolerances]\ne6 = 1.0").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig {
            p: Some(IdealParameter::Infinity),
            output: Some("out.json".into()),
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn experiment_ids_parse() {
        assert_eq!("e3".parse::<ExperimentId>().unwrap(), ExperimentId::E3);
        assert!("E6".parse::<ExperimentId>().is_err());
    }
}
