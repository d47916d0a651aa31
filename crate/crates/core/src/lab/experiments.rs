use std::time::Instant;

use rayon::prelude::*;

use super::config::{case_model, pair_models, pairs, predicted_dim, ExperimentConfig, ExperimentId, OmegaCase};
use super::report::{CaseSeries, EstimateReport, ExperimentReport, RatioRow, Rule, Verdict};
use crate::error::{Error, Result};
use crate::fractal::{IfsSpec, OmegaSet, Word};
use crate::lorentz_ideal::{IdealParameter, NormConvention};
use crate::operator_model::ModelSpec;
use crate::qc_estimator::{estimate_upper, EstimatorOptions, EstimatorSeries};

/// Absolute slack on the exact inequalities.
const INEQUALITY_SLACK: f64 = 1e-8;

/// One estimator series to compute.
#[derive(Debug, Clone)]
struct Job {
    case: String,
    model: ModelSpec,
    convention: NormConvention,
    levels: Vec<(usize, usize)>,
    options: EstimatorOptions,
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct Lab {
    config: ExperimentConfig,
    ifs: IfsSpec,
    p: IdealParameter,
    levels: Vec<(usize, usize)>,
    options: EstimatorOptions,
}

fn check_pairs(name: &str, levels: &[(usize, usize)]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::config(format!("{name} must list at least one (L, L') pair")));
    }
    if levels.iter().any(|(l, lp)| l > lp) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(format!("{name} must be increasing pairs with L <= L'")));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::NAN
    } else {
        num / den
    }
}

fn power(x: f64, p: IdealParameter) -> f64 {
    match p {
        IdealParameter::Finite(p) => x.powf(p),
        IdealParameter::Infinity => f64::NAN,
    }
}

impl Lab {
    /// Validates the configuration and checks every planned model against
    /// the dimension cap.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let ifs = config.ifs_spec()?;
        if !ifs.validate_separation() {
            return Err(Error::config("the level-1 cells of the IFS overlap"));
        }
        let p = config.ideal_parameter(&ifs)?;
        if config.experiments.is_empty() || config.conventions.is_empty() {
            return Err(Error::config("experiments and conventions must be non-empty"));
        }
        let levels = config.level_pairs();
        check_pairs("levels", &levels)?;
        let tol = &config.tolerances;
        if ![tol.e1, tol.e2, tol.e3_cv, tol.e4].iter().all(|t| *t > 0.0 && t.is_finite()) {
            return Err(Error::config("tolerances must be positive and finite"));
        }
        if config.max_dim == 0 {
            return Err(Error::config("max_dim must be positive"));
        }
        let lab = Lab {
            options: EstimatorOptions {
                xi: config.xi_choice(),
                symmetrize: None,
            },
            config,
            ifs,
            p,
            levels,
        };
        for &id in &lab.config.experiments {
            for job in lab.jobs(id)? {
                let depth = job.levels.iter().map(|l| l.1).max().unwrap_or(0);
                let dim = predicted_dim(&job.model, depth);
                if dim > lab.config.max_dim {
                    return Err(Error::resource(format!(
                        "{id} case {} needs dimension {dim} at depth {depth}, cap is {}",
                        job.case, lab.config.max_dim
                    )));
                }
            }
        }
        Ok(lab)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn ideal_parameter(&self) -> IdealParameter {
        self.p
    }

    pub fn ifs(&self) -> &IfsSpec {
        &self.ifs
    }

    fn model(&self, omega: OmegaSet, m: usize) -> Result<ModelSpec> {
        ModelSpec::single(self.ifs.clone(), omega, m, self.config.max_dim)
    }

    fn job(&self, case: String, model: ModelSpec, convention: NormConvention) -> Job {
        Job {
            case,
            model,
            convention,
            levels: self.levels.clone(),
            options: self.options,
        }
    }

    fn e2_words(&self) -> Result<Vec<Word>> {
        if self.config.e2.words.is_empty() {
            let n = self.ifs.branches();
            return Ok(Word::all(n, 1).chain(Word::all(n, 2)).collect());
        }
        self.config
            .e2
            .words
            .iter()
            .map(|w| Word::from_one_based(w, self.ifs.branches()).map_err(|e| Error::config(e.to_string())))
            .collect()
    }

    fn e3_aux(case: &OmegaCase) -> OmegaCase {
        OmegaCase {
            name: format!("{}/m1", case.name),
            multiplicity: 1,
            ..case.clone()
        }
    }

    fn e4_subset(&self, subset: &[usize]) -> Result<Option<IfsSpec>> {
        let n = self.ifs.branches();
        let mut idx: Vec<usize> = Vec::with_capacity(subset.len());
        for &i in subset {
            if i == 0 || i > n {
                return Err(Error::config(format!("subset index {i} outside 1..={n}")));
            }
            idx.push(i - 1);
        }
        idx.sort_unstable();
        idx.dedup();
        if idx.len() != subset.len() || idx.is_empty() {
            return Err(Error::config("subsets must be non-empty with distinct indices"));
        }
        if idx.len() == n {
            return Ok(None);
        }
        let sub = self.ifs.sub_ifs(&idx).map_err(|e| Error::config(e.to_string()))?;
        if let IdealParameter::Finite(p) = self.p {
            if sub.dimension() >= p {
                return Err(Error::config(format!(
                    "subset {subset:?} has dimension {} >= p = {p}; not a singular carrier",
                    sub.dimension()
                )));
            }
        }
        Ok(Some(sub))
    }

    fn jobs(&self, id: ExperimentId) -> Result<Vec<Job>> {
        let convs = self.config.conventions.clone();
        let mut jobs = Vec::new();
        match id {
            ExperimentId::E1 => {
                if self.config.multiplicities.is_empty() || self.config.multiplicities.contains(&0) {
                    return Err(Error::config("E1 multiplicities must be positive"));
                }
                for &c in &convs {
                    jobs.push(self.job("K".into(), self.model(OmegaSet::whole(), 1)?, c));
                    for &m in &self.config.multiplicities {
                        let mut job = self.job(format!("K/m{m}"), self.model(OmegaSet::whole(), m)?, c);
                        job.options.symmetrize = Some(m);
                        jobs.push(job);
                    }
                }
            }
            ExperimentId::E2 => {
                let words = self.e2_words()?;
                for &c in &convs {
                    jobs.push(self.job("K".into(), self.model(OmegaSet::whole(), 1)?, c));
                    for w in &words {
                        jobs.push(self.job(format!("w={w}"), self.model(OmegaSet::cell(w.clone()), 1)?, c));
                    }
                }
            }
            ExperimentId::E3 => {
                if !matches!(self.p, IdealParameter::Finite(p) if p > 1.0) {
                    return Err(Error::config(format!("E3 needs finite p > 1, got {}", self.p)));
                }
                for &c in &convs {
                    for case in &self.config.e3.cases {
                        jobs.push(self.job(case.name.clone(), case_model(&self.ifs, case, self.config.max_dim)?, c));
                        if case.multiplicity > 1 {
                            let aux = Self::e3_aux(case);
                            jobs.push(self.job(aux.name.clone(), case_model(&self.ifs, &aux, self.config.max_dim)?, c));
                            let m = case.multiplicity;
                            jobs.push(self.job(format!("K/m{m}"), self.model(OmegaSet::whole(), m)?, c));
                            jobs.push(self.job("K/m1".into(), self.model(OmegaSet::whole(), 1)?, c));
                        }
                    }
                }
            }
            ExperimentId::E4 => {
                let sub_levels = pairs(&self.config.e4.levels);
                check_pairs("e4.levels", &sub_levels)?;
                for &c in &convs {
                    jobs.push(self.job("K".into(), self.model(OmegaSet::whole(), 1)?, c));
                    for subset in &self.config.e4.subsets {
                        if let Some(sub) = self.e4_subset(subset)? {
                            let model = ModelSpec::single(sub, OmegaSet::whole(), 1, self.config.max_dim)?;
                            let mut job = self.job(subset_name(subset), model, c);
                            job.levels = sub_levels.clone();
                            jobs.push(job);
                        }
                    }
                }
            }
            ExperimentId::E5 => {
                for &c in &convs {
                    for pair in &self.config.e5.pairs {
                        let [first, second, sum] = pair_models(&self.ifs, pair, self.config.max_dim)?;
                        jobs.push(self.job(format!("{}/first", pair.name), first, c));
                        jobs.push(self.job(format!("{}/second", pair.name), second, c));
                        jobs.push(self.job(format!("{}/sum", pair.name), sum, c));
                    }
                }
            }
        }
        Ok(jobs)
    }

    fn row(&self, id: ExperimentId, case: String, convention: NormConvention) -> RowBuilder {
        RowBuilder {
            row: RatioRow {
                experiment: id,
                case,
                p: self.p,
                convention: Some(convention),
                level: None,
                ambient: None,
                m: None,
                value: 0.0,
                expected: 0.0,
                observed: 0.0,
                tolerance: 0.0,
                rule: Rule::Probe,
                verdict: Verdict::Probe,
            },
        }
    }

    /// Runs one experiment; failed checks become verdicts, not errors.
    pub fn run_experiment(&self, id: ExperimentId) -> Result<ExperimentReport> {
        let start = Instant::now();
        let jobs = self.jobs(id)?;
        let results: Vec<EstimatorSeries> = jobs
            .par_iter()
            .map(|j| estimate_upper(&j.model, self.p, j.convention, &j.levels, &j.options))
            .collect::<Result<_>>()?;
        let found = |case: &str, c: NormConvention| -> &EstimatorSeries {
            let i = jobs
                .iter()
                .position(|j| j.case == case && j.convention == c)
                .unwrap_or_else(|| unreachable!("planned case {case} missing"));
            &results[i]
        };
        let mut rows = Vec::new();
        let mut notes = Vec::new();
        let tol = self.config.tolerances;
        match id {
            ExperimentId::E1 => {
                for &c in &self.config.conventions {
                    let base = found("K", c);
                    for &m in &self.config.multiplicities {
                        let amp = found(&format!("K/m{m}"), c);
                        let expected = self.p.ampliation_factor(m);
                        for (b, a) in base.records.iter().zip(&amp.records) {
                            let observed = ratio(a.value, b.value);
                            for (suffix, rule, t) in [("", Rule::Relative, tol.e1), (" lower", Rule::AtLeast, INEQUALITY_SLACK)] {
                                rows.push(
                                    self.row(id, format!("m={m}{suffix}"), c)
                                        .levels(a.level, a.ambient)
                                        .m(m)
                                        .judge(a.value, expected, observed, t, rule),
                                );
                            }
                        }
                    }
                }
            }
            ExperimentId::E2 => {
                let words = self.e2_words()?;
                for &c in &self.config.conventions {
                    let base = found("K", c);
                    for w in &words {
                        let cell = found(&format!("w={w}"), c);
                        let expected = self.ifs.ratio().powi(w.len() as i32);
                        for (b, s) in base.records.iter().zip(&cell.records) {
                            let builder = self.row(id, format!("w={w}"), c).levels(s.level, s.ambient);
                            rows.push(if b.value == 0.0 && s.value == 0.0 {
                                builder.vacuous(s.value, expected)
                            } else {
                                builder.judge(s.value, expected, ratio(s.value, b.value), tol.e2, Rule::Relative)
                            });
                        }
                    }
                }
            }
            ExperimentId::E3 => {
                let (level, ambient) = *self.levels.last().unwrap_or(&(0, 0));
                for &c in &self.config.conventions {
                    let mut gammas = Vec::new();
                    let mut case_rows = Vec::new();
                    for case in &self.config.e3.cases {
                        let est = found(&case.name, c).last_value();
                        let integral = case_model(&self.ifs, case, self.config.max_dim)?.multiplicity_integral();
                        let builder = self
                            .row(id, case.name.clone(), c)
                            .levels(level, ambient)
                            .m(case.multiplicity);
                        if integral == 0.0 {
                            case_rows.push(builder.vacuous(est, 0.0));
                            continue;
                        }
                        let gamma = power(est, self.p) / integral;
                        gammas.push(gamma);
                        case_rows.push(builder.judge(est, f64::NAN, gamma, tol.e3_cv, Rule::Probe));
                        if case.multiplicity > 1 {
                            let m = case.multiplicity;
                            let single = found(&Self::e3_aux(case).name, c).last_value();
                            let k_ratio = ratio(found(&format!("K/m{m}"), c).last_value(), found("K/m1", c).last_value());
                            rows.push(
                                self.row(id, format!("{} vs E1", case.name), c)
                                    .levels(level, ambient)
                                    .m(m)
                                    .judge(est, k_ratio, ratio(est, single), tol.e2, Rule::Relative),
                            );
                        }
                    }
                    let mean = gammas.iter().sum::<f64>() / gammas.len().max(1) as f64;
                    for r in &mut case_rows {
                        if r.verdict == Verdict::Probe {
                            r.expected = mean;
                        }
                    }
                    let cv_row = self.row(id, "cv".into(), c).levels(level, ambient);
                    rows.push(if gammas.len() < 2 {
                        cv_row.vacuous(mean, 0.0)
                    } else {
                        let var = gammas.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gammas.len() as f64;
                        cv_row.judge(mean, 0.0, var.sqrt() / mean, tol.e3_cv, Rule::AtMost)
                    });
                    rows.extend(case_rows);
                }
            }
            ExperimentId::E4 => {
                for &c in &self.config.conventions {
                    let reference = found("K", c).extrapolated;
                    for subset in &self.config.e4.subsets {
                        let name = subset_name(subset);
                        if self.e4_subset(subset)?.is_none() {
                            rows.push(self.row(id, name, c).skipped());
                            notes.push(format!("subset {subset:?} is the full system; decay check skipped"));
                            continue;
                        }
                        let series = found(&name, c);
                        for w in series.records.windows(2) {
                            rows.push(
                                self.row(id, format!("{name} decrease"), c)
                                    .levels(w[1].level, w[1].ambient)
                                    .judge(w[1].value, 1.0, ratio(w[1].value, w[0].value), 0.0, Rule::Below),
                            );
                        }
                        if let Some(last) = series.records.last() {
                            rows.push(
                                self.row(id, format!("{name} final"), c)
                                    .levels(last.level, last.ambient)
                                    .judge(last.value, tol.e4, ratio(last.value, reference), 0.0, Rule::Below),
                            );
                        }
                    }
                }
            }
            ExperimentId::E5 => {
                let (level, ambient) = *self.levels.last().unwrap_or(&(0, 0));
                for &c in &self.config.conventions {
                    for pair in &self.config.e5.pairs {
                        let e1 = found(&format!("{}/first", pair.name), c).last_value();
                        let e2 = found(&format!("{}/second", pair.name), c).last_value();
                        let sum = found(&format!("{}/sum", pair.name), c).last_value();
                        let row = |suffix: &str| self.row(id, format!("{}{suffix}", pair.name), c).levels(level, ambient);
                        if pair.first.is_empty() && pair.second.is_empty() {
                            rows.push(row("").vacuous(sum, 0.0));
                            continue;
                        }
                        rows.push(match self.p {
                            IdealParameter::Finite(_) => row(" powers").judge(
                                sum,
                                power(e1, self.p) + power(e2, self.p),
                                power(sum, self.p),
                                tol.e1,
                                Rule::Probe,
                            ),
                            IdealParameter::Infinity => row(" powers").skipped(),
                        });
                        rows.push(row(" lower").judge(sum, e1.max(e2), sum, INEQUALITY_SLACK, Rule::AtLeast));
                        rows.push(row(" upper").judge(sum, e1 + e2, sum, INEQUALITY_SLACK, Rule::AtMost));
                        if pair.second.is_empty() {
                            rows.push(row(" empty").judge(sum, e1, sum, 0.0, Rule::Relative));
                        }
                    }
                }
            }
        }
        let series: Vec<CaseSeries> = jobs
            .iter()
            .zip(results)
            .map(|(j, s)| CaseSeries {
                case: format!("{}/{}", j.case, j.convention),
                series: s,
            })
            .collect();
        for s in &series {
            if !s.series.converged {
                notes.push(format!("{}: no three-level stable run; last level reported", s.case));
            }
        }
        Ok(ExperimentReport {
            id,
            series,
            rows,
            notes,
            wall_clock: start.elapsed(),
        })
    }

    /// All configured experiments, in configuration order.
    pub fn run(&self) -> Result<EstimateReport> {
        let experiments = self
            .config
            .experiments
            .iter()
            .map(|&id| self.run_experiment(id))
            .collect::<Result<_>>()?;
        Ok(EstimateReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config.clone(),
            experiments,
        })
    }
}

fn subset_name(subset: &[usize]) -> String {
    let parts: Vec<String> = subset.iter().map(|i| i.to_string()).collect();
    format!("sub={}", parts.join("."))
}

struct RowBuilder {
    row: RatioRow,
}

impl RowBuilder {
    fn levels(mut self, level: usize, ambient: usize) -> Self {
        self.row.level = Some(level);
        self.row.ambient = Some(ambient);
        self
    }

    fn m(mut self, m: usize) -> Self {
        self.row.m = Some(m);
        self
    }

    fn judge(mut self, value: f64, expected: f64, observed: f64, tolerance: f64, rule: Rule) -> RatioRow {
        self.row.value = value;
        self.row.expected = expected;
        self.row.observed = observed;
        self.row.tolerance = tolerance;
        self.row.rule = rule;
        self.row.verdict = rule.judge(observed, expected, tolerance);
        self.row
    }

    fn vacuous(mut self, value: f64, expected: f64) -> RatioRow {
        self.row.value = value;
        self.row.expected = expected;
        self.row.observed = f64::NAN;
        self.row.verdict = Verdict::Vacuous;
        self.row
    }

    fn skipped(mut self) -> RatioRow {
        self.row.observed = f64::NAN;
        self.row.verdict = Verdict::Skipped;
        self.row
    }
}

fn with_experiment(config: &ExperimentConfig, id: ExperimentId) -> Result<EstimateReport> {
    let config = ExperimentConfig {
        experiments: vec![id],
        ..config.clone()
    };
    Lab::new(config)?.run()
}

/// Ratio of `τ ⊗ I_m` to `τ` estimates against `m^{1/p}`.
pub fn run_e1_ampliation(config: &ExperimentConfig) -> Result<EstimateReport> {
    with_experiment(config, ExperimentId::E1)
}

/// Cell estimates against `λ^{|w|}` times the `τ_K` estimate.
pub fn run_e2_scaling(config: &ExperimentConfig) -> Result<EstimateReport> {
    with_experiment(config, ExperimentId::E2)
}

/// Spread of `estimate^p / ∫ m dμ` across sets and multiplicities.
pub fn run_e3_measure_formula(config: &ExperimentConfig) -> Result<EstimateReport> {
    with_experiment(config, ExperimentId::E3)
}

/// Decay of the estimates for tuples carried by a lower-dimensional
/// sub-attractor.
pub fn run_e4_singular(config: &ExperimentConfig) -> Result<EstimateReport> {
    with_experiment(config, ExperimentId::E4)
}

/// Direct sums against the max/sum bracket and the sum of `p`-th powers.
pub fn run_e5_direct_sum_probe(config: &ExperimentConfig) -> Result<EstimateReport> {
    with_experiment(config, ExperimentId::E5)
}
