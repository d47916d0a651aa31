//! Experiment harness: configuration, the five ratio experiments and
//! deterministic reports.
//!
//! Each experiment compares estimator series at matched `(L, L')` levels, so
//! the finite-level bias shared by both sides of a ratio cancels. Rows carry
//! an expected value, the observed value, a tolerance and a verdict; only
//! `fail` verdicts make a run unsuccessful.

mod config;
mod experiments;
mod report;

pub use config::{
    E2Config, E3Config, E4Config, E5Config, ExperimentConfig, ExperimentId, IfsConfig, OmegaCase, ReportFormat,
    SumPair, Tolerances, XiKind,
};
pub use experiments::{
    run_e1_ampliation, run_e2_scaling, run_e3_measure_formula, run_e4_singular, run_e5_direct_sum_probe, Lab,
};
pub use report::{
    format_number, render, report_value, to_csv, to_json, write_report, CaseSeries, EstimateReport,
    ExperimentReport, RatioRow, Rule, Verdict, CSV_HEADER,
};
