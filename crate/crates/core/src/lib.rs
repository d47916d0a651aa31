//! A numerical laboratory for the quasicentral modulus of commuting
//! Hermitian tuples with respect to the Lorentz `(p,1)` ideal.
//!
//! The crate builds finite models of tuples whose joint spectrum lies in a
//! self-similar Cantor-type set, evaluates commutator norms against explicit
//! finite-rank contractions, and runs ratio experiments for ampliation
//! homogeneity, self-similar scaling and the Hausdorff-measure formula.
//!
//! Modules, bottom up:
//!
//! - [`lorentz_ideal`]: singular values, the `(p,1)` norm and tuple norms.
//! - [`fractal`]: iterated function systems, words, cells and measure.
//! - [`operator_model`]: discretized tuples, ampliation, sums, commutators.
//! - [`qc_estimator`]: candidate constructions and upper estimators.
//! - [`lab`]: experiment configs, reports and the `qcmod` command line.

pub mod block;
pub mod error;
pub mod fractal;
pub mod lorentz_ideal;
pub mod operator_model;
pub mod qc_estimator;
pub mod lab;

pub use error::{Error, Result};

// Book chapters compiled as doctests so their snippets cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lorentz.md")]
    mod lorentz {}
    #[doc = include_str!("../../../book/src/fractal.md")]
    mod fractal {}
    #[doc = include_str!("../../../book/src/operator_model.md")]
    mod operator_model {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
