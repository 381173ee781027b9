//! Correlation-based dissimilarities and their metric properties.
//!
//! The four measures built on a correlation `rho` are Pearson `1 - rho`,
//! |Pearson| `1 - |rho|`, sqrt-Pearson `sqrt(1 - rho)` and P-squared
//! `sqrt(1 - rho^2)`. Only the square-root forms satisfy the triangle
//! inequality. This crate audits arbitrary dissimilarity matrices for the
//! metric and ultrametric axioms, certifies `sqrt(1 - s)` through a PSD
//! check, rebuilds the three-variable counterexample family in closed form
//! and by simulation, predicts which scalar transforms preserve the metric
//! property, and compares hierarchical clusterings built on different
//! measures.
//!
//! Data-parallel loops (triple scans, theta sweeps, chunked sampling) run on
//! rayon with the default `parallel` feature and sequentially without it;
//! see [`exec::Execution`].

// `!(x <= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster;
pub mod corr;
pub mod counterexample;
pub mod dissimilarity;
pub mod error;
pub mod exec;
pub mod io;
pub mod random;
pub mod verify;

pub use cluster::{
    cluster, compare_measures, cut, rand_index, CoherenceComparison, Dendrogram, LinkageKind,
};
pub use corr::{
    hadamard_square, pearson_correlation, psd_check, validate_correlation, CorrelationMatrix,
    DataMatrix, PsdVerdict,
};
pub use counterexample::{
    build_counterexample, margins, sample_triple, sweep_boundary, CounterexampleSpec, SampleConfig,
    ThetaParams, ViolationMargins,
};
pub use dissimilarity::{
    analyze_transform, apply_measure, compose_transform, Builtin, DissimilarityMatrix, MeasureKind,
    TransformSpec, TransformVerdict,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use verify::{audit, certify_sqrt_metric, coherence_index, GowerCertificate, MetricReport};
