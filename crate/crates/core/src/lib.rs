//! Peaks-over-threshold excess laws and their distance from the generalised
//! Pareto limit.
//!
//! The crate builds the exact law of rescaled (and, for a finite right
//! endpoint, recentred) threshold excesses for distribution families whose
//! rate function `A(v) = v U''(v)/U'(v) + 1 - gamma` is available in closed
//! form, and measures how far that law is from the generalised Pareto limit
//! in squared Hellinger distance, total variation, Kullback-Leibler and
//! higher-order log-ratio divergences. Threshold sweeps regress each metric
//! on `|A(v)|` in log-log scale, and an independent Monte Carlo oracle
//! cross-checks every quadrature result.
//!
//! Families and metrics are strategies behind common traits
//! ([`family::TailFamily`], [`distances::Divergence`]) and are looked up by
//! name at runtime, so the CLI string `burr:c=2,k=1` or the metric list
//! `h2,tv,kl,d2,d3` selects the implementation.
// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod distances;
pub mod error;
pub mod excess;
pub mod family;
pub mod limit;
pub mod montecarlo;
pub mod output;
pub mod quad;
pub mod rates;
pub mod verify;

pub use density::{Conditioned, Density};
pub use distances::{DistanceReport, Divergence, MetricRegistry, MetricSet};
pub use error::{Error, Result};
pub use excess::{ExcessModel, Recenter};
pub use family::{Family, FamilyRegistry, TailFamily};
pub use limit::{GevModel, GpModel};
pub use montecarlo::McEstimate;
pub use quad::{QuadOptions, QuadResult};
pub use rates::{SweepResult, VGrid, Verdict, VerdictStatus};
