//! Analysis chain linking detected weapon imagery in social-media posts to
//! offline conflict events.
//!
//! The crate is organised along the pipeline:
//!
//! * [`ingest`] parses posts (JSON lines), detections, annotations and
//!   events (CSV) into validated records.
//! * [`eval`] scores detections against annotations (IoU matching,
//!   per-class precision/recall/AP, mAP).
//! * [`engagement`] joins posts to detected classes and summarises
//!   retweets and likes per class.
//! * [`timeseries`] bins everything into gapless daily series and
//!   normalises per-class counts into daily shares.
//! * [`econ`] holds least squares, the F distribution, Granger tests with
//!   Bonferroni correction, VAR estimation, lag selection and impulse
//!   responses with residual-bootstrap bands.
//! * [`simgen`] generates synthetic processes and file bundles with known
//!   structure, used as the oracle layer by the test suites.
//! * [`svg`] renders impulse-response grids.
//! * [`cli`] wires it together behind the `materiel-pulse` binary.

pub mod cli;
pub mod econ;
pub mod engagement;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod simgen;
pub mod svg;
pub mod timeseries;

pub use error::{Error, Result};
