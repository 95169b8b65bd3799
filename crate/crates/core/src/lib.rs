//! Approximate marginals and partition functions for discrete graphical
//! models via a sequence of bounded-size clique tree forests.
//!
//! Factors are added to a clique tree forest until its cliques would grow
//! past a size bound. The forest is calibrated, reduced to a smaller bound
//! while keeping the variables later factors still need, and used as the
//! seed of the next forest. Links between consecutive forests carry
//! corrected beliefs back toward the first one after the last is built.
//!
//! ```
//! use slctf::{parse_uai, run_pipeline, RunConfig};
//!
//! let model = parse_uai("MARKOV\n2\n2 2\n1\n2 0 1\n4\n1 2 3 4\n").unwrap();
//! let out = run_pipeline(&model, &RunConfig::default()).unwrap();
//! assert!((out.marginals[&0].probs()[0] - 0.3).abs() < 1e-12);
//! assert!((out.log_pr - 1.0).abs() < 1e-12);
//! ```

pub mod approx;
pub mod build;
pub mod error;
pub mod factor;
pub mod forest;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod pipeline;
mod triangulate;
pub mod uai;

pub use error::{Error, Result};
pub use factor::{Factor, VarId};
pub use model::{Distribution, Domains, Evidence, Model, ModelKind};
pub use pipeline::{compile, run_pipeline, Diagnostics, RunConfig, RunOutput, Task};
pub use uai::{parse_evidence, parse_uai, write_mar, write_pr};
