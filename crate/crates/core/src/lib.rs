//! Competitive social-welfare maximization under the utility-driven
//! independent cascade (UIC) model.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: directed probabilistic graphs and edge-list I/O.
//! - [`utility`]: item catalogs, noise, truncated utilities, catalog configs.
//! - [`allocation`]: `(node, item)` seed relations and their text format.
//! - [`diffusion`]: the possible-world simulator and Monte Carlo estimators.
//! - [`ris`]: plain, marginal and weighted RR sets plus greedy node selection.
//! - [`selectors`]: sample-size schedules, PRIMA+ and the SupGRD sampler.
//! - [`allocators`]: SeqGRD, SeqGRD-NM, MaxGRD, max-seq, SupGRD and baselines.
//! - [`oracle`]: exhaustive ground truth for tiny instances.
//! - [`experiment`]: algorithm dispatch and CSV records used by the CLI.

pub mod allocation;
pub mod allocators;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod oracle;
pub mod ris;
pub mod rng;
pub mod selectors;
pub mod stats;
pub mod utility;

pub use allocation::Allocation;
pub use error::{Error, Result};
pub use graph::{Edge, Graph, NodeId};
pub use utility::{ItemCatalog, ItemId, ItemSet, NoiseSpec};

/// Formats a float with 17 significant digits so that parsing it back
/// yields the identical `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
