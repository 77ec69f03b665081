//! Calibrated simplex-mapping classification.
//!
//! Training maps every labeled point into a latent space `R^(n-1)` that is cut
//! into `n` congruent cone segments, one per class, spanned by the mirrored
//! vertices of a regular simplex. A probabilistic regressor is then fitted from
//! feature space to that latent space. Class labels come from the nearest
//! simplex vertex of the predicted latent mean, and class probabilities from
//! the mass the predictive density puts on each segment.
//!
//! Class indices are zero-based throughout the library; original labels are
//! kept in a [`LabelMap`](dataio::LabelMap).

pub mod classifier;
pub mod dataio;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod par;
pub mod regression;
pub mod rng;
pub mod transform;

pub use classifier::{CasimacModel, McConfig};
pub use error::{Error, ErrorKind, Result};
pub use geometry::SimplexGeometry;
pub use transform::{LabeledDataset, TransformConfig};

/// Crate version, written into every file the toolkit emits.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
