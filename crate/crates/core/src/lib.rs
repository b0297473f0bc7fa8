//! Geometric hallucination detection on the unit hypersphere.
//!
//! Embeddings of a question `q`, optional context `c` and response `r` are
//! compared by angular distance. Two scores are provided:
//!
//! * the semantic grounding index `theta(r, q) / theta(r, c)`, which needs a context;
//! * the directional alignment `Gamma` of the displacement `r - q` with a
//!   grounding direction calibrated from known-grounded pairs, either globally
//!   or from the `k` nearest reference queries.
//!
//! [`eval`] holds AUROC, Cohen's d, bootstrap intervals and the calibration
//! protocols. [`data`] reads and writes datasets and reports, and
//! [`synthetic`] generates scenarios with known planted geometry.

pub mod data;
pub mod direction;
mod error;
pub mod eval;
mod rng;
pub mod sphere;
pub mod synthetic;

pub use direction::{
    build_reference_index, calibrate_global, displacement, gamma, gamma_local, GammaMode, GammaScore,
    GroundingDirection, ReferenceIndex, DEFAULT_K,
};
pub use error::{Error, Result};
pub use sphere::{angular_distance, normalize, sgi, sgi_bounds, triangle_residuals, AngularDistance, UnitEmbedding};
