//! Continuous-time multi-phase trajectory optimization via Legendre-Gauss-Radau
//! collocation on the tangent spaces of Lie-group state manifolds.
//!
//! The pipeline: describe a multi-phase Bolza problem over a manifold chart
//! ([`transcription::ProblemSpec`]), transcribe it into a sparse NLP whose
//! decision variables are tangent-space deviants ([`transcription::transcribe`]),
//! solve with the built-in augmented-Lagrangian solver ([`nlp::solve`]), and
//! query the reconstructed continuous-time trajectory
//! ([`transcription::Trajectory`]). Group-valued states (unit quaternions,
//! poses) stay on their manifold by construction — no normalization
//! constraints enter the NLP.

pub mod collocation;
pub mod error;
pub mod manifolds;
pub mod nlp;
pub mod scalar;
pub mod systems;
pub mod transcription;

pub use error::{Error, Result};
pub use scalar::{Dual, Real};
