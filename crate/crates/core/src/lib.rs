//! Multi-group probabilistic voting models defined by sequences of de Finetti
//! measures.
//!
//! A model draws a latent bias vector `m` from a mixing measure `μ_n`, maps it
//! to vote biases `m̄ ∈ [−1, 1]^M`, and lets every voter of group `λ` vote `+1`
//! independently with probability `(1 + m̄_λ)/2`. The crate computes exact
//! margin distributions for small populations, samples margins for large
//! ones, builds the regime-dependent limiting laws and provides the
//! statistical distances used to compare the two.

pub mod cwm;
pub mod error;
pub mod limit;
pub mod linalg;
pub mod measure;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod verify;
pub mod voting;

pub use error::{Error, Result};
pub use measure::{BaseMeasure, BiasMap, ContractionRule, ContractionSchedule, MeasureSpec, Regime};
pub use num_complex::Complex64;
