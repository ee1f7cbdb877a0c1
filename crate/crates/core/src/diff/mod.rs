//! Differentiation machinery: coordinate jets and exact loss gradients.

pub mod engine;
pub mod jet;
pub mod layout;

pub use engine::{evaluate_outputs, pairwise_sum, AffineResidual, CollocationBatch, LossGrad, Term, DEFAULT_CHUNK};
pub use jet::{tanh_derivs, tanh_derivs_from_value, CJet, Jet, JetScalar, RJet};
pub use layout::Layout;
