//! Dynamic epistemic logic for theory-of-mind belief tracking, with a
//! step-level verifier and inference-time scaling (best-of-N, beam search).

pub mod analysis;
pub mod event;
pub mod http;
pub mod logic;
pub mod scalar;
pub mod scaling;
pub mod story;
#[doc(hidden)]
pub mod testkit;
pub mod trace;
pub mod verifier;

pub use scalar::Scalar;

pub type StepScore64 = verifier::StepScore<f64>;
pub type StepScore32 = verifier::StepScore<f32>;
pub type Selection64 = scaling::Selection<f64>;
pub type Selection32 = scaling::Selection<f32>;
pub type Estimate64 = analysis::Estimate<f64>;
pub type RegimeResult64 = analysis::RegimeResult<f64>;
pub type HarnessResult64 = analysis::HarnessResult<f64>;
