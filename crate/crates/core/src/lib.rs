//! Stability analysis of stationary laws of scalar-coupled McKean–Vlasov
//! SDEs on the line,
//!
//! ```text
//! dX = [a(X) + β c(X) m_t] dt + σ dB,     m_t = E g(X_t),
//! ```
//!
//! via the spectrum of the linearised nonlinear Fokker–Planck operator,
//! together with particle and finite-volume solvers that check the predicted
//! escape rates dynamically.
//!
//! All numerics are generic over [`Scalar`] (`f32`/`f64`); the aliases at
//! the bottom of this file fix `f64`, which is what the tolerances in the
//! documentation refer to.

pub mod error;
pub mod fokkerplanck;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod particles;
pub mod perturb;
pub mod rng;
pub mod scalar;
pub mod spectrum;
pub mod stationary;

pub use error::{Error, Result};
pub use scalar::{pairwise_sum, Scalar};

pub use fokkerplanck::{fp_evolve, FpGrid, FpRun, FpState};
pub use metrics::{w1_empirical, weighted_dual_norm_lb, TimeSeries};
pub use model::{ModelKind, ScalarMeanFieldModel};
pub use particles::{evolve, Ensemble, SimConfig};
pub use perturb::{perturbed_measure, sample_measure, Direction, PerturbedMeasure};
pub use spectrum::{SpectralAnalysis, Verdict};
pub use stationary::{GibbsMeasure, GridLaw, GridSpec};

pub type Model = ScalarMeanFieldModel<f64>;
pub type Gibbs = GibbsMeasure<f64>;
pub type Grid = GridSpec<f64>;
pub type Analysis = SpectralAnalysis<f64>;
pub type Perturbed = PerturbedMeasure<f64>;
pub type FpGrid64 = FpGrid<f64>;
pub type FpState64 = FpState<f64>;
pub type Particles = Ensemble<f64>;
pub type Series = TimeSeries<f64>;
