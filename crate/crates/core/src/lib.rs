//! Achievable-rate analysis of diffusive molecular channels with a fully
//! absorbing, reset-counting spherical receiver and on-off keying.
//!
//! The pipeline runs from the closed-form absorption model ([`physics`])
//! through the ISI-aware Gaussian channel ([`channel`]) to threshold- and
//! input-optimised mutual information ([`infotheory`]). [`montecarlo`]
//! provides an independent particle-level check of the analytic results.

pub mod channel;
pub mod error;
pub mod infotheory;
pub mod montecarlo;
pub mod physics;
pub mod roots;
pub mod search;
pub mod special;

pub use channel::{
    gaussian_validity, DetectorConfig, GaussianMixture, IsiChannel, MixtureComponent, NoiseParams,
    TransitionMatrix, ValidityReport, DEFAULT_ENUMERATION_CAP,
};
pub use error::{Error, Result};
pub use infotheory::{
    achievable_rate, binary_entropy, capacity, capacity_sweep, mutual_information, optimize_threshold,
    pi0_grid, sweep, CapacityCell, CapacityPoint, CapacityResult, OperatingPoint, SweepCell,
    ThresholdOptimum, ThresholdSearch,
};
pub use physics::{build_cir, cumulative_absorbed, interval_hit_prob, memory_length, solve_t_alpha, ChannelParams, Cir};
pub use roots::regula_falsi;
pub use special::{erfc, q_function};
