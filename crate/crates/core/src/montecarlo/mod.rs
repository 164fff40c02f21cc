//! Particle-level Monte-Carlo oracle for the analytic channel.
//!
//! Particles perform 3D Brownian motion from the transmitter and are absorbed
//! the first time a step ends inside the receiver sphere. Absorption is
//! tested only at step ends, so the absorbed fraction is biased low by a term
//! of order `sqrt(dt)`; [`extrapolate_to_zero_step`] removes it from a ladder
//! of step sizes.
//!
//! Every particle, pulse, bit and noise draw owns a deterministic ChaCha
//! stream derived from the seed, so results do not depend on the number of
//! worker threads.

mod channel_sim;
mod estimate;
mod walk;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::ChannelParams;

pub use channel_sim::{simulate_channel, EmpiricalTransition, McResult, PulseModel};
pub use estimate::{compare_cir, estimate_cir, extrapolate_to_zero_step, CirEstimate, TapComparison};
pub use walk::{simulate_release, ReleaseCounts};

/// Smallest allowed ratio of symbol interval to time step.
pub const MIN_STEPS_PER_SYMBOL: f64 = 50.0;

/// Source of transmitted bits for a channel run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitSource {
    /// Independent bits with `P(1) = 1 - pi0`.
    Bernoulli,
    /// Fixed bit pattern, repeated if shorter than the run.
    Explicit(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Brownian time step near the receiver, s.
    pub step: f64,
    /// Particles per released pulse.
    pub particles: u64,
    /// Symbol intervals in a channel run.
    pub symbols: usize,
    pub seed: u64,
    pub bits: BitSource,
    /// Take longer steps where the receiver is out of reach.
    pub adaptive: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            particles: 10_000,
            symbols: 1000,
            seed: 0x5eed,
            bits: BitSource::Bernoulli,
            adaptive: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self, t_sym: f64) -> Result<()> {
        if !(t_sym.is_finite() && t_sym > 0.0) {
            return Err(Error::invalid("t_sym", format!("must be finite and > 0, got {t_sym}")));
        }
        if !(self.step > 0.0 && self.step <= t_sym / MIN_STEPS_PER_SYMBOL) {
            return Err(Error::invalid(
                "mc.step",
                format!("must lie in (0, t_sym / {MIN_STEPS_PER_SYMBOL}] = (0, {}], got {}", t_sym / MIN_STEPS_PER_SYMBOL, self.step),
            ));
        }
        if self.particles < 1 {
            return Err(Error::invalid("mc.particles", "must be at least 1"));
        }
        if self.symbols < 1 {
            return Err(Error::invalid("mc.symbols", "must be at least 1"));
        }
        if let BitSource::Explicit(bits) = &self.bits {
            if bits.is_empty() || bits.iter().any(|&b| b > 1) {
                return Err(Error::invalid("mc.bits", "explicit bits must be a non-empty 0/1 vector"));
            }
        }
        Ok(())
    }
}

/// Geometry check that, unlike [`ChannelParams::validate`], admits `D = 0`.
fn check_geometry(params: &ChannelParams) -> Result<()> {
    if !(params.radius > 0.0 && params.distance > params.radius && params.distance.is_finite()) {
        return Err(Error::invalid("geometry", "need distance > radius > 0"));
    }
    if !(params.diffusion >= 0.0 && params.diffusion.is_finite()) {
        return Err(Error::invalid("diffusion", "must be finite and >= 0"));
    }
    Ok(())
}

/// Independent stream families.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Domain {
    Particle = 1,
    Bits = 2,
    Noise = 3,
    Pulse = 4,
}

/// Deterministic generator for item `index` of a stream family.
fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let key = seed ^ (domain as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
