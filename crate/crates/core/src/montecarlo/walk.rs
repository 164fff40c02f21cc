use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_geometry, stream, Domain, McConfig};
use crate::error::{Error, Result};
use crate::physics::ChannelParams;

/// Far from the receiver a step may be lengthened until its per-axis
/// standard deviation reaches `gap / FAR_FIELD_MARGIN`. Reaching the sphere
/// then needs a displacement of that many deviations towards it, which has
/// probability `2 Q(8) ~ 1e-15` per step.
const FAR_FIELD_MARGIN: f64 = 8.0;

/// Particles handled per work item; tallies are merged in chunk order.
const CHUNK: u64 = 4096;

/// Absorption counts of one released pulse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReleaseCounts {
    /// Absorptions in each symbol interval after release.
    pub per_interval: Vec<u64>,
    /// Particles still free at the horizon.
    pub free: u64,
}

impl ReleaseCounts {
    pub fn particles(&self) -> u64 {
        self.per_interval.iter().sum::<u64>() + self.free
    }

    /// Running total of absorptions at the end of each interval.
    pub fn cumulative(&self) -> Vec<u64> {
        self.per_interval
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }
}

/// Walk geometry shared by all particles of a run.
#[derive(Debug, Clone, Copy)]
pub(super) struct Walker {
    radius: f64,
    start: f64,
    diffusion: f64,
    step: f64,
    adaptive: bool,
    t_sym: f64,
    intervals: usize,
    horizon: f64,
}

impl Walker {
    pub(super) fn new(params: &ChannelParams, cfg: &McConfig, t_sym: f64, horizon: f64) -> Result<Self> {
        check_geometry(params)?;
        cfg.validate(t_sym)?;
        if !(horizon >= t_sym && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be finite and >= t_sym, got {horizon}")));
        }
        Ok(Self {
            radius: params.radius,
            start: params.distance,
            diffusion: params.diffusion,
            step: cfg.step,
            adaptive: cfg.adaptive,
            t_sym,
            intervals: (horizon / t_sym - 1e-9).ceil().max(1.0) as usize,
            horizon,
        })
    }

    #[cfg(test)]
    pub(super) fn intervals(&self) -> usize {
        self.intervals
    }

    /// Index of the interval in which the particle is absorbed, if any.
    pub(super) fn run<R: Rng>(&self, rng: &mut R) -> Option<usize> {
        if self.diffusion == 0.0 {
            return None;
        }
        let two_d = 2.0 * self.diffusion;
        let r2_abs = self.radius * self.radius;
        let (mut x, mut y, mut z) = (self.start, 0.0f64, 0.0f64);
        let mut t = 0.0;
        let mut interval = 0usize;
        let mut boundary = self.t_sym.min(self.horizon);
        // Steps never straddle an interval boundary.
        let eps = 1e-12 * self.t_sym;
        loop {
            let mut h = self.step;
            if self.adaptive {
                let gap = (x * x + y * y + z * z).sqrt() - self.radius;
                let far = gap / FAR_FIELD_MARGIN;
                let h_far = far * far / two_d;
                if h_far > h {
                    h = h_far;
                }
            }
            let mut crosses = false;
            if t + h >= boundary - eps {
                h = boundary - t;
                crosses = true;
            }
            let s = (two_d * h).sqrt();
            x += s * rng.sample::<f64, _>(StandardNormal);
            y += s * rng.sample::<f64, _>(StandardNormal);
            z += s * rng.sample::<f64, _>(StandardNormal);
            t += h;
            if x * x + y * y + z * z <= r2_abs {
                return Some(interval);
            }
            if crosses {
                interval += 1;
                if interval >= self.intervals {
                    return None;
                }
                t = boundary;
                boundary = ((interval + 1) as f64 * self.t_sym).min(self.horizon);
            }
        }
    }

    /// Tallies `particles` walks; walk `k` uses stream `first_stream + k`.
    pub(super) fn tally(&self, seed: u64, first_stream: u64, particles: u64) -> ReleaseCounts {
        let chunks = particles.div_ceil(CHUNK);
        let partial: Vec<Vec<u64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut hist = vec![0u64; self.intervals + 1];
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(particles);
                for k in lo..hi {
                    let mut rng = stream(seed, Domain::Particle, first_stream + k);
                    match self.run(&mut rng) {
                        Some(i) => hist[i] += 1,
                        None => hist[self.intervals] += 1,
                    }
                }
                hist
            })
            .collect();
        let mut total = vec![0u64; self.intervals + 1];
        for h in partial {
            for (t, v) in total.iter_mut().zip(h) {
                *t += v;
            }
        }
        let free = total.pop().unwrap_or(0);
        ReleaseCounts {
            per_interval: total,
            free,
        }
    }
}

/// Releases `cfg.particles` particles at `t = 0` and counts absorptions in
/// each symbol interval up to `horizon`.
pub fn simulate_release(params: &ChannelParams, cfg: &McConfig, t_sym: f64, horizon: f64) -> Result<ReleaseCounts> {
    let walker = Walker::new(params, cfg, t_sym, horizon)?;
    Ok(walker.tally(cfg.seed, 0, cfg.particles))
}
