//! Diffusion and absorption at a fully absorbing spherical receiver.
//!
//! A point source at distance `d` from the centre of a sphere of radius `R`
//! releases `N_T` particles at `t = 0`. The expected number absorbed by time
//! `t` is
//!
//! ```text
//! N(t) = N_T (R / d) erfc((d - R) / (2 sqrt(D t)))
//! ```
//!
//! A reset-counting receiver sees, in the `i`-th symbol interval, the
//! increment `N(i T) - N((i - 1) T)`; dividing by `N_T` gives the per-particle
//! hit probability `p[i]`. The vector `p[1..M]` is the channel impulse
//! response, truncated at the effective memory length `M`.
//!
//! Units are fixed: micrometres, seconds, and square micrometres per second.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::regula_falsi;
use crate::special::erfc;

/// Residual tolerance (probability units) for the memory-horizon equation.
pub const T_ALPHA_TOL: f64 = 1e-12;
/// Iteration limit for the memory-horizon root finder.
pub const T_ALPHA_MAX_ITER: usize = 200;
/// Maximum number of bracket doublings past the hitting-rate peak.
const MAX_BRACKET_DOUBLINGS: usize = 200;

/// Physical constants of the diffusive link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Particles released per "1" pulse.
    pub n_released: u64,
    /// Receiver radius, um.
    pub radius: f64,
    /// Transmitter to receiver-centre distance, um.
    pub distance: f64,
    /// Diffusion coefficient, um^2/s.
    pub diffusion: f64,
    /// Hit probability regarded as negligible when sizing the memory.
    pub alpha: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            n_released: 10_000,
            radius: 1.0,
            distance: 10.0,
            diffusion: 79.4,
            alpha: 1e-3,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid("radius", format!("must be finite and > 0, got {}", self.radius)));
        }
        if !(self.distance.is_finite() && self.distance > self.radius) {
            return Err(Error::invalid(
                "distance",
                format!("must exceed the radius {}, got {}", self.radius, self.distance),
            ));
        }
        if !(self.diffusion.is_finite() && self.diffusion > 0.0) {
            return Err(Error::invalid("diffusion", format!("must be finite and > 0, got {}", self.diffusion)));
        }
        if self.n_released < 1 {
            return Err(Error::invalid("n_released", "must be at least 1"));
        }
        let bound = self.hit_bound();
        if !(self.alpha > 0.0 && self.alpha < bound) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in (0, R/d = {bound}), got {}", self.alpha),
            ));
        }
        Ok(())
    }

    /// Probability that a particle is ever absorbed, `R / d`.
    pub fn hit_bound(&self) -> f64 {
        self.radius / self.distance
    }

    /// Time of the maximum hitting rate, `(d - R)^2 / (6 D)`.
    pub fn peak_time(&self) -> f64 {
        let gap = self.distance - self.radius;
        gap * gap / (6.0 * self.diffusion)
    }

    /// Per-particle probability of absorption by time `t`, without validation.
    fn absorbed_fraction(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let arg = (self.distance - self.radius) / (2.0 * (self.diffusion * t).sqrt());
        self.hit_bound() * erfc(arg)
    }

    /// Per-particle probability of absorption in `[start, start + width]`.
    fn window_prob(&self, start: f64, width: f64) -> f64 {
        let gap = self.distance - self.radius;
        let e = |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                erfc(gap / (2.0 * (self.diffusion * t).sqrt()))
            }
        };
        self.hit_bound() * (e(start + width) - e(start))
    }
}

/// Expected cumulative number of particles absorbed by time `t`.
pub fn cumulative_absorbed(params: &ChannelParams, t: f64) -> Result<f64> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    Ok(params.n_released as f64 * params.absorbed_fraction(t))
}

/// Probability that a particle released at `t = 0` is absorbed during the
/// `i`-th symbol interval (`i >= 1`).
pub fn interval_hit_prob(params: &ChannelParams, t_sym: f64, i: usize) -> Result<f64> {
    params.validate()?;
    check_t_sym(t_sym)?;
    if i < 1 {
        return Err(Error::invalid("i", "interval index starts at 1"));
    }
    Ok(params.window_prob((i - 1) as f64 * t_sym, t_sym))
}

fn check_t_sym(t_sym: f64) -> Result<()> {
    if !(t_sym.is_finite() && t_sym > 0.0) {
        return Err(Error::invalid("t_sym", format!("must be finite and > 0, got {t_sym}")));
    }
    Ok(())
}

/// Locates the decaying-side root of `P[T, T + t_sym] = alpha`.
///
/// `None` means the window probability never exceeds `alpha`, i.e. every
/// interval is already negligible.
fn locate_t_alpha(params: &ChannelParams, t_sym: f64) -> Result<Option<f64>> {
    params.validate()?;
    check_t_sym(t_sym)?;
    let g = |t: f64| params.window_prob(t, t_sym) - params.alpha;

    let peak = params.peak_time();
    let (lo, hi) = if g(peak) > 0.0 {
        let mut hi = 2.0 * peak;
        let mut doublings = 0;
        while g(hi) >= 0.0 {
            if doublings == MAX_BRACKET_DOUBLINGS {
                return Err(Error::NoRoot(format!(
                    "window probability still above alpha = {} at t = {hi:e} s",
                    params.alpha
                )));
            }
            hi *= 2.0;
            doublings += 1;
        }
        (peak, hi)
    } else {
        // The largest window may start before the rate peak when t_sym is
        // long; its start lies in [0, peak].
        const SCAN: usize = 64;
        let (mut best_t, mut best_g) = (0.0, g(0.0));
        for k in 1..=SCAN {
            let t = peak * k as f64 / SCAN as f64;
            let v = g(t);
            if v > best_g {
                best_t = t;
                best_g = v;
            }
        }
        if best_g <= 0.0 {
            return Ok(None);
        }
        (best_t, peak)
    };
    regula_falsi(g, lo, hi, T_ALPHA_TOL, T_ALPHA_MAX_ITER).map(Some)
}

/// Memory horizon `T_alpha`: the time after which a whole symbol interval
/// carries hit probability at most `alpha`.
///
/// Returns the root on the decaying side of the hitting-rate curve.
pub fn solve_t_alpha(params: &ChannelParams, t_sym: f64) -> Result<f64> {
    locate_t_alpha(params, t_sym)?.ok_or_else(|| {
        Error::NoRoot(format!(
            "no symbol interval of {t_sym} s carries hit probability above alpha = {}",
            params.alpha
        ))
    })
}

/// Effective memory length `M = ceil(T_alpha / t_sym)`, at least 1.
pub fn memory_length(params: &ChannelParams, t_sym: f64) -> Result<usize> {
    let t_alpha = locate_t_alpha(params, t_sym)?.unwrap_or(0.0);
    Ok(memory_from_horizon(t_alpha, t_sym))
}

fn memory_from_horizon(t_alpha: f64, t_sym: f64) -> usize {
    ((t_alpha / t_sym).ceil() as usize).max(1)
}

/// Reset-counting channel impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub t_sym: f64,
    /// Zero when no interval exceeds `alpha`.
    pub t_alpha: f64,
    pub memory: usize,
    /// `p[0]` is the current-interval tap, `p[j]` the tap `j` intervals back.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Cir {
    /// Builds a CIR from explicit taps; the horizon is set to `len * t_sym`.
    pub fn from_taps(t_sym: f64, p: Vec<f64>) -> Result<Self> {
        check_t_sym(t_sym)?;
        if p.is_empty() {
            return Err(Error::invalid("p", "needs at least one tap"));
        }
        if let Some(&bad) = p.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::invalid("p", format!("taps must lie in (0, 1), got {bad}")));
        }
        let memory = p.len();
        let q = p.iter().map(|x| 1.0 - x).collect();
        Ok(Self {
            t_sym,
            t_alpha: memory as f64 * t_sym,
            memory,
            p,
            q,
        })
    }

    pub fn total_hit_prob(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Computes `T_alpha`, `M` and the taps `p[1..M]` for one symbol interval.
pub fn build_cir(params: &ChannelParams, t_sym: f64) -> Result<Cir> {
    let t_alpha = locate_t_alpha(params, t_sym)?.unwrap_or(0.0);
    let memory = memory_from_horizon(t_alpha, t_sym);
    let p: Vec<f64> = (0..memory)
        .map(|k| params.window_prob(k as f64 * t_sym, t_sym))
        .collect();
    let mut cir = Cir::from_taps(t_sym, p)?;
    cir.t_alpha = t_alpha;
    Ok(cir)
}
