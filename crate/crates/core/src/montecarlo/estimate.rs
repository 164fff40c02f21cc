use serde::Serialize;

use super::walk::{ReleaseCounts, Walker};
use super::McConfig;
use crate::error::{Error, Result};
use crate::physics::ChannelParams;

/// Empirical per-interval hit probabilities with binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CirEstimate {
    /// Time step the estimate was produced with; zero after extrapolation.
    pub step: f64,
    pub particles: u64,
    pub p: Vec<f64>,
    pub se: Vec<f64>,
}

impl CirEstimate {
    pub fn from_counts(counts: &ReleaseCounts, step: f64) -> Self {
        let n = counts.particles();
        let nf = n as f64;
        let p: Vec<f64> = counts.per_interval.iter().map(|&c| c as f64 / nf).collect();
        let se = p.iter().map(|&x| (x * (1.0 - x) / nf).sqrt()).collect();
        Self {
            step,
            particles: n,
            p,
            se,
        }
    }
}

/// Estimates `p[1..intervals]` from `cfg.particles` Brownian walks.
pub fn estimate_cir(params: &ChannelParams, cfg: &McConfig, t_sym: f64, intervals: usize) -> Result<CirEstimate> {
    if intervals < 1 {
        return Err(Error::invalid("intervals", "must be at least 1"));
    }
    let walker = Walker::new(params, cfg, t_sym, intervals as f64 * t_sym)?;
    let counts = walker.tally(cfg.seed, 0, cfg.particles);
    Ok(CirEstimate::from_counts(&counts, cfg.step))
}

/// Least-squares fit of each tap against `sqrt(step)`, evaluated at zero
/// step. Standard errors are propagated through the fit weights, assuming
/// the runs are independent.
pub fn extrapolate_to_zero_step(ladder: &[CirEstimate]) -> Result<CirEstimate> {
    if ladder.len() < 2 {
        return Err(Error::invalid("ladder", "needs at least two step sizes"));
    }
    let taps = ladder[0].p.len();
    if ladder.iter().any(|e| e.p.len() != taps || e.step <= 0.0) {
        return Err(Error::invalid("ladder", "estimates must share a tap count and have positive steps"));
    }
    let s: Vec<f64> = ladder.iter().map(|e| e.step.sqrt()).collect();
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let sxx: f64 = s.iter().map(|x| (x - mean) * (x - mean)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("ladder", "step sizes must differ"));
    }
    // Intercept = sum_k w_k y_k.
    let w: Vec<f64> = s.iter().map(|x| 1.0 / n - mean * (x - mean) / sxx).collect();
    let mut p = vec![0.0; taps];
    let mut se = vec![0.0; taps];
    for (e, wk) in ladder.iter().zip(&w) {
        for i in 0..taps {
            p[i] += wk * e.p[i];
            se[i] += wk * wk * e.se[i] * e.se[i];
        }
    }
    Ok(CirEstimate {
        step: 0.0,
        particles: ladder.iter().map(|e| e.particles).sum(),
        p,
        se: se.into_iter().map(f64::sqrt).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TapComparison {
    /// One-based interval index.
    pub index: usize,
    pub analytic: f64,
    pub empirical: f64,
    pub se: f64,
    pub z: f64,
}

/// Per-tap z-scores of an estimate against analytic taps.
pub fn compare_cir(estimate: &CirEstimate, analytic: &[f64]) -> Vec<TapComparison> {
    estimate
        .p
        .iter()
        .zip(&estimate.se)
        .zip(analytic)
        .enumerate()
        .map(|(i, ((&e, &se), &a))| TapComparison {
            index: i + 1,
            analytic: a,
            empirical: e,
            se,
            z: if se > 0.0 {
                (e - a) / se
            } else if e == a {
                0.0
            } else {
                f64::INFINITY.copysign(e - a)
            },
        })
        .collect()
}
