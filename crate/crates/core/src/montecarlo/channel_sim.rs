use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::Serialize;

use super::estimate::CirEstimate;
use super::walk::Walker;
use super::{stream, BitSource, Domain, McConfig};
use crate::channel::{DetectorConfig, NoiseParams, TransitionMatrix};
use crate::error::{Error, Result};
use crate::infotheory::mutual_information;
use crate::physics::ChannelParams;

/// How the particles of one pulse are distributed over the intervals that
/// follow its release.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseModel {
    /// Every particle performs its own Brownian walk, tracked for `window`
    /// intervals.
    Brownian { window: usize },
    /// Particle fates are drawn jointly: with independent particles the
    /// per-lag counts of a pulse are multinomial with the given per-particle
    /// lag probabilities. The window is `taps.len()`.
    Multinomial { taps: Vec<f64> },
}

impl PulseModel {
    pub fn window(&self) -> usize {
        match self {
            PulseModel::Brownian { window } => *window,
            PulseModel::Multinomial { taps } => taps.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window() < 1 {
            return Err(Error::invalid("pulse window", "must be at least 1"));
        }
        if let PulseModel::Multinomial { taps } = self {
            let total: f64 = taps.iter().sum();
            if taps.iter().any(|&p| !(0.0..=1.0).contains(&p)) || total > 1.0 + 1e-12 {
                return Err(Error::invalid("taps", "must be probabilities summing to at most 1"));
            }
        }
        Ok(())
    }
}

/// Detector decisions tallied over steady-state intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmpiricalTransition {
    pub sent_zero: u64,
    pub ones_given_zero: u64,
    pub sent_one: u64,
    pub ones_given_one: u64,
}

fn ratio(k: u64, n: u64) -> Option<(f64, f64)> {
    (n > 0).then(|| {
        let p = k as f64 / n as f64;
        (p, (p * (1.0 - p) / n as f64).sqrt())
    })
}

impl EmpiricalTransition {
    /// Estimate and standard error of `P(1 | 0)`.
    pub fn p_1_given_0(&self) -> Option<(f64, f64)> {
        ratio(self.ones_given_zero, self.sent_zero)
    }

    /// Estimate and standard error of `P(1 | 1)`.
    pub fn p_1_given_1(&self) -> Option<(f64, f64)> {
        ratio(self.ones_given_one, self.sent_one)
    }

    pub fn matrix(&self) -> Option<TransitionMatrix> {
        Some(TransitionMatrix::from_ones(self.p_1_given_0()?.0, self.p_1_given_1()?.0))
    }

    /// Fraction of zeros among the tallied inputs.
    pub fn pi0(&self) -> Option<f64> {
        let n = self.sent_zero + self.sent_one;
        (n > 0).then(|| self.sent_zero as f64 / n as f64)
    }

    /// Plug-in mutual information of the empirical matrix and input
    /// frequencies.
    pub fn plug_in_mi(&self) -> Option<f64> {
        Some(mutual_information(&self.matrix()?, self.pi0()?))
    }
}

/// Result of a simulated channel run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub bits: Vec<u8>,
    /// Particles absorbed in each interval.
    pub counts: Vec<u64>,
    /// Counts plus external noise.
    pub received: Vec<f64>,
    pub decisions: Vec<u8>,
    /// First interval whose whole ISI window lies inside the run.
    pub steady_from: usize,
    /// Per-lag hit probabilities pooled over all complete pulses.
    pub empirical_cir: Option<CirEstimate>,
    pub empirical_tm: EmpiricalTransition,
}

fn draw_bits(cfg: &McConfig, pi0: f64) -> Vec<u8> {
    match &cfg.bits {
        BitSource::Explicit(pattern) => pattern.iter().copied().cycle().take(cfg.symbols).collect(),
        BitSource::Bernoulli => {
            let mut rng = stream(cfg.seed, Domain::Bits, 0);
            (0..cfg.symbols).map(|_| u8::from(rng.gen::<f64>() >= pi0)).collect()
        }
    }
}

/// Per-lag absorption counts of the pulse released in interval `index`.
fn pulse_counts(
    model: &PulseModel,
    walker: Option<&Walker>,
    cfg: &McConfig,
    index: usize,
) -> Result<Vec<u64>> {
    match model {
        PulseModel::Brownian { .. } => {
            let walker = walker.expect("Brownian model has a walker");
            let first = (index as u64).checked_mul(cfg.particles).ok_or_else(|| {
                Error::invalid("mc.particles", "particle stream index overflows u64")
            })?;
            Ok(walker.tally(cfg.seed, first, cfg.particles).per_interval)
        }
        PulseModel::Multinomial { taps } => {
            let mut rng = stream(cfg.seed, Domain::Pulse, index as u64);
            let mut remaining = cfg.particles;
            let mut left = 1.0;
            let mut out = Vec::with_capacity(taps.len());
            for &p in taps {
                let c = if remaining == 0 || p <= 0.0 {
                    0
                } else {
                    let cond = (p / left).clamp(0.0, 1.0);
                    Binomial::new(remaining, cond)
                        .map_err(|e| Error::invalid("taps", e.to_string()))?
                        .sample(&mut rng)
                };
                out.push(c);
                remaining -= c;
                left -= p;
            }
            Ok(out)
        }
    }
}

/// Simulates `cfg.symbols` intervals of on-off keying with `cfg.particles`
/// particles per "1".
///
/// Each pulse contributes to the `window` intervals starting with its own;
/// the receiver counter is reset every interval but free particles are left
/// in place. One Gaussian noise sample is added per interval and the
/// threshold detector is applied. Transition frequencies are tallied over
/// intervals `window..symbols`, where the ISI window is fully populated.
pub fn simulate_channel(
    params: &ChannelParams,
    noise: &NoiseParams,
    cfg: &McConfig,
    t_sym: f64,
    pi0: f64,
    detector: DetectorConfig,
    model: &PulseModel,
) -> Result<McResult> {
    cfg.validate(t_sym)?;
    noise.validate()?;
    model.validate()?;
    if !(0.0..=1.0).contains(&pi0) {
        return Err(Error::invalid("pi0", format!("must lie in [0, 1], got {pi0}")));
    }
    let window = model.window();
    let walker = match model {
        PulseModel::Brownian { window } => Some(Walker::new(params, cfg, t_sym, *window as f64 * t_sym)?),
        PulseModel::Multinomial { .. } => None,
    };

    let n = cfg.symbols;
    let bits = draw_bits(cfg, pi0);
    let mut counts = vec![0u64; n];
    let mut lag_totals = vec![0u64; window];
    let mut complete_pulses = 0u64;
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b == 1) {
        let pulse = pulse_counts(model, walker.as_ref(), cfg, i)?;
        for (lag, &c) in pulse.iter().enumerate() {
            if let Some(slot) = counts.get_mut(i + lag) {
                *slot += c;
            }
        }
        if i + window <= n {
            complete_pulses += 1;
            for (t, &c) in lag_totals.iter_mut().zip(&pulse) {
                *t += c;
            }
        }
    }

    let normal = Normal::new(noise.mean, noise.std).map_err(|e| Error::invalid("noise", e.to_string()))?;
    let received: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut rng = stream(cfg.seed, Domain::Noise, i as u64);
            c as f64 + normal.sample(&mut rng)
        })
        .collect();
    let decisions: Vec<u8> = received.iter().map(|&r| detector.decide(r)).collect();

    let mut tm = EmpiricalTransition {
        sent_zero: 0,
        ones_given_zero: 0,
        sent_one: 0,
        ones_given_one: 0,
    };
    for i in window.min(n)..n {
        let d = u64::from(decisions[i]);
        if bits[i] == 0 {
            tm.sent_zero += 1;
            tm.ones_given_zero += d;
        } else {
            tm.sent_one += 1;
            tm.ones_given_one += d;
        }
    }

    let empirical_cir = (complete_pulses > 0).then(|| {
        let trials = (complete_pulses * cfg.particles) as f64;
        let p: Vec<f64> = lag_totals.iter().map(|&c| c as f64 / trials).collect();
        let se = p.iter().map(|&x| (x * (1.0 - x) / trials).sqrt()).collect();
        CirEstimate {
            step: match model {
                PulseModel::Brownian { .. } => cfg.step,
                PulseModel::Multinomial { .. } => 0.0,
            },
            particles: complete_pulses * cfg.particles,
            p,
            se,
        }
    });

    Ok(McResult {
        bits,
        counts,
        received,
        decisions,
        steady_from: window.min(n),
        empirical_cir,
        empirical_tm: tm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> McConfig {
        McConfig {
            step: 1e-3,
            particles: 200,
            symbols: 40,
            ..McConfig::default()
        }
    }

    #[test]
    fn all_zero_bits_noiseless() {
        let c = McConfig {
            bits: BitSource::Explicit(vec![0]),
            ..cfg()
        };
        let noise = NoiseParams { mean: 0.0, std: 0.0 };
        for model in [PulseModel::Brownian { window: 3 }, PulseModel::Multinomial { taps: vec![0.05, 0.02] }] {
            let r = simulate_channel(&ChannelParams::default(), &noise, &c, 1.0, 0.5, DetectorConfig { threshold: 0.5 }, &model)
                .unwrap();
            assert!(r.counts.iter().all(|&x| x == 0));
            assert_eq!(r.empirical_tm.p_1_given_0().unwrap().0, 0.0);
            assert_eq!(r.empirical_tm.p_1_given_1(), None);
            assert!(r.empirical_cir.is_none());
        }
    }

    #[test]
    fn multinomial_counts_conserve_particles() {
        let c = McConfig {
            bits: BitSource::Explicit(vec![1, 0, 0]),
            particles: 1000,
            symbols: 60,
            ..cfg()
        };
        let taps = vec![0.5, 0.3, 0.2];
        let r = simulate_channel(
            &ChannelParams::default(),
            &NoiseParams { mean: 0.0, std: 0.0 },
            &c,
            1.0,
            0.5,
            DetectorConfig { threshold: 0.0 },
            &PulseModel::Multinomial { taps },
        )
        .unwrap();
        // Taps sum to one and pulses never overlap.
        assert!(r.counts.chunks(3).all(|c| c.iter().sum::<u64>() == 1000));
        let cir = r.empirical_cir.unwrap();
        assert!((cir.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        let params = ChannelParams::default();
        let noise = NoiseParams::default();
        let model = PulseModel::Brownian { window: 2 };
        let det = DetectorConfig { threshold: 60.0 };
        let a = simulate_channel(&params, &noise, &cfg(), 1.0, 0.5, det, &model).unwrap();
        let b = simulate_channel(&params, &noise, &cfg(), 1.0, 0.5, det, &model).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bernoulli_bits_follow_pi0() {
        let c = McConfig {
            symbols: 20_000,
            particles: 10,
            ..cfg()
        };
        let r = simulate_channel(
            &ChannelParams::default(),
            &NoiseParams::default(),
            &c,
            1.0,
            0.8,
            DetectorConfig { threshold: 0.0 },
            &PulseModel::Multinomial { taps: vec![0.1] },
        )
        .unwrap();
        let zeros = r.bits.iter().filter(|&&b| b == 0).count() as f64 / 20_000.0;
        assert!((zeros - 0.8).abs() < 4.0 * (0.16f64 / 20_000.0).sqrt());
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ChannelParams::default();
        let n = NoiseParams::default();
        let d = DetectorConfig { threshold: 0.0 };
        let m = PulseModel::Multinomial { taps: vec![0.7, 0.7] };
        assert!(simulate_channel(&p, &n, &cfg(), 1.0, 0.5, d, &m).is_err());
        let m = PulseModel::Brownian { window: 0 };
        assert!(simulate_channel(&p, &n, &cfg(), 1.0, 0.5, d, &m).is_err());
        let m = PulseModel::Brownian { window: 1 };
        assert!(simulate_channel(&p, &n, &cfg(), 1.0, 1.5, d, &m).is_err());
    }
}
