//! Gaussian-approximated statistical channel with inter-symbol interference.
//!
//! The received count in an interval is
//! `N_r = N_c + N_p + N_ext`: the current pulse, the tails of the previous
//! `M - 1` pulses, and external Gaussian noise. Each pulse contribution is
//! binomial and is approximated by a Gaussian with matching moments, so
//! conditioned on the preceding bits `s` the received signal is Gaussian and
//! unconditionally it is a `2^(M-1)` component mixture.
//!
//! Sequences are indexed by an integer whose bit `j` is the bit sent `j + 1`
//! intervals ago, which pairs it with tap `p[j + 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::Cir;
use crate::special::q_function;

/// Largest memory length for which the ISI mixture is enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Above this memory length sequence weights are accumulated in log space.
const LOG_WEIGHT_MEMORY: usize = 16;

/// External additive Gaussian noise, in particle-count units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub mean: f64,
    pub std: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            mean: 50.0,
            std: 50.0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(Error::invalid("noise.mean", "must be finite"));
        }
        if !(self.std.is_finite() && self.std >= 0.0) {
            return Err(Error::invalid("noise.std", format!("must be finite and >= 0, got {}", self.std)));
        }
        Ok(())
    }
}

/// Memoryless threshold detector: decide "1" iff the count is `>= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub threshold: f64,
}

impl DetectorConfig {
    pub fn decide(&self, received: f64) -> u8 {
        u8::from(received >= self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Finite Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub components: Vec<MixtureComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("components", "mixture needs at least one component"));
        }
        if let Some(c) = components
            .iter()
            .find(|c| !(c.variance >= 0.0 && c.weight >= 0.0 && c.mean.is_finite()))
        {
            return Err(Error::invalid("components", format!("bad component {c:?}")));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("components", format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// `Pr(X >= tau)`.
    pub fn tail_prob(&self, tau: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * gaussian_tail(c.mean, c.variance, tau))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Density of the continuous part; point masses contribute nothing.
    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.variance > 0.0)
            .map(|c| {
                let z = (x - c.mean) / c.variance.sqrt();
                c.weight * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI * c.variance).sqrt()
            })
            .sum()
    }
}

/// `Pr(X >= tau)` for `X ~ N(mean, variance)`; a zero-variance component is a
/// point mass and counts as above the threshold when `mean >= tau`.
#[inline]
pub fn gaussian_tail(mean: f64, variance: f64, tau: f64) -> f64 {
    if variance > 0.0 {
        q_function((tau - mean) / variance.sqrt())
    } else if mean >= tau {
        1.0
    } else {
        0.0
    }
}

/// Detector transition probabilities `P(decided | sent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub p_1_given_0: f64,
    pub p_0_given_0: f64,
    pub p_1_given_1: f64,
    pub p_0_given_1: f64,
}

impl TransitionMatrix {
    /// Builds the matrix from the two "decide 1" probabilities.
    pub fn from_ones(p_1_given_0: f64, p_1_given_1: f64) -> Self {
        let a = p_1_given_0.clamp(0.0, 1.0);
        let b = p_1_given_1.clamp(0.0, 1.0);
        Self {
            p_1_given_0: a,
            p_0_given_0: 1.0 - a,
            p_1_given_1: b,
            p_0_given_1: 1.0 - b,
        }
    }

    pub fn identity() -> Self {
        Self::from_ones(0.0, 1.0)
    }

    /// Crossover probability `eps` in both directions.
    pub fn binary_symmetric(eps: f64) -> Self {
        Self::from_ones(eps, 1.0 - eps)
    }

    /// Largest deviation of a row sum from one.
    pub fn row_sum_error(&self) -> f64 {
        let r0 = (self.p_0_given_0 + self.p_1_given_0 - 1.0).abs();
        let r1 = (self.p_0_given_1 + self.p_1_given_1 - 1.0).abs();
        r0.max(r1)
    }
}

/// Whether a binomial count with `n_released` trials and success probability
/// `gamma` is safely Gaussian, i.e. its mean sits more than three standard
/// deviations above zero: `n gamma / (1 - gamma) > 9`.
pub fn gaussian_validity(n_released: u64, gamma: f64) -> Result<bool> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    Ok(n_released as f64 * gamma / (1.0 - gamma) > 9.0)
}

/// Gaussian-validity check of the first and last CIR taps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    pub first_tap: f64,
    pub last_tap: f64,
    pub first_valid: bool,
    pub last_valid: bool,
}

impl ValidityReport {
    pub fn for_cir(n_released: u64, cir: &Cir) -> Result<Self> {
        let first_tap = cir.p[0];
        let last_tap = *cir.p.last().expect("CIR has at least one tap");
        Ok(Self {
            first_tap,
            last_tap,
            first_valid: gaussian_validity(n_released, first_tap)?,
            last_valid: gaussian_validity(n_released, last_tap)?,
        })
    }

    pub fn is_valid(&self) -> bool {
        self.first_valid && self.last_valid
    }

    /// Human-readable warning, if either tap fails the check.
    pub fn warning(&self, n_released: u64) -> Option<String> {
        let mut bad = Vec::new();
        if !self.first_valid {
            bad.push(format!("p[1] = {:e}", self.first_tap));
        }
        if !self.last_valid {
            bad.push(format!("p[M] = {:e}", self.last_tap));
        }
        if bad.is_empty() {
            None
        } else {
            Some(format!(
                "Gaussian approximation questionable: N_T*gamma/(1-gamma) <= 9 for {} (N_T = {n_released})",
                bad.join(", ")
            ))
        }
    }
}

/// Probability of one specific sequence with `zeros` zeros and `ones` ones.
fn sequence_weight(pi0: f64, zeros: usize, ones: usize, log_space: bool) -> f64 {
    let pi1 = 1.0 - pi0;
    if log_space {
        let mut l = 0.0;
        if zeros > 0 {
            l += zeros as f64 * pi0.ln();
        }
        if ones > 0 {
            l += ones as f64 * pi1.ln();
        }
        l.exp()
    } else {
        pi0.powi(zeros as i32) * pi1.powi(ones as i32)
    }
}

fn check_pi0(pi0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&pi0) {
        return Err(Error::invalid("pi0", format!("must lie in [0, 1], got {pi0}")));
    }
    Ok(())
}

/// ISI contribution of one preceding-bit sequence (noise excluded).
#[derive(Debug, Clone, Copy, PartialEq)]
struct IsiTerm {
    mean: f64,
    variance: f64,
    ones: u32,
}

/// The ISI channel for one symbol interval: CIR, noise, and pulse size, with
/// the per-sequence ISI moments enumerated once.
#[derive(Debug, Clone)]
pub struct IsiChannel {
    cir: Cir,
    noise: NoiseParams,
    n_released: u64,
    terms: Vec<IsiTerm>,
}

impl IsiChannel {
    pub fn new(cir: Cir, noise: NoiseParams, n_released: u64) -> Result<Self> {
        Self::with_cap(cir, noise, n_released, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(cir: Cir, noise: NoiseParams, n_released: u64, cap: usize) -> Result<Self> {
        noise.validate()?;
        if n_released < 1 {
            return Err(Error::invalid("n_released", "must be at least 1"));
        }
        if cir.memory > cap {
            return Err(Error::EnumerationCap {
                memory: cir.memory,
                cap,
            });
        }
        let nt = n_released as f64;
        let taps = &cir.p[1..];
        let count = 1usize << taps.len();
        let mut terms = Vec::with_capacity(count);
        terms.push(IsiTerm {
            mean: 0.0,
            variance: 0.0,
            ones: 0,
        });
        // Each index extends the one with its lowest set bit cleared.
        for k in 1..count {
            let lag = k.trailing_zeros() as usize;
            let base = terms[k & (k - 1)];
            let p = taps[lag];
            terms.push(IsiTerm {
                mean: base.mean + nt * p,
                variance: base.variance + nt * p * (1.0 - p),
                ones: base.ones + 1,
            });
        }
        Ok(Self {
            cir,
            noise,
            n_released,
            terms,
        })
    }

    pub fn cir(&self) -> &Cir {
        &self.cir
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    pub fn n_released(&self) -> u64 {
        self.n_released
    }

    pub fn memory(&self) -> usize {
        self.cir.memory
    }

    /// Mean and variance added by the current pulse.
    pub fn current_pulse_moments(&self) -> (f64, f64) {
        let p = self.cir.p[0];
        let nt = self.n_released as f64;
        (nt * p, nt * p * (1.0 - p))
    }

    /// Weights of a single sequence with `w` ones, for `w = 0..M-1`.
    pub fn hamming_weights(&self, pi0: f64) -> Result<Vec<f64>> {
        check_pi0(pi0)?;
        let len = self.memory() - 1;
        let log_space = self.memory() > LOG_WEIGHT_MEMORY;
        Ok((0..=len)
            .map(|w| sequence_weight(pi0, len - w, w, log_space))
            .collect())
    }

    /// Mixture of `N_p + N_ext`, the received signal when the current bit is 0.
    pub fn isi_mixture(&self, pi0: f64) -> Result<GaussianMixture> {
        self.received_mixture(pi0, 0)
    }

    /// Mixture of the received signal given the current bit.
    pub fn received_mixture(&self, pi0: f64, current_bit: u8) -> Result<GaussianMixture> {
        let weights = self.hamming_weights(pi0)?;
        let (dm, dv) = if current_bit == 0 {
            (0.0, 0.0)
        } else {
            self.current_pulse_moments()
        };
        let var0 = self.noise.std * self.noise.std;
        let components = self
            .terms
            .iter()
            .map(|t| MixtureComponent {
                weight: weights[t.ones as usize],
                mean: self.noise.mean + t.mean + dm,
                variance: var0 + t.variance + dv,
            })
            .collect();
        GaussianMixture::new(components)
    }

    /// Range `[lowest mean, highest mean]` and largest standard deviation
    /// over the components of both conditional mixtures.
    pub fn component_span(&self) -> (f64, f64, f64) {
        let (dm, dv) = self.current_pulse_moments();
        let var0 = self.noise.std * self.noise.std;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut var_max: f64 = 0.0;
        for t in &self.terms {
            let m = self.noise.mean + t.mean;
            lo = lo.min(m);
            hi = hi.max(m + dm);
            var_max = var_max.max(var0 + t.variance + dv);
        }
        (lo, hi, var_max.sqrt())
    }

    /// Per-Hamming-weight sums of the conditional tail probabilities at `tau`.
    ///
    /// These do not depend on the input distribution, so one evaluation
    /// serves every `pi0`.
    pub fn conditional_tails(&self, tau: f64) -> ConditionalTails {
        let len = self.memory();
        let mut zero = vec![0.0; len];
        let mut one = vec![0.0; len];
        let (dm, dv) = self.current_pulse_moments();
        let var0 = self.noise.std * self.noise.std;
        for t in &self.terms {
            let m = self.noise.mean + t.mean;
            let v = var0 + t.variance;
            zero[t.ones as usize] += gaussian_tail(m, v, tau);
            one[t.ones as usize] += gaussian_tail(m + dm, v + dv, tau);
        }
        ConditionalTails {
            threshold: tau,
            zero,
            one,
            log_space: len > LOG_WEIGHT_MEMORY,
        }
    }

    /// Transition probabilities of the threshold detector at input
    /// distribution `pi0`.
    pub fn transition_probs(&self, pi0: f64, detector: DetectorConfig) -> Result<TransitionMatrix> {
        check_pi0(pi0)?;
        Ok(self.conditional_tails(detector.threshold).transition(pi0))
    }
}

/// Tail probabilities at one threshold, summed per Hamming weight of the
/// preceding-bit sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTails {
    pub threshold: f64,
    zero: Vec<f64>,
    one: Vec<f64>,
    log_space: bool,
}

impl ConditionalTails {
    /// Caller guarantees `pi0` in `[0, 1]`.
    pub fn transition(&self, pi0: f64) -> TransitionMatrix {
        let len = self.zero.len() - 1;
        let mut p10 = 0.0;
        let mut p11 = 0.0;
        for w in 0..=len {
            let weight = sequence_weight(pi0, len - w, w, self.log_space);
            if weight == 0.0 {
                continue;
            }
            p10 += weight * self.zero[w];
            p11 += weight * self.one[w];
        }
        TransitionMatrix::from_ones(p10, p11)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(taps: Vec<f64>, noise: NoiseParams, nt: u64) -> IsiChannel {
        IsiChannel::new(Cir::from_taps(1.0, taps).unwrap(), noise, nt).unwrap()
    }

    #[test]
    fn validity_examples() {
        assert!(gaussian_validity(10_000, 0.001).unwrap());
        assert!(!gaussian_validity(10_000, 0.0).unwrap());
        // 9000 * 0.001 / 0.999 = 9.009009... > 9
        assert!(gaussian_validity(9_000, 0.001).unwrap());
        // 9 * 0.5 / 0.5 = 9 is not > 9
        assert!(!gaussian_validity(9, 0.5).unwrap());
        assert!(gaussian_validity(10, 0.5).unwrap());
        assert!(gaussian_validity(1, 1.0).is_err());
        assert!(gaussian_validity(1, -0.1).is_err());
    }

    #[test]
    fn unit_memory_single_component() {
        let ch = channel(vec![0.05], NoiseParams { mean: 3.0, std: 2.0 }, 100);
        let mix = ch.isi_mixture(0.3).unwrap();
        assert_eq!(
            mix.components,
            vec![MixtureComponent {
                weight: 1.0,
                mean: 3.0,
                variance: 4.0
            }]
        );
    }

    #[test]
    fn uniform_weights_memory_three() {
        let ch = channel(vec![0.05, 0.02, 0.01], NoiseParams::default(), 10_000);
        let mix = ch.isi_mixture(0.5).unwrap();
        assert_eq!(mix.len(), 4);
        assert!(mix.components.iter().all(|c| c.weight == 0.25));
    }

    #[test]
    fn biased_weights_memory_three() {
        let ch = channel(vec![0.05, 0.02, 0.01], NoiseParams { mean: 0.0, std: 1.0 }, 1000);
        let mix = ch.isi_mixture(0.7).unwrap();
        let w: Vec<f64> = mix.components.iter().map(|c| c.weight).collect();
        let want = [0.49, 0.21, 0.21, 0.09];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{w:?}");
        }
        // index 1: one bit one interval back -> tap p[2] = 0.02
        assert!((mix.components[1].mean - 20.0).abs() < 1e-12);
        assert!((mix.components[1].variance - (1.0 + 1000.0 * 0.02 * 0.98)).abs() < 1e-12);
        assert!((mix.components[3].mean - 30.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap() {
        let taps = vec![0.01; 25];
        let cir = Cir::from_taps(0.1, taps).unwrap();
        let e = IsiChannel::new(cir.clone(), NoiseParams::default(), 100).unwrap_err();
        assert_eq!(e, Error::EnumerationCap { memory: 25, cap: 24 });
        assert!(e.to_string().contains("increase the symbol interval"));
        assert!(IsiChannel::with_cap(Cir::from_taps(0.1, vec![0.01; 5]).unwrap(), NoiseParams::default(), 10, 4).is_err());
    }

    #[test]
    fn midpoint_threshold_gives_half() {
        let ch = channel(vec![0.05], NoiseParams { mean: 7.0, std: 3.0 }, 100);
        let tm = ch.transition_probs(0.5, DetectorConfig { threshold: 7.0 }).unwrap();
        assert_eq!(tm.p_1_given_0, 0.5);
    }

    #[test]
    fn threshold_limits() {
        let ch = channel(vec![0.05, 0.01], NoiseParams::default(), 10_000);
        let lo = ch.transition_probs(0.4, DetectorConfig { threshold: -1e9 }).unwrap();
        assert_eq!((lo.p_1_given_0, lo.p_1_given_1), (1.0, 1.0));
        let hi = ch.transition_probs(0.4, DetectorConfig { threshold: 1e9 }).unwrap();
        assert_eq!((hi.p_1_given_0, hi.p_1_given_1), (0.0, 0.0));
        let ninf = ch.transition_probs(0.4, DetectorConfig { threshold: f64::NEG_INFINITY }).unwrap();
        assert_eq!(ninf.p_1_given_0, 1.0);
    }

    #[test]
    fn point_mass_tie_rule() {
        // No noise, no ISI: the "0" hypothesis is a point mass at zero.
        let ch = channel(vec![0.05], NoiseParams { mean: 0.0, std: 0.0 }, 100);
        let at = ch.transition_probs(0.5, DetectorConfig { threshold: 0.0 }).unwrap();
        assert_eq!(at.p_1_given_0, 1.0);
        let above = ch.transition_probs(0.5, DetectorConfig { threshold: 1e-12 }).unwrap();
        assert_eq!(above.p_1_given_0, 0.0);
    }

    #[test]
    fn weights_collapse_at_endpoints() {
        let ch = channel(vec![0.05, 0.02, 0.01, 0.005], NoiseParams::default(), 10_000);
        let all_zero = ch.isi_mixture(1.0).unwrap();
        assert_eq!(all_zero.components[0].weight, 1.0);
        assert!(all_zero.components[1..].iter().all(|c| c.weight == 0.0));
        let all_one = ch.isi_mixture(0.0).unwrap();
        assert_eq!(all_one.components.last().unwrap().weight, 1.0);
        assert_eq!(all_one.total_weight(), 1.0);
    }

    #[test]
    fn log_space_weights_match_direct() {
        for &pi0 in &[0.001, 0.3, 0.5, 0.77, 0.999] {
            for &(z, o) in &[(0usize, 20usize), (7, 13), (20, 0), (10, 10)] {
                let a = sequence_weight(pi0, z, o, false);
                let b = sequence_weight(pi0, z, o, true);
                if a > 1e-290 {
                    assert!(((a - b) / a).abs() < 1e-12, "{pi0} {z} {o}: {a} {b}");
                }
            }
        }
        assert_eq!(sequence_weight(1.0, 5, 0, true), 1.0);
        assert_eq!(sequence_weight(0.0, 0, 5, true), 1.0);
        assert_eq!(sequence_weight(0.0, 1, 5, true), 0.0);
    }

    #[test]
    fn grouped_tails_match_explicit_mixture() {
        let ch = channel(vec![0.05, 0.02, 0.01, 0.004, 0.002], NoiseParams { mean: 10.0, std: 20.0 }, 10_000);
        for &pi0 in &[0.1, 0.5, 0.8] {
            for &tau in &[-50.0, 100.0, 400.0, 700.0] {
                let tm = ch.transition_probs(pi0, DetectorConfig { threshold: tau }).unwrap();
                let m0 = ch.received_mixture(pi0, 0).unwrap().tail_prob(tau);
                let m1 = ch.received_mixture(pi0, 1).unwrap().tail_prob(tau);
                assert!((tm.p_1_given_0 - m0).abs() < 1e-14);
                assert!((tm.p_1_given_1 - m1).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn detector_closed_boundary() {
        let d = DetectorConfig { threshold: 2.5 };
        assert_eq!(d.decide(2.5), 1);
        assert_eq!(d.decide(2.499), 0);
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseParams { mean: 0.0, std: -1.0 }.validate().is_err());
        assert!(NoiseParams { mean: f64::NAN, std: 1.0 }.validate().is_err());
        assert!(NoiseParams { mean: -5.0, std: 0.0 }.validate().is_ok());
    }
}
