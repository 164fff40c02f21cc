//! Mutual information, detector-threshold and input-distribution
//! optimisation, and achievable rate.
//!
//! The transition matrix depends on `pi0` through the ISI weights, so each
//! input distribution induces its own binary channel. Capacity here is the
//! maximum over `pi0` of the mutual information of that `pi0`-dependent
//! channel with its own optimal threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ConditionalTails, IsiChannel, NoiseParams, TransitionMatrix};
use crate::error::{Error, Result};
use crate::physics::{build_cir, ChannelParams};
use crate::search::{golden_section_max, linspace};

/// Points in the coarse threshold grid.
pub const THRESHOLD_GRID_POINTS: usize = 512;
/// Rounds of local refinement after the coarse grid.
pub const THRESHOLD_REFINE_ROUNDS: usize = 3;
/// Step reduction per refinement round.
pub const THRESHOLD_REFINE_FACTOR: usize = 10;
/// Half-width of the threshold search span, in largest component standard deviations.
pub const THRESHOLD_SPAN_SIGMAS: f64 = 5.0;
/// Thresholds whose MI differs by no more than this are considered tied.
pub const MI_TIE_TOL: f64 = 1e-12;
/// Capacity grids stay inside `(eps, 1 - eps)`.
pub const PI0_EPS: f64 = 1e-3;
/// Default `pi0` grid resolution for capacity.
pub const PI0_GRID_STEP: f64 = 0.01;
/// Bracket width at which golden-section refinement of `pi0` stops.
pub const PI0_REFINE_TOL: f64 = 1e-4;

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Mutual information between input and detector output, in bits.
///
/// Terms with zero joint probability contribute nothing.
pub fn mutual_information(tm: &TransitionMatrix, pi0: f64) -> f64 {
    let pi1 = 1.0 - pi0;
    let out0 = pi0 * tm.p_0_given_0 + pi1 * tm.p_0_given_1;
    let out1 = pi0 * tm.p_1_given_0 + pi1 * tm.p_1_given_1;
    let term = |prior: f64, cond: f64, marginal: f64| {
        let joint = prior * cond;
        if joint > 0.0 && marginal > 0.0 {
            joint * (cond / marginal).log2()
        } else {
            0.0
        }
    };
    let mi = term(pi0, tm.p_0_given_0, out0)
        + term(pi1, tm.p_0_given_1, out0)
        + term(pi0, tm.p_1_given_0, out1)
        + term(pi1, tm.p_1_given_1, out1);
    mi.max(0.0)
}

/// Bits per second from bits per channel use.
pub fn achievable_rate(mi: f64, t_sym: f64) -> Result<f64> {
    if !(t_sym.is_finite() && t_sym > 0.0) {
        return Err(Error::invalid("t_sym", format!("must be finite and > 0, got {t_sym}")));
    }
    Ok(mi / t_sym)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptimum {
    pub threshold: f64,
    pub mi: f64,
    pub transition: TransitionMatrix,
}

/// A fully evaluated design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub t_sym: f64,
    pub pi0: f64,
    pub threshold: f64,
    pub mi: f64,
    pub rate: f64,
    pub transition: TransitionMatrix,
}

impl OperatingPoint {
    pub fn new(t_sym: f64, pi0: f64, opt: ThresholdOptimum) -> Result<Self> {
        Ok(Self {
            t_sym,
            pi0,
            threshold: opt.threshold,
            mi: opt.mi,
            rate: achievable_rate(opt.mi, t_sym)?,
            transition: opt.transition,
        })
    }
}

/// Threshold optimiser for one channel.
///
/// The coarse grid depends only on the channel, so its conditional tails are
/// computed once and shared by every `pi0`.
pub struct ThresholdSearch<'a> {
    channel: &'a IsiChannel,
    coarse: Vec<ConditionalTails>,
    step: f64,
}

impl<'a> ThresholdSearch<'a> {
    pub fn new(channel: &'a IsiChannel) -> Self {
        let (lo, hi, sigma) = channel.component_span();
        let a = lo - THRESHOLD_SPAN_SIGMAS * sigma;
        let b = hi + THRESHOLD_SPAN_SIGMAS * sigma;
        let grid = linspace(a, b, THRESHOLD_GRID_POINTS);
        let step = (b - a) / (THRESHOLD_GRID_POINTS - 1) as f64;
        let coarse = grid.iter().map(|&t| channel.conditional_tails(t)).collect();
        Self {
            channel,
            coarse,
            step,
        }
    }

    pub fn channel(&self) -> &IsiChannel {
        self.channel
    }

    /// Final refinement step, the resolution of the returned threshold.
    pub fn resolution(&self) -> f64 {
        self.step / (THRESHOLD_REFINE_FACTOR.pow(THRESHOLD_REFINE_ROUNDS as u32)) as f64
    }

    /// Threshold maximising MI at input distribution `pi0`.
    pub fn optimize(&self, pi0: f64) -> Result<ThresholdOptimum> {
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::invalid("pi0", format!("must lie in [0, 1], got {pi0}")));
        }
        if pi0 == 0.0 || pi0 == 1.0 {
            // MI vanishes identically; report the noiseless midpoint.
            let (dm, _) = self.channel.current_pulse_moments();
            let threshold = self.channel.noise().mean + 0.5 * dm;
            let transition = self.channel.conditional_tails(threshold).transition(pi0);
            return Ok(ThresholdOptimum {
                threshold,
                mi: 0.0,
                transition,
            });
        }

        let coarse: Vec<(f64, TransitionMatrix)> =
            self.coarse.iter().map(|t| (t.threshold, t.transition(pi0))).collect();
        let mut best = pick_best(&coarse, pi0);
        let mut step = self.step;
        let half = THRESHOLD_REFINE_FACTOR as i64;
        for _ in 0..THRESHOLD_REFINE_ROUNDS {
            let centre = best.threshold;
            step /= THRESHOLD_REFINE_FACTOR as f64;
            let local: Vec<(f64, TransitionMatrix)> = (-half..=half)
                .map(|j| {
                    let tau = centre + j as f64 * step;
                    let tm = if j == 0 {
                        best.transition
                    } else {
                        self.channel.conditional_tails(tau).transition(pi0)
                    };
                    (tau, tm)
                })
                .collect();
            best = pick_best(&local, pi0);
        }
        Ok(best)
    }
}

/// Highest MI; ties within `MI_TIE_TOL` go to the smallest threshold.
/// `candidates` must be sorted by threshold.
fn pick_best(candidates: &[(f64, TransitionMatrix)], pi0: f64) -> ThresholdOptimum {
    let scored: Vec<(f64, f64, TransitionMatrix)> = candidates
        .iter()
        .map(|&(tau, tm)| (tau, mutual_information(&tm, pi0), tm))
        .collect();
    let top = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let &(threshold, mi, transition) = scored
        .iter()
        .find(|s| s.1 >= top - MI_TIE_TOL)
        .expect("non-empty candidate list");
    ThresholdOptimum {
        threshold,
        mi,
        transition,
    }
}

/// Threshold maximising MI for one channel and input distribution.
pub fn optimize_threshold(channel: &IsiChannel, pi0: f64) -> Result<ThresholdOptimum> {
    ThresholdSearch::new(channel).optimize(pi0)
}

/// Default capacity grid: multiples of `step` inside `(0, 1)`, kept within
/// `[PI0_EPS, 1 - PI0_EPS]`.
pub fn pi0_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 0.5) {
        return Err(Error::invalid("step", format!("must lie in (0, 0.5), got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    let mut grid: Vec<f64> = (1..n)
        .map(|k| (k as f64 * step).clamp(PI0_EPS, 1.0 - PI0_EPS))
        .filter(|&x| x < 1.0)
        .collect();
    grid.dedup();
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub pi0_star: f64,
    pub capacity: f64,
    pub threshold_at_optimum: f64,
    pub transition: TransitionMatrix,
    /// `(pi0, mi)` at every grid point, in grid order.
    pub profile: Vec<(f64, f64)>,
}

fn check_capacity_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::invalid("pi0 grid", "needs at least 3 points"));
    }
    if let Some(&bad) = grid.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::invalid("pi0 grid", format!("points must lie in (0, 1), got {bad}")));
    }
    Ok(())
}

/// Memoryless capacity: the largest MI over the `pi0` grid, refined by
/// golden-section search around the best grid point.
pub fn capacity(channel: &IsiChannel, grid: &[f64]) -> Result<CapacityResult> {
    capacity_with(&ThresholdSearch::new(channel), grid)
}

pub fn capacity_with(search: &ThresholdSearch<'_>, grid: &[f64]) -> Result<CapacityResult> {
    check_capacity_grid(grid)?;
    let evaluated = grid
        .iter()
        .map(|&pi0| Ok((pi0, search.optimize(pi0)?)))
        .collect::<Result<Vec<_>>>()?;
    let profile: Vec<(f64, f64)> = evaluated.iter().map(|(p, o)| (*p, o.mi)).collect();

    let (best_idx, _) = evaluated
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, (_, o))| if o.mi > acc.1 { (i, o.mi) } else { acc });
    let (mut pi0_star, mut best) = evaluated[best_idx];

    let lo = if best_idx > 0 { evaluated[best_idx - 1].0 } else { PI0_EPS.min(pi0_star) };
    let hi = if best_idx + 1 < evaluated.len() {
        evaluated[best_idx + 1].0
    } else {
        (1.0 - PI0_EPS).max(pi0_star)
    };
    if hi - lo > PI0_REFINE_TOL {
        let (x, _) = golden_section_max(|p| search.optimize(p).map(|o| o.mi), lo, hi, PI0_REFINE_TOL)?;
        let refined = search.optimize(x)?;
        if refined.mi > best.mi {
            pi0_star = x;
            best = refined;
        }
    }
    Ok(CapacityResult {
        pi0_star,
        capacity: best.mi,
        threshold_at_optimum: best.threshold,
        transition: best.transition,
        profile,
    })
}

/// One cell of a `(t_sym, sigma_ext, pi0)` sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub t_sym: f64,
    pub sigma_ext: f64,
    pub pi0: f64,
    pub memory: Option<usize>,
    pub outcome: std::result::Result<OperatingPoint, String>,
}

/// One cell of a capacity sweep over `(t_sym, sigma_ext)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityCell {
    pub t_sym: f64,
    pub sigma_ext: f64,
    pub memory: Option<usize>,
    pub outcome: std::result::Result<CapacityPoint, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityPoint {
    pub pi0_star: f64,
    pub capacity: f64,
    pub threshold: f64,
    pub rate: f64,
}

fn check_grid(name: &'static str, grid: &[f64], ok: impl Fn(f64) -> bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(name, "grid is empty"));
    }
    if let Some(&bad) = grid.iter().find(|&&x| !ok(x)) {
        return Err(Error::invalid(name, format!("value {bad} out of domain")));
    }
    Ok(())
}

/// `(t_sym, sigma_ext)` rows in output order.
fn rows(t_sym_grid: &[f64], sigma_grid: &[f64]) -> Vec<(f64, f64)> {
    t_sym_grid
        .iter()
        .flat_map(|&t| sigma_grid.iter().map(move |&s| (t, s)))
        .collect()
}

fn row_channel(params: &ChannelParams, noise: NoiseParams, t_sym: f64) -> Result<IsiChannel> {
    let cir = build_cir(params, t_sym)?;
    IsiChannel::new(cir, noise, params.n_released)
}

/// Full Cartesian sweep. Each `t_sym` gets its own CIR and each cell its own
/// optimised threshold. Per-cell failures are recorded, not propagated.
///
/// Cells are ordered by `t_sym`, then `sigma_ext`, then `pi0`. Without a
/// sigma grid the noise standard deviation of `noise` is used.
pub fn sweep(
    params: &ChannelParams,
    noise: &NoiseParams,
    t_sym_grid: &[f64],
    pi0_grid: &[f64],
    sigma_grid: Option<&[f64]>,
) -> Result<Vec<SweepCell>> {
    params.validate()?;
    noise.validate()?;
    check_grid("t_sym", t_sym_grid, |x| x.is_finite() && x > 0.0)?;
    check_grid("pi0", pi0_grid, |x| (0.0..=1.0).contains(&x))?;
    let own_sigma = [noise.std];
    let sigmas = sigma_grid.unwrap_or(&own_sigma);
    check_grid("sigma_ext", sigmas, |x| x.is_finite() && x >= 0.0)?;

    let cells = rows(t_sym_grid, sigmas)
        .into_par_iter()
        .map(|(t_sym, sigma_ext)| {
            let noise = NoiseParams {
                mean: noise.mean,
                std: sigma_ext,
            };
            let cell = |pi0: f64, memory, outcome| SweepCell {
                t_sym,
                sigma_ext,
                pi0,
                memory,
                outcome,
            };
            match row_channel(params, noise, t_sym) {
                Err(e) => pi0_grid
                    .iter()
                    .map(|&pi0| cell(pi0, None, Err(e.to_string())))
                    .collect::<Vec<_>>(),
                Ok(channel) => {
                    let search = ThresholdSearch::new(&channel);
                    let memory = Some(channel.memory());
                    pi0_grid
                        .par_iter()
                        .map(|&pi0| {
                            let outcome = search
                                .optimize(pi0)
                                .and_then(|o| OperatingPoint::new(t_sym, pi0, o))
                                .map_err(|e| e.to_string());
                            cell(pi0, memory, outcome)
                        })
                        .collect()
                }
            }
        })
        .collect::<Vec<Vec<SweepCell>>>();
    Ok(cells.into_iter().flatten().collect())
}

/// Capacity and optimal-input rate over a `(t_sym, sigma_ext)` grid.
pub fn capacity_sweep(
    params: &ChannelParams,
    noise_mean: f64,
    t_sym_grid: &[f64],
    sigma_grid: &[f64],
    pi0_grid: &[f64],
) -> Result<Vec<CapacityCell>> {
    params.validate()?;
    if !noise_mean.is_finite() {
        return Err(Error::invalid("noise.mean", "must be finite"));
    }
    check_grid("t_sym", t_sym_grid, |x| x.is_finite() && x > 0.0)?;
    check_grid("sigma_ext", sigma_grid, |x| x.is_finite() && x >= 0.0)?;
    check_capacity_grid(pi0_grid)?;

    Ok(rows(t_sym_grid, sigma_grid)
        .into_par_iter()
        .map(|(t_sym, sigma_ext)| {
            let noise = NoiseParams {
                mean: noise_mean,
                std: sigma_ext,
            };
            let (memory, outcome) = match row_channel(params, noise, t_sym) {
                Err(e) => (None, Err(e.to_string())),
                Ok(channel) => {
                    let outcome = capacity(&channel, pi0_grid)
                        .and_then(|c| {
                            Ok(CapacityPoint {
                                pi0_star: c.pi0_star,
                                capacity: c.capacity,
                                threshold: c.threshold_at_optimum,
                                rate: achievable_rate(c.capacity, t_sym)?,
                            })
                        })
                        .map_err(|e| e.to_string());
                    (Some(channel.memory()), outcome)
                }
            };
            CapacityCell {
                t_sym,
                sigma_ext,
                memory,
                outcome,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{memory_length, Cir};

    #[test]
    fn identity_channel_one_bit() {
        let mi = mutual_information(&TransitionMatrix::identity(), 0.5);
        assert!((mi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn useless_channel_zero() {
        for &pi0 in &[0.1, 0.5, 0.9] {
            let tm = TransitionMatrix::from_ones(0.3, 0.3);
            assert!(mutual_information(&tm, pi0).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_symmetric_channel() {
        // 1 - H(0.11), evaluated at 40 digits.
        let mi = mutual_information(&TransitionMatrix::binary_symmetric(0.11), 0.5);
        assert!((mi - 0.500_084_041_835_472).abs() < 1e-14, "{mi}");
        assert!((mi - (1.0 - binary_entropy(0.11))).abs() < 1e-14);
    }

    #[test]
    fn endpoints_vanish() {
        let tm = TransitionMatrix::from_ones(0.2, 0.7);
        assert_eq!(mutual_information(&tm, 0.0), 0.0);
        assert_eq!(mutual_information(&tm, 1.0), 0.0);
    }

    #[test]
    fn rate_examples() {
        assert!((achievable_rate(0.71, 0.6).unwrap() - 1.183_333_333_333_333_3).abs() < 1e-15);
        assert_eq!(achievable_rate(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(achievable_rate(0.5, 2.0).unwrap() * 2.0, achievable_rate(0.5, 1.0).unwrap());
        assert!(achievable_rate(0.5, 0.0).is_err());
    }

    /// One tap with p close to 1: the pulse adds mean ~`nt` and a negligible
    /// variance, so both hypotheses have the noise variance.
    fn symmetric_channel(nt: u64) -> IsiChannel {
        let p = 1.0 - 1e-12;
        IsiChannel::new(Cir::from_taps(1.0, vec![p]).unwrap(), NoiseParams { mean: 0.0, std: 40.0 }, nt).unwrap()
    }

    #[test]
    fn symmetric_threshold_at_midpoint() {
        let ch = symmetric_channel(100);
        let (m, v) = ch.current_pulse_moments();
        assert!(v < 1e-8);
        let s = ThresholdSearch::new(&ch);
        let opt = s.optimize(0.5).unwrap();
        assert!((opt.threshold - m / 2.0).abs() <= 2.0 * s.resolution(), "{}", opt.threshold);
        // Optimal MI for antipodal Gaussians at SNR (m/2)/sigma = 1.25.
        let eps = crate::special::q_function(1.25);
        assert!((opt.mi - (1.0 - binary_entropy(eps))).abs() < 1e-9);
    }

    #[test]
    fn local_optimality() {
        let ch = IsiChannel::new(
            Cir::from_taps(0.5, vec![0.03, 0.015, 0.008, 0.005]).unwrap(),
            NoiseParams::default(),
            10_000,
        )
        .unwrap();
        let s = ThresholdSearch::new(&ch);
        for &pi0 in &[0.2, 0.5, 0.7] {
            let opt = s.optimize(pi0).unwrap();
            let d = s.resolution();
            for tau in [opt.threshold - d, opt.threshold + d] {
                let tm = ch.conditional_tails(tau).transition(pi0);
                assert!(opt.mi >= mutual_information(&tm, pi0) - MI_TIE_TOL);
            }
        }
    }

    #[test]
    fn endpoint_threshold_default() {
        let ch = symmetric_channel(100);
        let opt = optimize_threshold(&ch, 1.0).unwrap();
        assert_eq!(opt.mi, 0.0);
        assert!((opt.threshold - 50.0).abs() < 1e-9);
        assert!(optimize_threshold(&ch, 1.5).is_err());
    }

    #[test]
    fn pi0_grid_shape() {
        let g = pi0_grid(0.01).unwrap();
        assert_eq!(g.len(), 99);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[98] - 0.99).abs() < 1e-12);
        let coarse = pi0_grid(0.25).unwrap();
        assert_eq!(coarse, vec![0.25, 0.5, 0.75]);
        assert!(pi0_grid(0.0).is_err());
    }

    #[test]
    fn capacity_dominates_grid() {
        let ch = IsiChannel::new(
            Cir::from_taps(0.5, vec![0.03, 0.015, 0.008]).unwrap(),
            NoiseParams::default(),
            10_000,
        )
        .unwrap();
        let grid = pi0_grid(0.05).unwrap();
        let c = capacity(&ch, &grid).unwrap();
        let grid_max = c.profile.iter().map(|x| x.1).fold(0.0, f64::max);
        assert!(c.capacity >= grid_max);
        assert!(c.capacity <= 1.0);
        assert!(capacity(&ch, &[0.5, 0.6]).is_err());
        assert!(capacity(&ch, &[0.0, 0.5, 0.6]).is_err());
    }

    #[test]
    fn sweep_records_cell_errors() {
        // With a small alpha, 0.05 s needs more than 24 intervals of memory.
        let params = ChannelParams { alpha: 1e-4, ..ChannelParams::default() };
        let cells = sweep(&params, &NoiseParams::default(), &[0.05, 20.0], &[0.5], None).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells[0].outcome.as_ref().unwrap_err().contains("enumeration cap"));
        let ok = cells[1].outcome.as_ref().unwrap();
        assert_eq!(ok.t_sym, 20.0);
        assert_eq!(cells[1].memory, Some(memory_length(&params, 20.0).unwrap()));
        assert!(sweep(&params, &NoiseParams::default(), &[], &[0.5], None).is_err());
    }
}
