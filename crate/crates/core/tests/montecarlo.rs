use diffrate_core::montecarlo::*;
use diffrate_core::*;

fn cfg(step: f64, particles: u64) -> McConfig {
    McConfig {
        step,
        particles,
        ..McConfig::default()
    }
}

#[test]
fn long_horizon_fraction_approaches_geometric_bound() {
    let params = ChannelParams::default();
    let n = 20_000;
    let r = simulate_release(&params, &cfg(2.5e-5, n), 1e4, 1e4).unwrap();
    let frac = r.per_interval[0] as f64 / n as f64;
    let bound = params.hit_bound();
    let se = (bound * (1.0 - bound) / n as f64).sqrt();
    assert!((frac - bound).abs() < 3.0 * se, "{frac} vs {bound} (se {se})");
}

#[test]
fn step_bias_shrinks_like_root_step() {
    let params = ChannelParams::default();
    let exact = interval_hit_prob(&params, 2.0, 1).unwrap();
    let errs: Vec<f64> = [1e-4, 2.5e-5]
        .iter()
        .map(|&dt| {
            let e = estimate_cir(&params, &cfg(dt, 200_000), 2.0, 1).unwrap();
            exact - e.p[0]
        })
        .collect();
    // End-of-step testing misses crossings, so the estimate is biased low,
    // and quartering the step should roughly halve the bias.
    assert!(errs[0] > 0.0 && errs[1] > 0.0, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((1.4..3.0).contains(&ratio), "bias ratio {ratio}");
}

#[test]
fn silent_transmitter_produces_nothing() {
    let params = ChannelParams::default();
    let c = McConfig {
        symbols: 200,
        ..cfg(1e-3, 100)
    };
    let noise = NoiseParams { mean: 0.0, std: 0.0 };
    let r = simulate_channel(
        &params,
        &noise,
        &c,
        1.0,
        1.0,
        DetectorConfig { threshold: 1e-9 },
        &PulseModel::Brownian { window: 9 },
    )
    .unwrap();
    assert!(r.bits.iter().all(|&b| b == 0));
    assert!(r.counts.iter().all(|&x| x == 0));
    assert!(r.received.iter().all(|&x| x == 0.0));
    assert_eq!(r.empirical_tm.sent_zero, 191);
    assert_eq!(r.empirical_tm.p_1_given_0(), Some((0.0, 0.0)));
}

#[test]
fn channel_runs_ignore_thread_count() {
    let params = ChannelParams::default();
    let c = McConfig {
        symbols: 30,
        ..cfg(2e-3, 5000)
    };
    let run = || {
        simulate_channel(
            &params,
            &NoiseParams::default(),
            &c,
            1.0,
            0.5,
            DetectorConfig { threshold: 300.0 },
            &PulseModel::Brownian { window: 3 },
        )
        .unwrap()
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
    assert_eq!(one, three);
}

#[test]
fn multinomial_pulses_reproduce_taps() {
    let params = ChannelParams::default();
    let cir = build_cir(&params, 1.0).unwrap();
    let c = McConfig {
        symbols: 4000,
        ..cfg(1e-3, params.n_released)
    };
    let r = simulate_channel(
        &params,
        &NoiseParams::default(),
        &c,
        1.0,
        0.5,
        DetectorConfig { threshold: 300.0 },
        &PulseModel::Multinomial { taps: cir.p.clone() },
    )
    .unwrap();
    let est = r.empirical_cir.unwrap();
    for t in compare_cir(&est, &cir.p) {
        assert!(t.z.abs() < 4.0, "{t:?}");
    }
}
