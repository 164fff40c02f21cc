//! One function per subcommand, each producing a [`Report`].

use diffrate_core::montecarlo::{
    compare_cir, estimate_cir, extrapolate_to_zero_step, simulate_channel, McConfig, PulseModel,
};
use diffrate_core::{
    build_cir, capacity_sweep, cumulative_absorbed, mutual_information, optimize_threshold, pi0_grid, sweep,
    ChannelParams, DetectorConfig, IsiChannel, ValidityReport,
};
use serde_json::{json, Value};

use crate::config::{PulseKind, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Largest |z| accepted by the Monte-Carlo comparisons.
pub const Z_LIMIT: f64 = 3.0;
/// Largest accepted gap between plug-in and analytic MI, bits.
pub const MI_LIMIT: f64 = 0.02;

pub const CIR_COLUMNS: &[&str] = &["t_sym", "t_alpha", "memory", "i", "p", "cumulative"];
pub const MI_COLUMNS: &[&str] = &["t_sym", "pi0", "memory", "tau_star", "mi", "error"];
pub const RATE_COLUMNS: &[&str] = &["t_sym", "pi0", "memory", "tau_star", "mi", "rate", "error"];
pub const NOISE_COLUMNS: &[&str] =
    &["t_sym", "sigma_ext", "memory", "pi0_star", "capacity", "tau_star", "rate", "error"];
pub const MC_COLUMNS: &[&str] = &["section", "quantity", "i", "analytic", "empirical", "se", "z", "pass"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Cir,
    MiSurface,
    RateSurface,
    NoiseSweep,
    McValidate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cir => "cir",
            Command::MiSurface => "mi-surface",
            Command::RateSurface => "rate-surface",
            Command::NoiseSweep => "noise-sweep",
            Command::McValidate => "mc-validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: Command,
    pub table: Table,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn meta(&self, cfg: &RunConfig) -> Value {
        json!({
            "command": self.command.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "warnings": self.warnings,
        })
    }

    pub fn render(&self, cfg: &RunConfig) -> Result<String, CliError> {
        match cfg.output.format {
            crate::config::Format::Csv => self.table.to_csv(),
            crate::config::Format::Json => self.table.to_json(self.meta(cfg)),
        }
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match command {
        Command::Cir => cir(cfg),
        Command::MiSurface => surface(cfg, false),
        Command::RateSurface => surface(cfg, true),
        Command::NoiseSweep => noise_sweep(cfg),
        Command::McValidate => mc_validate(cfg),
    }
}

/// Gaussian-validity warnings for each symbol interval.
fn validity_warnings(params: &ChannelParams, t_grid: &[f64]) -> Vec<String> {
    t_grid
        .iter()
        .filter_map(|&t| {
            let cir = build_cir(params, t).ok()?;
            let report = ValidityReport::for_cir(params.n_released, &cir).ok()?;
            report.warning(params.n_released).map(|w| format!("T_sym = {t} s: {w}"))
        })
        .collect()
}

fn cir(cfg: &RunConfig) -> Result<Report, CliError> {
    let grid = cfg.t_sym_grid()?;
    let params = &cfg.channel;
    let mut table = Table::new(CIR_COLUMNS);
    for &t in &grid {
        let cir = build_cir(params, t)?;
        for (k, &p) in cir.p.iter().enumerate() {
            let cumulative = cumulative_absorbed(params, (k + 1) as f64 * t)?;
            table.push(vec![
                t.into(),
                cir.t_alpha.into(),
                cir.memory.into(),
                (k + 1).into(),
                p.into(),
                cumulative.into(),
            ]);
        }
    }
    Ok(Report {
        command: Command::Cir,
        table,
        warnings: validity_warnings(params, &grid),
    })
}

fn surface(cfg: &RunConfig, with_rate: bool) -> Result<Report, CliError> {
    let t_grid = cfg.t_sym_grid()?;
    let pi0s = cfg.pi0_grid()?;
    let cells = sweep(&cfg.channel, &cfg.noise, &t_grid, &pi0s, None)?;
    let mut table = Table::new(if with_rate { RATE_COLUMNS } else { MI_COLUMNS });
    for c in cells {
        let mut row: Vec<Cell> = vec![c.t_sym.into(), c.pi0.into(), c.memory.into()];
        match &c.outcome {
            Ok(op) => {
                row.push(op.threshold.into());
                row.push(op.mi.into());
                if with_rate {
                    row.push(op.rate.into());
                }
                row.push(Cell::Null);
            }
            Err(e) => {
                row.extend([Cell::Null, Cell::Null]);
                if with_rate {
                    row.push(Cell::Null);
                }
                row.push(e.as_str().into());
            }
        }
        table.push(row);
    }
    Ok(Report {
        command: if with_rate { Command::RateSurface } else { Command::MiSurface },
        table,
        warnings: validity_warnings(&cfg.channel, &t_grid),
    })
}

fn noise_sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let t_grid = cfg.t_sym_grid()?;
    let sigmas = cfg.sigma_grid()?;
    let pi0s = pi0_grid(cfg.grids.capacity_pi0_step)?;
    let cells = capacity_sweep(&cfg.channel, cfg.noise.mean, &t_grid, &sigmas, &pi0s)?;
    let mut table = Table::new(NOISE_COLUMNS);
    for c in cells {
        let mut row: Vec<Cell> = vec![c.t_sym.into(), c.sigma_ext.into(), c.memory.into()];
        match &c.outcome {
            Ok(p) => row.extend([
                p.pi0_star.into(),
                p.capacity.into(),
                p.threshold.into(),
                p.rate.into(),
                Cell::Null,
            ]),
            Err(e) => row.extend([Cell::Null, Cell::Null, Cell::Null, Cell::Null, e.as_str().into()]),
        }
        table.push(row);
    }
    Ok(Report {
        command: Command::NoiseSweep,
        table,
        warnings: validity_warnings(&cfg.channel, &t_grid),
    })
}

fn z_cell(z: f64) -> Cell {
    if z.is_finite() {
        z.into()
    } else {
        Cell::Null
    }
}

fn mc_validate(cfg: &RunConfig) -> Result<Report, CliError> {
    let mc = &cfg.mc;
    let params = &cfg.channel;
    if mc.steps.len() < 2 {
        return Err(CliError::Config("mc.steps needs at least two time steps".into()));
    }
    if !(mc.pi0 > 0.0 && mc.pi0 < 1.0) {
        return Err(CliError::Config(format!("mc.pi0 must lie in (0, 1), got {}", mc.pi0)));
    }
    let base = McConfig {
        seed: mc.seed,
        particles: mc.particles,
        ..McConfig::default()
    };
    let check = |name: &str, t: f64, step: f64| {
        McConfig { step, ..base.clone() }
            .validate(t)
            .map_err(|e| CliError::Config(format!("{name} = {t}: {e}")))
    };
    for &step in &mc.steps {
        check("mc.cir_t_sym", mc.cir_t_sym, step)?;
    }
    check("mc.channel_t_sym", mc.channel_t_sym, mc.pulse_step)?;
    let mut table = Table::new(MC_COLUMNS);

    // Impulse response: one estimate per time step, then the extrapolation.
    let analytic = build_cir(params, mc.cir_t_sym)?;
    let ladder = mc
        .steps
        .iter()
        .map(|&step| estimate_cir(params, &McConfig { step, ..base.clone() }, mc.cir_t_sym, analytic.memory))
        .collect::<Result<Vec<_>, _>>()?;
    for est in &ladder {
        for t in compare_cir(est, &analytic.p) {
            table.push(vec![
                "cir_step".into(),
                format!("dt={}", est.step).into(),
                t.index.into(),
                t.analytic.into(),
                t.empirical.into(),
                t.se.into(),
                z_cell(t.z),
                Cell::Null,
            ]);
        }
    }
    let extrapolated = extrapolate_to_zero_step(&ladder)?;
    for t in compare_cir(&extrapolated, &analytic.p) {
        table.push(vec![
            "cir".into(),
            "p".into(),
            t.index.into(),
            t.analytic.into(),
            t.empirical.into(),
            t.se.into(),
            z_cell(t.z),
            (t.z.abs() <= Z_LIMIT).into(),
        ]);
    }

    // Channel at the optimised threshold.
    let cir = build_cir(params, mc.channel_t_sym)?;
    let channel = IsiChannel::new(cir.clone(), cfg.noise, params.n_released)?;
    let opt = optimize_threshold(&channel, mc.pi0)?;
    let model = match mc.pulse_model {
        PulseKind::Multinomial => PulseModel::Multinomial { taps: cir.p.clone() },
        PulseKind::Brownian => PulseModel::Brownian { window: cir.memory },
    };
    let run_cfg = McConfig {
        step: mc.pulse_step,
        particles: params.n_released,
        symbols: mc.symbols + cir.memory,
        ..base
    };
    let run = simulate_channel(
        params,
        &cfg.noise,
        &run_cfg,
        mc.channel_t_sym,
        mc.pi0,
        DetectorConfig { threshold: opt.threshold },
        &model,
    )?;
    table.push(vec![
        "threshold".into(),
        "tau_star".into(),
        Cell::Null,
        opt.threshold.into(),
        Cell::Null,
        Cell::Null,
        Cell::Null,
        Cell::Null,
    ]);
    let tm = run.empirical_tm;
    for (name, analytic, empirical) in [
        ("p_1_given_0", opt.transition.p_1_given_0, tm.p_1_given_0()),
        ("p_1_given_1", opt.transition.p_1_given_1, tm.p_1_given_1()),
    ] {
        let (value, se, z) = match empirical {
            Some((p, se)) if se > 0.0 => (Some(p), Some(se), Some((p - analytic) / se)),
            Some((p, se)) => (Some(p), Some(se), None),
            None => (None, None, None),
        };
        let pass = z.map(|z: f64| z.abs() <= Z_LIMIT);
        table.push(vec![
            "transition".into(),
            name.into(),
            Cell::Null,
            analytic.into(),
            value.into(),
            se.into(),
            z.into(),
            pass.into(),
        ]);
    }
    let analytic_mi = mutual_information(&opt.transition, mc.pi0);
    let plug_in = tm.plug_in_mi();
    table.push(vec![
        "mi".into(),
        "plug_in_mi".into(),
        Cell::Null,
        analytic_mi.into(),
        plug_in.into(),
        Cell::Null,
        Cell::Null,
        plug_in.map(|m| (m - analytic_mi).abs() <= MI_LIMIT).into(),
    ]);
    table.push(vec![
        "mi".into(),
        "steady_state_symbols".into(),
        Cell::Null,
        Cell::Null,
        Cell::Int(tm.sent_zero + tm.sent_one),
        Cell::Null,
        Cell::Null,
        Cell::Null,
    ]);

    let mut grid = vec![mc.cir_t_sym];
    if mc.channel_t_sym != mc.cir_t_sym {
        grid.push(mc.channel_t_sym);
    }
    Ok(Report {
        command: Command::McValidate,
        table,
        warnings: validity_warnings(params, &grid),
    })
}
