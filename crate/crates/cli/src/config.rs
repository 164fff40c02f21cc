//! Run configuration: defaults, named presets, TOML files and flag overrides.
//!
//! Layers are applied in that order. A TOML file only needs the keys it
//! changes; tables are merged key by key into the layer below.

use std::path::{Path, PathBuf};

use diffrate_core::search::arange_inclusive;
use diffrate_core::{ChannelParams, NoiseParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A grid of values: either listed or `start..=stop` in steps of `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Grid::Range { start, stop, step }
    }

    /// Grid points in order. Range points are rounded to 12 decimals so that
    /// `0.3 + 6 * 0.05` prints as `0.6`.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Range { start, stop, step } => arange_inclusive(*start, *stop, *step)
                .into_iter()
                .map(|x| (x * 1e12).round() / 1e12)
                .collect(),
        }
    }

    fn validate(&self, name: &str, ok: impl Fn(f64) -> bool, domain: &str) -> Result<Vec<f64>, CliError> {
        if let Grid::Range { start, stop, step } = self {
            if !(step.is_finite() && *step > 0.0 && start.is_finite() && stop.is_finite() && start <= stop) {
                return Err(CliError::Config(format!(
                    "grids.{name}: need finite start <= stop and step > 0"
                )));
            }
        }
        let v = self.values();
        if v.is_empty() {
            return Err(CliError::Config(format!("grids.{name} is empty")));
        }
        if let Some(bad) = v.iter().find(|&&x| !ok(x)) {
            return Err(CliError::Config(format!("grids.{name}: {bad} is outside {domain}")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Symbol intervals, s.
    pub t_sym: Grid,
    /// Input distributions for the MI and rate surfaces.
    pub pi0: Grid,
    /// External noise standard deviations for the noise sweep.
    pub sigma_ext: Grid,
    /// Spacing of the input-distribution grid searched for capacity.
    pub capacity_pi0_step: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            t_sym: Grid::range(0.3, 1.5, 0.05),
            pi0: Grid::range(0.02, 0.98, 0.02),
            sigma_ext: Grid::range(0.0, 100.0, 10.0),
            capacity_pi0_step: 0.01,
        }
    }
}

/// How pulses are generated in the simulated channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// Per-lag counts drawn jointly from the analytic hit probabilities.
    Multinomial,
    /// Every particle of every pulse walks.
    Brownian,
}

/// Monte-Carlo validation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub seed: u64,
    /// Particles released for each impulse-response estimate.
    pub particles: u64,
    /// Time-step ladder for the impulse-response estimate, s.
    pub steps: Vec<f64>,
    pub cir_t_sym: f64,
    pub channel_t_sym: f64,
    pub pi0: f64,
    /// Steady-state symbols in the channel run.
    pub symbols: usize,
    pub pulse_model: PulseKind,
    /// Time step of Brownian pulses, s.
    pub pulse_step: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            particles: 1_000_000,
            steps: vec![1e-4, 5e-5, 2.5e-5],
            cir_t_sym: 2.0,
            channel_t_sym: 1.0,
            pi0: 0.5,
            symbols: 100_000,
            pulse_model: PulseKind::Multinomial,
            pulse_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub format: Format,
    /// Standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelParams,
    pub noise: NoiseParams,
    pub grids: Grids,
    pub mc: McSettings,
    pub output: OutputSettings,
}

pub const PRESETS: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

impl RunConfig {
    /// Defaults with the grids of a named figure.
    ///
    /// * `fig1`: impulse response at 2 s.
    /// * `fig2`: impulse responses at 0.5, 1 and 2 s.
    /// * `fig3`, `fig4`: MI and rate surfaces, 0.3 to 1.5 s by 0.05 and
    ///   `pi0` 0.02 to 0.98 by 0.02.
    /// * `fig5`: rate slices at a few symbol intervals, `pi0` by 0.01.
    /// * `fig6`: noise sweep, 0.3 to 1.5 s by 0.1 and sigma 0 to 100 by 10.
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        match name {
            "fig1" => c.grids.t_sym = Grid::Values(vec![2.0]),
            "fig2" => c.grids.t_sym = Grid::Values(vec![0.5, 1.0, 2.0]),
            "fig3" | "fig4" => {}
            "fig5" => {
                c.grids.t_sym = Grid::Values(vec![0.3, 0.4, 0.6, 1.0, 1.5]);
                c.grids.pi0 = Grid::range(0.01, 0.99, 0.01);
            }
            "fig6" => c.grids.t_sym = Grid::range(0.3, 1.5, 0.1),
            _ => {
                return Err(CliError::Config(format!(
                    "unknown preset '{name}' (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    /// Overlays a TOML document on `self`.
    pub fn merge_toml(self, text: &str) -> Result<Self, CliError> {
        let overlay: toml::Value =
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid TOML: {e}")))?;
        let mut base = toml::Value::try_from(&self).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, overlay);
        base.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn merge_file(self, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.merge_toml(&text)
    }

    pub fn t_sym_grid(&self) -> Result<Vec<f64>, CliError> {
        self.grids.t_sym.validate("t_sym", |x| x.is_finite() && x > 0.0, "(0, inf)")
    }

    pub fn pi0_grid(&self) -> Result<Vec<f64>, CliError> {
        self.grids.pi0.validate("pi0", |x| (0.0..=1.0).contains(&x), "[0, 1]")
    }

    pub fn sigma_grid(&self) -> Result<Vec<f64>, CliError> {
        self.grids.sigma_ext.validate("sigma_ext", |x| x.is_finite() && x >= 0.0, "[0, inf)")
    }

    /// Checks the parts of the configuration every command uses.
    pub fn validate(&self) -> Result<(), CliError> {
        self.channel.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let s = self.grids.capacity_pi0_step;
        if !(s > 0.0 && s <= 0.25) {
            return Err(CliError::Config(format!("grids.capacity_pi0_step must lie in (0, 0.25], got {s}")));
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_hold_table_values() {
        let c = RunConfig::default();
        assert_eq!(c.channel.n_released, 10_000);
        assert_eq!(c.channel.diffusion, 79.4);
        assert_eq!(c.noise.std, 50.0);
        assert_eq!(c.t_sym_grid().unwrap().len(), 25);
        assert_eq!(c.pi0_grid().unwrap().len(), 49);
        assert_eq!(c.sigma_grid().unwrap().len(), 11);
        assert_eq!(c.t_sym_grid().unwrap()[6], 0.6);
    }

    #[test]
    fn partial_toml_overrides() {
        let c = RunConfig::default()
            .merge_toml("[channel]\nalpha = 5e-4\n[grids]\nt_sym = [1.0, 2.0]\n[output]\nformat = 'json'\n")
            .unwrap();
        assert_eq!(c.channel.alpha, 5e-4);
        assert_eq!(c.channel.distance, 10.0);
        assert_eq!(c.t_sym_grid().unwrap(), vec![1.0, 2.0]);
        assert_eq!(c.output.format, Format::Json);
        let c = c.merge_toml("[grids.t_sym]\nstart = 0.5\nstop = 1.0\nstep = 0.25\n").unwrap();
        assert_eq!(c.t_sym_grid().unwrap(), vec![0.5, 0.75, 1.0]);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        let c = RunConfig::default();
        assert!(matches!(c.clone().merge_toml("[channel]\nradius_um = 1"), Err(CliError::Config(_))));
        assert!(matches!(c.clone().merge_toml("nonsense ="), Err(CliError::Config(_))));
        let empty = c.clone().merge_toml("[grids]\nt_sym = []").unwrap();
        assert!(matches!(empty.t_sym_grid(), Err(CliError::Config(_))));
        let backwards = c.clone().merge_toml("[grids.pi0]\nstart = 0.9\nstop = 0.1\nstep = 0.1").unwrap();
        assert!(backwards.pi0_grid().is_err());
        let outside = c.merge_toml("[grids]\npi0 = [0.5, 1.5]").unwrap();
        assert!(outside.pi0_grid().is_err());
        assert!(RunConfig::preset("fig9").is_err());
    }

    #[test]
    fn presets() {
        for name in PRESETS {
            let c = RunConfig::preset(name).unwrap();
            assert!(c.t_sym_grid().is_ok());
        }
        assert_eq!(RunConfig::preset("fig1").unwrap().t_sym_grid().unwrap(), vec![2.0]);
        assert_eq!(RunConfig::preset("fig6").unwrap().t_sym_grid().unwrap().len(), 13);
        assert_eq!(RunConfig::preset("fig5").unwrap().pi0_grid().unwrap().len(), 99);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::preset("fig5").unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::default().merge_toml(&text).unwrap(), c);
    }
}
