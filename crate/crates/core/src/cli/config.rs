//! Layered run configuration: preset, then `key = value` file, then
//! command-line overrides. Every key has a value after resolution, and
//! unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::beamform::{Architecture, Strategy};
use crate::channel::ScenarioKind;
use crate::experiment::ExperimentConfig;
use crate::power::{Device, DEFAULT_HYBRID_RF_CHAINS, MAX_ANTENNAS};

pub const PRESETS: [&str; 3] = ["fwa-fig5", "v2i-fig6", "power-fig3"];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { key: String, origin: Origin },
    #[error("{origin}: bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
        origin: Origin,
    },
    #[error("{origin}: expected `key = value`, got `{text}`")]
    Syntax { text: String, origin: Origin },
    #[error("unknown preset `{0}` (expected one of fwa-fig5, v2i-fig6, power-fig3)")]
    UnknownPreset(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: String, line: usize },
    Override,
    Flag(&'static str),
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Override => write!(f, "--set"),
            Origin::Flag(name) => write!(f, "--{name}"),
        }
    }
}

/// Settings of the `power-sweep` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub devices: Vec<Device>,
    pub architectures: Vec<Architecture>,
    pub antennas: Vec<usize>,
    pub hybrid_rf_chains: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            devices: vec![Device::Bs, Device::Mt],
            architectures: vec![Architecture::Abf, Architecture::Hbf, Architecture::Dbf],
            antennas: (1..=MAX_ANTENNAS).collect(),
            hybrid_rf_chains: DEFAULT_HYBRID_RF_CHAINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    pub experiment: ExperimentConfig,
    pub sweep: SweepSettings,
}

/// Every accepted key, in manifest order.
pub const KEYS: &[&str] = &[
    "scenario.kind",
    "scenario.bs_height",
    "scenario.n_users",
    "scenario.sector_halfwidth_deg",
    "scenario.min_distance",
    "scenario.max_distance",
    "scenario.user_height_min",
    "scenario.user_height_max",
    "scenario.carrier_frequency",
    "scenario.road_length",
    "scenario.crossroad_offset",
    "channel.pathloss_exponent",
    "channel.n_clusters",
    "channel.cluster_power_db",
    "channel.angular_spread_deg",
    "array.bs_antennas",
    "array.ue_antennas",
    "link.bandwidth",
    "link.noise_psd_dbm_hz",
    "link.noise_figure_db",
    "beamform.phase_bits",
    "experiment.architectures",
    "experiment.streams",
    "experiment.n_drops",
    "experiment.master_seed",
    "experiment.power_sweep_dbm",
    "power.dac_ref_bs",
    "power.dac_ref_mt",
    "power.adc_ref_bs",
    "power.adc_ref_mt",
    "power.lo",
    "power.lpf_tx",
    "power.lpf_rx",
    "power.lna_analog",
    "power.lna_digital",
    "power.vga",
    "power.phase_shifter_insertion_loss_db",
    "power.pa_efficiency",
    "power.bs_adc_bits",
    "power.bs_dac_bits",
    "power.mt_adc_bits",
    "power.mt_dac_bits",
    "power.ref_sample_rate",
    "power.per_chain_lo_distribution",
    "power.analog_tx_driver",
    "sweep.devices",
    "sweep.architectures",
    "sweep.antennas",
    "sweep.hybrid_rf_chains",
];

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let experiment = match name {
            "fwa-fig5" | "power-fig3" => ExperimentConfig::fwa(),
            "v2i-fig6" => ExperimentConfig::v2i(),
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        };
        Ok(Self {
            preset: name.to_string(),
            experiment,
            sweep: SweepSettings::default(),
        })
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, path: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_string(),
                line: i + 1,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    text: line.to_string(),
                    origin,
                });
            };
            self.set(key.trim(), value.trim(), origin)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies one `K=V` command-line override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError::Syntax {
                text: assignment.to_string(),
                origin: Origin::Override,
            });
        };
        self.set(key.trim(), value.trim(), Origin::Override)
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason,
            origin: origin.clone(),
        };
        let e = &mut self.experiment;
        let sc = &mut e.scenario;
        let cat = &mut e.catalog;
        match key {
            "scenario.kind" => {
                sc.kind = match value {
                    "fwa" => ScenarioKind::Fwa,
                    "v2i" => ScenarioKind::V2i,
                    _ => return Err(bad("expected fwa or v2i".into())),
                }
            }
            "scenario.bs_height" => sc.bs_height = float(value).map_err(bad)?,
            "scenario.n_users" => sc.n_users = count(value).map_err(bad)?,
            "scenario.sector_halfwidth_deg" => {
                sc.sector_halfwidth = float(value).map_err(bad)?.to_radians()
            }
            "scenario.min_distance" => sc.min_distance = float(value).map_err(bad)?,
            "scenario.max_distance" => sc.max_distance = float(value).map_err(bad)?,
            "scenario.user_height_min" => sc.user_height_min = float(value).map_err(bad)?,
            "scenario.user_height_max" => sc.user_height_max = float(value).map_err(bad)?,
            "scenario.carrier_frequency" => {
                sc.carrier_frequency = float(value).map_err(bad)?;
                e.link.carrier_frequency = sc.carrier_frequency;
            }
            "scenario.road_length" => sc.road_length = float(value).map_err(bad)?,
            "scenario.crossroad_offset" => sc.crossroad_offset = float(value).map_err(bad)?,
            "channel.pathloss_exponent" => sc.pathloss_exponent = float(value).map_err(bad)?,
            "channel.n_clusters" => sc.multipath.n_clusters = count(value).map_err(bad)?,
            "channel.cluster_power_db" => sc.multipath.cluster_power_db = float(value).map_err(bad)?,
            "channel.angular_spread_deg" => {
                sc.multipath.angular_spread = float(value).map_err(bad)?.to_radians()
            }
            "array.bs_antennas" => e.n_bs_antennas = count(value).map_err(bad)?,
            "array.ue_antennas" => e.n_ue_antennas = count(value).map_err(bad)?,
            "link.bandwidth" => e.link.bandwidth = float(value).map_err(bad)?,
            "link.noise_psd_dbm_hz" => e.link.noise_psd_dbm_hz = float(value).map_err(bad)?,
            "link.noise_figure_db" => e.link.noise_figure_db = float(value).map_err(bad)?,
            "beamform.phase_bits" => {
                e.phase_bits = match value {
                    "none" | "ideal" => None,
                    v => Some(v.parse::<u32>().map_err(|x| bad(x.to_string()))?),
                }
            }
            "experiment.architectures" => {
                e.architectures = list(value)
                    .map(|item| {
                        let (a, s) = item
                            .split_once('-')
                            .ok_or_else(|| format!("`{item}` is not arch-strategy"))?;
                        Ok((a.parse::<Architecture>()?, s.parse::<Strategy>()?))
                    })
                    .collect::<Result<_, String>>()
                    .map_err(bad)?
            }
            "experiment.streams" => {
                e.streams = list(value).map(count).collect::<Result<_, _>>().map_err(bad)?
            }
            "experiment.n_drops" => e.n_drops = count(value).map_err(bad)?,
            "experiment.master_seed" => {
                e.master_seed = value.parse().map_err(|x: std::num::ParseIntError| bad(x.to_string()))?
            }
            "experiment.power_sweep_dbm" => e.power_sweep_dbm = float_range(value).map_err(bad)?,
            "power.dac_ref_bs" => cat.dac_ref_bs = float(value).map_err(bad)?,
            "power.dac_ref_mt" => cat.dac_ref_mt = float(value).map_err(bad)?,
            "power.adc_ref_bs" => cat.adc_ref_bs = float(value).map_err(bad)?,
            "power.adc_ref_mt" => cat.adc_ref_mt = float(value).map_err(bad)?,
            "power.lo" => cat.lo = float(value).map_err(bad)?,
            "power.lpf_tx" => cat.lpf_tx = float(value).map_err(bad)?,
            "power.lpf_rx" => cat.lpf_rx = float(value).map_err(bad)?,
            "power.lna_analog" => cat.lna_analog = float(value).map_err(bad)?,
            "power.lna_digital" => cat.lna_digital = float(value).map_err(bad)?,
            "power.vga" => cat.vga = float(value).map_err(bad)?,
            "power.phase_shifter_insertion_loss_db" => {
                cat.phase_shifter_insertion_loss_db = float(value).map_err(bad)?
            }
            "power.pa_efficiency" => cat.pa_efficiency = float(value).map_err(bad)?,
            "power.bs_adc_bits" => cat.bs_adc_bits = bits(value).map_err(bad)?,
            "power.bs_dac_bits" => cat.bs_dac_bits = bits(value).map_err(bad)?,
            "power.mt_adc_bits" => cat.mt_adc_bits = bits(value).map_err(bad)?,
            "power.mt_dac_bits" => cat.mt_dac_bits = bits(value).map_err(bad)?,
            "power.ref_sample_rate" => cat.ref_sample_rate = float(value).map_err(bad)?,
            "power.per_chain_lo_distribution" => {
                cat.per_chain_lo_distribution = float(value).map_err(bad)?
            }
            "power.analog_tx_driver" => cat.analog_tx_driver = float(value).map_err(bad)?,
            "sweep.devices" => {
                self.sweep.devices = list(value)
                    .map(str::parse::<Device>)
                    .collect::<Result<_, _>>()
                    .map_err(bad)?
            }
            "sweep.architectures" => {
                self.sweep.architectures = list(value)
                    .map(str::parse::<Architecture>)
                    .collect::<Result<_, _>>()
                    .map_err(bad)?
            }
            "sweep.antennas" => self.sweep.antennas = count_range(value).map_err(bad)?,
            "sweep.hybrid_rf_chains" => self.sweep.hybrid_rf_chains = count(value).map_err(bad)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    origin,
                })
            }
        }
        Ok(())
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let e = &self.experiment;
        let sc = &e.scenario;
        let mp = &sc.multipath;
        let cat = &e.catalog;
        let join = |items: Vec<String>| items.join(",");
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "scenario.kind" => sc.kind.as_str().to_string(),
                    "scenario.bs_height" => num(sc.bs_height),
                    "scenario.n_users" => sc.n_users.to_string(),
                    "scenario.sector_halfwidth_deg" => num(sc.sector_halfwidth.to_degrees()),
                    "scenario.min_distance" => num(sc.min_distance),
                    "scenario.max_distance" => num(sc.max_distance),
                    "scenario.user_height_min" => num(sc.user_height_min),
                    "scenario.user_height_max" => num(sc.user_height_max),
                    "scenario.carrier_frequency" => num(sc.carrier_frequency),
                    "scenario.road_length" => num(sc.road_length),
                    "scenario.crossroad_offset" => num(sc.crossroad_offset),
                    "channel.pathloss_exponent" => num(sc.pathloss_exponent),
                    "channel.n_clusters" => mp.n_clusters.to_string(),
                    "channel.cluster_power_db" => num(mp.cluster_power_db),
                    "channel.angular_spread_deg" => num(mp.angular_spread.to_degrees()),
                    "array.bs_antennas" => e.n_bs_antennas.to_string(),
                    "array.ue_antennas" => e.n_ue_antennas.to_string(),
                    "link.bandwidth" => num(e.link.bandwidth),
                    "link.noise_psd_dbm_hz" => num(e.link.noise_psd_dbm_hz),
                    "link.noise_figure_db" => num(e.link.noise_figure_db),
                    "beamform.phase_bits" => {
                        e.phase_bits.map_or_else(|| "none".to_string(), |b| b.to_string())
                    }
                    "experiment.architectures" => join(
                        e.architectures
                            .iter()
                            .map(|(a, s)| format!("{a}-{s}"))
                            .collect(),
                    ),
                    "experiment.streams" => join(e.streams.iter().map(ToString::to_string).collect()),
                    "experiment.n_drops" => e.n_drops.to_string(),
                    "experiment.master_seed" => e.master_seed.to_string(),
                    "experiment.power_sweep_dbm" => {
                        join(e.power_sweep_dbm.iter().map(|&p| num(p)).collect())
                    }
                    "power.dac_ref_bs" => num(cat.dac_ref_bs),
                    "power.dac_ref_mt" => num(cat.dac_ref_mt),
                    "power.adc_ref_bs" => num(cat.adc_ref_bs),
                    "power.adc_ref_mt" => num(cat.adc_ref_mt),
                    "power.lo" => num(cat.lo),
                    "power.lpf_tx" => num(cat.lpf_tx),
                    "power.lpf_rx" => num(cat.lpf_rx),
                    "power.lna_analog" => num(cat.lna_analog),
                    "power.lna_digital" => num(cat.lna_digital),
                    "power.vga" => num(cat.vga),
                    "power.phase_shifter_insertion_loss_db" => num(cat.phase_shifter_insertion_loss_db),
                    "power.pa_efficiency" => num(cat.pa_efficiency),
                    "power.bs_adc_bits" => cat.bs_adc_bits.to_string(),
                    "power.bs_dac_bits" => cat.bs_dac_bits.to_string(),
                    "power.mt_adc_bits" => cat.mt_adc_bits.to_string(),
                    "power.mt_dac_bits" => cat.mt_dac_bits.to_string(),
                    "power.ref_sample_rate" => num(cat.ref_sample_rate),
                    "power.per_chain_lo_distribution" => num(cat.per_chain_lo_distribution),
                    "power.analog_tx_driver" => num(cat.analog_tx_driver),
                    "sweep.devices" => join(self.sweep.devices.iter().map(ToString::to_string).collect()),
                    "sweep.architectures" => {
                        join(self.sweep.architectures.iter().map(ToString::to_string).collect())
                    }
                    "sweep.antennas" => compact_counts(&self.sweep.antennas),
                    "sweep.hybrid_rf_chains" => self.sweep.hybrid_rf_chains.to_string(),
                    other => unreachable!("key {other} missing from pairs()"),
                };
                (k, v)
            })
            .collect()
    }

    /// Checks every invariant the runs rely on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.experiment
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.sweep;
        if s.devices.is_empty() || s.architectures.is_empty() || s.antennas.is_empty() {
            return Err(ConfigError::Invalid("power sweep selection is empty".into()));
        }
        if s.antennas.iter().any(|&n| !(1..=MAX_ANTENNAS).contains(&n)) {
            return Err(ConfigError::Invalid(format!(
                "sweep.antennas must lie in [1, {MAX_ANTENNAS}]"
            )));
        }
        if s.hybrid_rf_chains == 0 {
            return Err(ConfigError::Invalid("sweep.hybrid_rf_chains must be positive".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.pairs() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Shortest round-trip decimal form.
fn num(v: f64) -> String {
    format!("{v}")
}

fn float(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.parse().map_err(|e: std::num::ParseIntError| e.to_string())
}

fn bits(s: &str) -> Result<u32, String> {
    s.parse().map_err(|e: std::num::ParseIntError| e.to_string())
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// `a:b[:step]` (inclusive) or a comma list.
fn float_range(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(':') {
        let parts: Vec<f64> = s.split(':').map(|p| float(p.trim())).collect::<Result<_, _>>()?;
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (*a, *b, 1.0),
            [a, b, c] => (*a, *b, *c),
            _ => return Err("expected start:stop[:step]".into()),
        };
        if !(step > 0.0) {
            return Err("step must be positive".into());
        }
        let n = ((stop - start) / step + 1e-9).floor();
        if n < 0.0 {
            return Err("stop below start".into());
        }
        Ok((0..=n as usize).map(|i| start + step * i as f64).collect())
    } else {
        list(s).map(float).collect()
    }
}

fn count_range(s: &str) -> Result<Vec<usize>, String> {
    if s.contains(':') {
        let parts: Vec<usize> = s.split(':').map(|p| count(p.trim())).collect::<Result<_, _>>()?;
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (*a, *b, 1),
            [a, b, c] => (*a, *b, *c),
            _ => return Err("expected start:stop[:step]".into()),
        };
        if step == 0 || stop < start {
            return Err("need step > 0 and start <= stop".into());
        }
        Ok((start..=stop).step_by(step).collect())
    } else {
        list(s).map(count).collect()
    }
}

/// Writes a contiguous run as `a:b`, anything else as a comma list.
fn compact_counts(values: &[usize]) -> String {
    match values {
        [first, .., last] if values.windows(2).all(|w| w[1] == w[0] + 1) => format!("{first}:{last}"),
        _ => values.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fwa_preset_defaults() {
        let mut cfg = RunConfig::preset("fwa-fig5").unwrap();
        cfg.apply_text("", "empty.cfg").unwrap();
        let e = &cfg.experiment;
        assert_eq!(e.scenario.n_users, 10);
        assert_eq!((e.n_bs_antennas, e.n_ue_antennas), (64, 64));
        assert_eq!(e.scenario.carrier_frequency, 28e9);
        assert_eq!(e.link.bandwidth, 200e6);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn v2i_preset_defaults() {
        let cfg = RunConfig::preset("v2i-fig6").unwrap();
        let e = &cfg.experiment;
        assert_eq!(e.scenario.n_users, 32);
        assert_eq!((e.n_bs_antennas, e.n_ue_antennas), (256, 64));
        assert_eq!(e.scenario.bs_height, 15.0);
        assert_eq!(e.scenario.user_height_min, 1.65);
    }

    #[test]
    fn zero_users_rejected() {
        let mut cfg = RunConfig::preset("fwa-fig5").unwrap();
        cfg.apply_override("scenario.n_users=0").unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn unknown_key_reports_line() {
        let mut cfg = RunConfig::preset("fwa-fig5").unwrap();
        let err = cfg
            .apply_text("# comment\nscenario.n_users = 4\nscenario.colour = red\n", "run.cfg")
            .unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                key: "scenario.colour".into(),
                origin: Origin::File {
                    path: "run.cfg".into(),
                    line: 3
                }
            }
        );
        assert!(err.to_string().contains("run.cfg:3"));
    }

    #[test]
    fn type_mismatch_reported() {
        let mut cfg = RunConfig::preset("fwa-fig5").unwrap();
        let err = cfg.apply_override("array.bs_antennas=many").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { ref key, .. } if key == "array.bs_antennas"));
        assert!(cfg.apply_override("no_equals_sign").is_err());
        assert!(RunConfig::preset("fig7").is_err());
    }

    #[test]
    fn every_key_round_trips() {
        for preset in PRESETS {
            let cfg = RunConfig::preset(preset).unwrap();
            let pairs = cfg.pairs();
            assert_eq!(pairs.len(), KEYS.len());
            let mut again = RunConfig::preset(if preset == "v2i-fig6" { "fwa-fig5" } else { "v2i-fig6" }).unwrap();
            again.apply_text(&cfg.to_text(), "resolved").unwrap();
            assert_eq!(again.experiment, cfg.experiment, "{preset}");
            assert_eq!(again.sweep, cfg.sweep);
        }
    }

    #[test]
    fn layering_order() {
        let mut cfg = RunConfig::preset("fwa-fig5").unwrap();
        cfg.apply_text("experiment.n_drops = 7\nlink.noise_figure_db = 7", "f").unwrap();
        cfg.apply_override("experiment.n_drops=3").unwrap();
        assert_eq!(cfg.experiment.n_drops, 3);
        assert_eq!(cfg.experiment.link.noise_figure_db, 7.0);
    }

    #[test]
    fn range_syntax() {
        assert_eq!(float_range("-10:30:10").unwrap(), vec![-10.0, 0.0, 10.0, 20.0, 30.0]);
        assert_eq!(float_range("1, 2.5").unwrap(), vec![1.0, 2.5]);
        assert!(float_range("5:1").is_err());
        assert_eq!(count_range("1:4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(count_range("8:32:8").unwrap(), vec![8, 16, 24, 32]);
        assert_eq!(compact_counts(&[1, 2, 3]), "1:3");
        assert_eq!(compact_counts(&[8, 16]), "8,16");
        assert_eq!(compact_counts(&[5]), "5");
    }

    #[test]
    fn architecture_list_parsing() {
        let mut cfg = RunConfig::preset("fwa-fig5").unwrap();
        cfg.apply_override("experiment.architectures=dbf-zf, abf-steering").unwrap();
        assert_eq!(
            cfg.experiment.architectures,
            vec![(Architecture::Dbf, Strategy::Zf), (Architecture::Abf, Strategy::Steering)]
        );
        assert!(cfg.apply_override("experiment.architectures=dbf").is_err());
        cfg.apply_override("beamform.phase_bits=3").unwrap();
        assert_eq!(cfg.experiment.phase_bits, Some(3));
    }
}
