//! Monte-Carlo frontiers and antenna-count power sweeps.

use rayon::prelude::*;
use thiserror::Error;

use crate::arrays::{ArrayError, ArrayGeometry};
use crate::beamform::{design, Architecture, ArchitectureConfig, BeamformError, Strategy};
use crate::channel::{realize_drop, ChannelError, ScenarioConfig};
use crate::link::{dbm_to_watts, sum_throughput, LinkBudget, StreamGains};
use crate::linalg::Svd;
use crate::power::{
    rx_tx_crossover_in, transceiver_power, ComponentCatalog, Device, DevicePowerSpec,
    PowerBreakdown, PowerError, MAX_ANTENNAS,
};

/// What the energy-efficiency denominator covers.
pub const CONSUMED_POWER_SCOPE: &str = "downlink: bs tx + n_users x mt rx";

/// Largest tolerated share of failed drops per curve.
pub const MAX_FAILED_FRACTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("consumed power must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("{curve}: {failed} of {total} drops failed (last error: {last})")]
    TooManyFailures {
        curve: String,
        failed: usize,
        total: usize,
        last: String,
    },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Beamform(#[from] BeamformError),
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub link: LinkBudget,
    pub n_bs_antennas: usize,
    pub n_ue_antennas: usize,
    pub architectures: Vec<(Architecture, Strategy)>,
    pub streams: Vec<usize>,
    pub n_drops: usize,
    pub master_seed: u64,
    /// BS radiated power sweep, dBm, ascending.
    pub power_sweep_dbm: Vec<f64>,
    pub phase_bits: Option<u32>,
    pub catalog: ComponentCatalog,
}

pub fn default_sweep() -> Vec<f64> {
    (0..=20).map(|i| -10.0 + 2.0 * f64::from(i)).collect()
}

pub fn default_architectures() -> Vec<(Architecture, Strategy)> {
    vec![
        (Architecture::Abf, Strategy::Steering),
        (Architecture::Hbf, Strategy::Cm),
        (Architecture::Hbf, Strategy::Zf),
        (Architecture::Dbf, Strategy::Cm),
        (Architecture::Dbf, Strategy::Zf),
    ]
}

impl ExperimentConfig {
    /// 10 FWA terminals, 64 antennas at both ends.
    pub fn fwa() -> Self {
        Self {
            scenario: ScenarioConfig::fwa(),
            link: LinkBudget::default(),
            n_bs_antennas: 64,
            n_ue_antennas: 64,
            architectures: default_architectures(),
            streams: vec![1, 2],
            n_drops: 50,
            master_seed: 1,
            power_sweep_dbm: default_sweep(),
            phase_bits: None,
            catalog: ComponentCatalog::default(),
        }
    }

    /// 32 cars, 256 BS antennas, 64 per car.
    pub fn v2i() -> Self {
        Self {
            scenario: ScenarioConfig::v2i(),
            n_bs_antennas: 256,
            ..Self::fwa()
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.link.bandwidth
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let invalid = |m: &str| Err(ExperimentError::Invalid(m.to_string()));
        self.scenario.validate()?;
        self.catalog.validate()?;
        if self.n_drops == 0 {
            return invalid("n_drops must be at least 1");
        }
        if self.power_sweep_dbm.is_empty() {
            return invalid("power sweep is empty");
        }
        if self.power_sweep_dbm.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("power sweep must be strictly ascending");
        }
        if self.power_sweep_dbm.iter().any(|p| !p.is_finite()) {
            return invalid("power sweep values must be finite");
        }
        if !(self.link.bandwidth > 0.0) {
            return invalid("bandwidth must be positive");
        }
        if self.streams.is_empty() || self.streams.iter().any(|s| !(1..=2).contains(s)) {
            return invalid("streams must be 1 and/or 2");
        }
        if self.architectures.is_empty() {
            return invalid("no architectures selected");
        }
        self.geometries()?;
        for arch in self.curve_configs()? {
            arch.validate(self.scenario.n_users, self.n_bs_antennas, self.n_ue_antennas)?;
        }
        Ok(())
    }

    pub fn geometries(&self) -> Result<(ArrayGeometry, ArrayGeometry), ArrayError> {
        let lambda = self.scenario.wavelength();
        Ok((
            ArrayGeometry::half_wavelength(self.n_bs_antennas, lambda)?,
            ArrayGeometry::half_wavelength(self.n_ue_antennas, lambda)?,
        ))
    }

    /// One architecture config per curve. Analog terminals carry a single
    /// stream, so analog curves only appear for one stream per user.
    pub fn curve_configs(&self) -> Result<Vec<ArchitectureConfig>, ExperimentError> {
        let mut out = Vec::new();
        for &streams in &self.streams {
            for &(kind, strategy) in &self.architectures {
                if kind == Architecture::Abf && streams != 1 {
                    continue;
                }
                out.push(ArchitectureConfig::sized(
                    kind,
                    strategy,
                    streams,
                    self.scenario.n_users,
                    self.n_bs_antennas,
                    self.n_ue_antennas,
                    self.phase_bits,
                )?);
            }
        }
        if out.is_empty() {
            return Err(ExperimentError::Invalid(
                "architecture/stream selection yields no curves".into(),
            ));
        }
        Ok(out)
    }

    /// Seed of drop `index`.
    pub fn drop_seed(&self, index: usize) -> u64 {
        self.master_seed ^ index as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierPoint {
    pub radiated_dbm: f64,
    /// bit/s.
    pub mean_throughput: f64,
    /// W.
    pub total_consumed_power: f64,
    /// bit/J.
    pub energy_efficiency: f64,
}

#[derive(Debug, Clone)]
pub struct FrontierCurve {
    pub arch: ArchitectureConfig,
    pub points: Vec<FrontierPoint>,
    pub n_drops_ok: usize,
    pub n_failed: usize,
}

impl FrontierCurve {
    pub fn peak_efficiency(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.energy_efficiency)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct FrontierResult {
    pub curves: Vec<FrontierCurve>,
    pub n_drops: usize,
}

impl FrontierResult {
    pub fn curve(&self, kind: Architecture, strategy: Strategy, streams: usize) -> Option<&FrontierCurve> {
        self.curves.iter().find(|c| {
            c.arch.kind == kind && c.arch.strategy == strategy && c.arch.streams_per_user == streams
        })
    }
}

pub fn energy_efficiency(throughput: f64, consumed_w: f64) -> Result<f64, ExperimentError> {
    if !(consumed_w > 0.0) {
        return Err(ExperimentError::NonPositivePower(consumed_w));
    }
    Ok(throughput / consumed_w)
}

/// Downlink consumption in watts: BS transmitter at `radiated_dbm` plus
/// every served terminal's receiver.
pub fn consumed_power(
    cfg: &ExperimentConfig,
    arch: &ArchitectureConfig,
    radiated_dbm: f64,
) -> Result<f64, PowerError> {
    let bs = DevicePowerSpec::new(Device::Bs, arch.kind, cfg.n_bs_antennas, arch.bs_rf_chains)
        .with_radiated_dbm(radiated_dbm);
    let mt = DevicePowerSpec::new(Device::Mt, arch.kind, cfg.n_ue_antennas, arch.ue_rf_chains);
    let bs_tx = transceiver_power(&bs, &cfg.catalog, cfg.sample_rate())?.tx_total;
    let mt_rx = transceiver_power(&mt, &cfg.catalog, cfg.sample_rate())?.rx_total;
    Ok((bs_tx + cfg.scenario.n_users as f64 * mt_rx) * 1e-3)
}

type DropOutcome = Vec<Result<Vec<f64>, String>>;

/// Sum throughput of every curve at every sweep power for one drop.
fn evaluate_drop(
    cfg: &ExperimentConfig,
    archs: &[ArchitectureConfig],
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    index: usize,
) -> DropOutcome {
    let fail_all = |e: String| archs.iter().map(|_| Err(e.clone())).collect();
    let channels = match realize_drop(&cfg.scenario, bs, ue, cfg.drop_seed(index)) {
        Ok(c) => c,
        Err(e) => return fail_all(e.to_string()),
    };
    let mats: Vec<_> = channels.iter().map(|c| &c.matrix).collect();
    let svds: Vec<Svd> = match mats.iter().map(|h| h.svd()).collect() {
        Ok(s) => s,
        Err(e) => return fail_all(e.to_string()),
    };
    let noise = cfg.link.noise_power();
    archs
        .iter()
        .map(|arch| {
            let bf = design(&mats, &svds, arch, 1.0).map_err(|e| e.to_string())?;
            let gains = StreamGains::measure(&mats, &bf);
            Ok(cfg
                .power_sweep_dbm
                .iter()
                .map(|&dbm| {
                    let sinr = gains.sinr_at(dbm_to_watts(dbm), noise);
                    sum_throughput(&sinr, arch.streams_per_user, &cfg.link).sum_throughput
                })
                .collect())
        })
        .collect()
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, ExperimentError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))
}

/// Runs every curve over `n_drops` drops. Results do not depend on
/// `threads`: drops are evaluated independently and reduced in index order.
pub fn run_frontier(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<FrontierResult, ExperimentError> {
    cfg.validate()?;
    let archs = cfg.curve_configs()?;
    let (bs, ue) = cfg.geometries()?;
    let pool = build_pool(threads)?;
    let outcomes: Vec<DropOutcome> = pool.install(|| {
        (0..cfg.n_drops)
            .into_par_iter()
            .map(|d| evaluate_drop(cfg, &archs, &bs, &ue, d))
            .collect()
    });

    let n_points = cfg.power_sweep_dbm.len();
    let mut curves = Vec::with_capacity(archs.len());
    for (c, arch) in archs.iter().enumerate() {
        let mut sums = vec![0.0; n_points];
        let mut ok = 0;
        let mut failed = 0;
        let mut last_error = String::new();
        for outcome in &outcomes {
            match &outcome[c] {
                Ok(tput) => {
                    ok += 1;
                    for (s, t) in sums.iter_mut().zip(tput) {
                        *s += t;
                    }
                }
                Err(e) => {
                    failed += 1;
                    last_error.clone_from(e);
                }
            }
        }
        if failed as f64 > MAX_FAILED_FRACTION * cfg.n_drops as f64 || ok == 0 {
            return Err(ExperimentError::TooManyFailures {
                curve: format!("{} x{}", arch.label(), arch.streams_per_user),
                failed,
                total: cfg.n_drops,
                last: last_error,
            });
        }
        let points = cfg
            .power_sweep_dbm
            .iter()
            .zip(&sums)
            .map(|(&dbm, &sum)| {
                let mean_throughput = sum / ok as f64;
                let consumed = consumed_power(cfg, arch, dbm)?;
                Ok(FrontierPoint {
                    radiated_dbm: dbm,
                    mean_throughput,
                    total_consumed_power: consumed,
                    energy_efficiency: energy_efficiency(mean_throughput, consumed)?,
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        curves.push(FrontierCurve {
            arch: arch.clone(),
            points,
            n_drops_ok: ok,
            n_failed: failed,
        });
    }
    Ok(FrontierResult {
        curves,
        n_drops: cfg.n_drops,
    })
}

#[derive(Debug, Clone)]
pub struct PowerSweepRow {
    pub kind: Architecture,
    pub device: Device,
    pub n_antennas: usize,
    pub n_rf: usize,
    pub breakdown: PowerBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub kind: Architecture,
    pub device: Device,
    pub n_antennas: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PowerSweep {
    pub rows: Vec<PowerSweepRow>,
    pub crossovers: Vec<Crossover>,
}

/// Power breakdown per architecture and antenna count, with RX/TX crossover
/// annotations searched over the full `[1, 1024]` range.
pub fn run_power_sweep(
    device: Device,
    architectures: &[Architecture],
    antennas: &[usize],
    cat: &ComponentCatalog,
    hybrid_rf: usize,
    sample_rate: f64,
) -> Result<PowerSweep, ExperimentError> {
    if let Some(&bad) = antennas.iter().find(|&&n| !(1..=MAX_ANTENNAS).contains(&n)) {
        return Err(ExperimentError::Invalid(format!(
            "antenna count {bad} outside [1, {MAX_ANTENNAS}]"
        )));
    }
    let mut rows = Vec::new();
    let mut crossovers = Vec::new();
    for &kind in architectures {
        for &n in antennas {
            let spec = DevicePowerSpec::new(device, kind, n, hybrid_rf);
            let breakdown = transceiver_power(&spec, cat, sample_rate)?;
            rows.push(PowerSweepRow {
                kind,
                device,
                n_antennas: n,
                n_rf: spec.n_rf,
                breakdown,
            });
        }
        crossovers.push(Crossover {
            kind,
            device,
            n_antennas: rx_tx_crossover_in(kind, device, cat, hybrid_rf, MAX_ANTENNAS),
        });
    }
    Ok(PowerSweep { rows, crossovers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_examples() {
        assert_eq!(energy_efficiency(10e9, 10.0).unwrap(), 1e9);
        assert_eq!(energy_efficiency(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(
            energy_efficiency(5e9, 20.0).unwrap() * 2.0,
            energy_efficiency(5e9, 10.0).unwrap()
        );
        assert!(matches!(
            energy_efficiency(1.0, 0.0),
            Err(ExperimentError::NonPositivePower(_))
        ));
    }

    #[test]
    fn default_sweep_shape() {
        let s = default_sweep();
        assert_eq!(s.first(), Some(&-10.0));
        assert_eq!(s.last(), Some(&30.0));
        assert_eq!(s.len(), 21);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::fwa();
        assert!(cfg.validate().is_ok());
        cfg.n_drops = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::fwa();
        cfg.power_sweep_dbm = vec![0.0, 0.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::fwa();
        cfg.n_bs_antennas = 7;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::fwa();
        cfg.architectures = vec![(Architecture::Abf, Strategy::Steering)];
        cfg.streams = vec![2];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn curve_set_skips_two_stream_analog() {
        let cfg = ExperimentConfig::fwa();
        let curves = cfg.curve_configs().unwrap();
        assert_eq!(curves.len(), 9);
        assert!(curves
            .iter()
            .all(|c| c.kind != Architecture::Abf || c.streams_per_user == 1));
    }

    #[test]
    fn consumed_power_grows_with_radiated() {
        let cfg = ExperimentConfig::fwa();
        let arch = &cfg.curve_configs().unwrap()[0];
        let low = consumed_power(&cfg, arch, 0.0).unwrap();
        let high = consumed_power(&cfg, arch, 30.0).unwrap();
        assert!((high - low - (1.0 - 1e-3) / 0.15).abs() < 1e-9);
    }

    #[test]
    fn power_sweep_rejects_out_of_range() {
        let cat = ComponentCatalog::default();
        assert!(run_power_sweep(Device::Mt, &[Architecture::Dbf], &[0], &cat, 3, 200e6).is_err());
        assert!(run_power_sweep(Device::Mt, &[Architecture::Dbf], &[2048], &cat, 3, 200e6).is_err());
    }
}
