//! Component-level transceiver power model.
//!
//! Converters follow `P = P_ref · 2^(b − b_ref) · fs/fs_ref`. Digital and
//! hybrid arrays need fewer converter bits than analog ones for the same
//! SQDR because uncorrelated quantization noise is averaged over the
//! combined chains: `1.7·log10(N)` fewer bits for `N` chains.
//!
//! All figures are in mW unless a name says otherwise.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::beamform::Architecture;
use crate::link::dbm_to_watts;

/// Converter bits saved per decade of combined chains.
pub const BITS_PER_DECADE: f64 = 1.7;

pub const DEFAULT_HYBRID_RF_CHAINS: usize = 3;

/// Largest array the crossover search and power sweeps consider.
pub const MAX_ANTENNAS: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("{kind} architecture cannot use {n_rf} RF chains with {n_antennas} antennas")]
    InconsistentRfChains {
        kind: Architecture,
        n_rf: usize,
        n_antennas: usize,
    },
    #[error("antenna count must be at least 1")]
    NoAntennas,
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Device {
    Bs,
    Mt,
}

impl Device {
    pub fn as_str(self) -> &'static str {
        match self {
            Device::Bs => "bs",
            Device::Mt => "mt",
        }
    }

    /// Total radiated power over all antennas, dBm.
    pub fn default_radiated_dbm(self) -> f64 {
        match self {
            Device::Bs => 30.0,
            Device::Mt => 18.0,
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Device {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bs" => Ok(Device::Bs),
            "mt" | "ue" => Ok(Device::Mt),
            other => Err(format!("unknown device `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCatalog {
    pub dac_ref_bs: f64,
    pub dac_ref_mt: f64,
    pub adc_ref_bs: f64,
    pub adc_ref_mt: f64,
    /// Shared LO core, per side.
    pub lo: f64,
    pub lpf_tx: f64,
    pub lpf_rx: f64,
    /// LNA sized to make up the phase-shifter insertion loss.
    pub lna_analog: f64,
    pub lna_digital: f64,
    pub vga: f64,
    pub phase_shifter_insertion_loss_db: f64,
    pub pa_efficiency: f64,
    pub bs_adc_bits: u32,
    pub bs_dac_bits: u32,
    pub mt_adc_bits: u32,
    pub mt_dac_bits: u32,
    /// Hz.
    pub ref_sample_rate: f64,
    /// Mixer and LO distribution per digital/hybrid RF chain, per side.
    pub per_chain_lo_distribution: f64,
    /// Splitter/driver stage ahead of the phase shifters in analog and hybrid transmitters.
    pub analog_tx_driver: f64,
}

impl Default for ComponentCatalog {
    fn default() -> Self {
        Self {
            dac_ref_bs: 43.0,
            dac_ref_mt: 3.0,
            adc_ref_bs: 172.0,
            adc_ref_mt: 11.0,
            lo: 30.0,
            lpf_tx: 0.5,
            lpf_rx: 1.6,
            lna_analog: 36.0,
            lna_digital: 5.6,
            vga: 1.3,
            phase_shifter_insertion_loss_db: 8.0,
            pa_efficiency: 0.15,
            bs_adc_bits: 12,
            bs_dac_bits: 10,
            mt_adc_bits: 8,
            mt_dac_bits: 6,
            ref_sample_rate: 200e6,
            per_chain_lo_distribution: 15.0,
            analog_tx_driver: 75.0,
        }
    }
}

/// Relative deviation of the terminal converter figures from the BS
/// figures scaled by the bit law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogScaling {
    pub adc_predicted_mt: f64,
    pub adc_deviation: f64,
    pub dac_predicted_mt: f64,
    pub dac_deviation: f64,
}

impl ComponentCatalog {
    pub fn validate(&self) -> Result<(), PowerError> {
        let positives = [
            ("dac_ref_bs", self.dac_ref_bs),
            ("dac_ref_mt", self.dac_ref_mt),
            ("adc_ref_bs", self.adc_ref_bs),
            ("adc_ref_mt", self.adc_ref_mt),
            ("lo", self.lo),
            ("lpf_tx", self.lpf_tx),
            ("lpf_rx", self.lpf_rx),
            ("lna_analog", self.lna_analog),
            ("lna_digital", self.lna_digital),
            ("vga", self.vga),
            ("phase_shifter_insertion_loss_db", self.phase_shifter_insertion_loss_db),
            ("ref_sample_rate", self.ref_sample_rate),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PowerError::InvalidCatalog(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("per_chain_lo_distribution", self.per_chain_lo_distribution),
            ("analog_tx_driver", self.analog_tx_driver),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PowerError::InvalidCatalog(format!("{name} must be non-negative")));
            }
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return Err(PowerError::InvalidCatalog("pa_efficiency must lie in (0, 1]".into()));
        }
        if [self.bs_adc_bits, self.bs_dac_bits, self.mt_adc_bits, self.mt_dac_bits].contains(&0) {
            return Err(PowerError::InvalidCatalog("converter bits must be at least 1".into()));
        }
        let needed = 10f64.powf(self.phase_shifter_insertion_loss_db / 10.0) * 0.95;
        if self.lna_analog / self.lna_digital < needed {
            return Err(PowerError::InvalidCatalog(format!(
                "lna_analog/lna_digital = {:.2} cannot make up {} dB insertion loss",
                self.lna_analog / self.lna_digital,
                self.phase_shifter_insertion_loss_db
            )));
        }
        Ok(())
    }

    pub fn scaling(&self) -> CatalogScaling {
        let adc_pred = self.adc_ref_bs * 2f64.powi(self.mt_adc_bits as i32 - self.bs_adc_bits as i32);
        let dac_pred = self.dac_ref_bs * 2f64.powi(self.mt_dac_bits as i32 - self.bs_dac_bits as i32);
        CatalogScaling {
            adc_predicted_mt: adc_pred,
            adc_deviation: (self.adc_ref_mt - adc_pred).abs() / adc_pred,
            dac_predicted_mt: dac_pred,
            dac_deviation: (self.dac_ref_mt - dac_pred).abs() / dac_pred,
        }
    }

    fn adc(&self, device: Device) -> (f64, u32) {
        match device {
            Device::Bs => (self.adc_ref_bs, self.bs_adc_bits),
            Device::Mt => (self.adc_ref_mt, self.mt_adc_bits),
        }
    }

    fn dac(&self, device: Device) -> (f64, u32) {
        match device {
            Device::Bs => (self.dac_ref_bs, self.bs_dac_bits),
            Device::Mt => (self.dac_ref_mt, self.mt_dac_bits),
        }
    }
}

/// Converter resolution for the same SQDR as an analog array using `base_bits`.
/// Rounds half away from zero and never drops below one bit.
pub fn effective_bits(base_bits: u32, kind: Architecture, n_antennas: usize, n_rf: usize) -> u32 {
    let combined = match kind {
        Architecture::Abf => return base_bits,
        Architecture::Dbf => n_antennas,
        Architecture::Hbf => n_rf,
    };
    let bits = (f64::from(base_bits) - BITS_PER_DECADE * (combined.max(1) as f64).log10()).round();
    bits.max(1.0) as u32
}

pub fn converter_power(ref_mw: f64, ref_bits: u32, bits: u32, sample_rate: f64, ref_rate: f64) -> f64 {
    ref_mw * 2f64.powi(bits as i32 - ref_bits as i32) * (sample_rate / ref_rate)
}

/// Consumption of all PAs together, mW. Independent of the PA count.
pub fn pa_power(radiated_total_w: f64, efficiency: f64) -> f64 {
    radiated_total_w / efficiency * 1e3
}

/// Radiated power of a single PA, mW.
pub fn per_pa_radiated_mw(radiated_total_w: f64, n_antennas: usize) -> f64 {
    radiated_total_w * 1e3 / n_antennas as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct DevicePowerSpec {
    pub device: Device,
    pub radiated_dbm: f64,
    pub n_antennas: usize,
    pub kind: Architecture,
    pub n_rf: usize,
}

impl DevicePowerSpec {
    /// Settings with the device's default radiated power. Analog arrays use one
    /// RF chain, digital arrays one per antenna; `hybrid_rf` is only read
    /// for hybrid arrays and is capped at the antenna count.
    pub fn new(device: Device, kind: Architecture, n_antennas: usize, hybrid_rf: usize) -> Self {
        let n_rf = match kind {
            Architecture::Abf => 1,
            Architecture::Hbf => hybrid_rf.min(n_antennas),
            Architecture::Dbf => n_antennas,
        };
        Self {
            device,
            radiated_dbm: device.default_radiated_dbm(),
            n_antennas,
            kind,
            n_rf,
        }
    }

    pub fn with_radiated_dbm(mut self, dbm: f64) -> Self {
        self.radiated_dbm = dbm;
        self
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        if self.n_antennas == 0 {
            return Err(PowerError::NoAntennas);
        }
        let ok = match self.kind {
            Architecture::Abf => self.n_rf == 1,
            Architecture::Hbf => (1..=self.n_antennas).contains(&self.n_rf),
            Architecture::Dbf => self.n_rf == self.n_antennas,
        };
        if ok {
            Ok(())
        } else {
            Err(PowerError::InconsistentRfChains {
                kind: self.kind,
                n_rf: self.n_rf,
                n_antennas: self.n_antennas,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerItem {
    pub side: Side,
    pub component: &'static str,
    pub count: usize,
    pub unit_mw: f64,
    pub total_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerBreakdown {
    pub items: Vec<PowerItem>,
    pub tx_total: f64,
    pub rx_total: f64,
    pub tx_bits: u32,
    pub rx_bits: u32,
}

impl PowerBreakdown {
    pub fn total(&self) -> f64 {
        self.tx_total + self.rx_total
    }

    pub fn item(&self, component: &str) -> Option<&PowerItem> {
        self.items.iter().find(|i| i.component == component)
    }

    pub fn item_mw(&self, component: &str) -> f64 {
        self.item(component).map_or(0.0, |i| i.total_mw)
    }

    /// ADC plus DAC consumption.
    pub fn converter_total(&self) -> f64 {
        self.item_mw("adc") + self.item_mw("dac")
    }
}

/// Itemized consumption of one transceiver.
pub fn transceiver_power(
    spec: &DevicePowerSpec,
    cat: &ComponentCatalog,
    sample_rate: f64,
) -> Result<PowerBreakdown, PowerError> {
    spec.validate()?;
    let n = spec.n_antennas;
    let chains = match spec.kind {
        Architecture::Abf => 1,
        Architecture::Hbf => spec.n_rf,
        Architecture::Dbf => n,
    };
    let (dac_ref, dac_base) = cat.dac(spec.device);
    let (adc_ref, adc_base) = cat.adc(spec.device);
    let dac_bits = effective_bits(dac_base, spec.kind, n, spec.n_rf);
    let adc_bits = effective_bits(adc_base, spec.kind, n, spec.n_rf);
    let dac = converter_power(dac_ref, dac_base, dac_bits, sample_rate, cat.ref_sample_rate);
    let adc = converter_power(adc_ref, adc_base, adc_bits, sample_rate, cat.ref_sample_rate);

    let lo_chains = if spec.kind == Architecture::Abf { 0 } else { chains };
    let (lna, driver_count) = match spec.kind {
        Architecture::Dbf => (cat.lna_digital, 0),
        Architecture::Abf | Architecture::Hbf => (cat.lna_analog, 1),
    };
    let pa_total = pa_power(dbm_to_watts(spec.radiated_dbm), cat.pa_efficiency);

    let item = |side, component, count: usize, unit_mw: f64| PowerItem {
        side,
        component,
        count,
        unit_mw,
        total_mw: count as f64 * unit_mw,
    };
    let items = vec![
        item(Side::Tx, "dac", chains, dac),
        item(Side::Tx, "lpf_tx", chains, cat.lpf_tx),
        item(Side::Tx, "lo_tx", 1, cat.lo),
        item(Side::Tx, "lo_distribution_tx", lo_chains, cat.per_chain_lo_distribution),
        item(Side::Tx, "driver_tx", driver_count, cat.analog_tx_driver),
        PowerItem {
            side: Side::Tx,
            component: "pa",
            count: n,
            unit_mw: pa_total / n as f64,
            total_mw: pa_total,
        },
        item(Side::Rx, "lna", n, lna),
        item(Side::Rx, "lpf_rx", chains, cat.lpf_rx),
        item(Side::Rx, "vga", chains, cat.vga),
        item(Side::Rx, "adc", chains, adc),
        item(Side::Rx, "lo_rx", 1, cat.lo),
        item(Side::Rx, "lo_distribution_rx", lo_chains, cat.per_chain_lo_distribution),
    ];
    let tx_total = items.iter().filter(|i| i.side == Side::Tx).map(|i| i.total_mw).sum();
    let rx_total = items.iter().filter(|i| i.side == Side::Rx).map(|i| i.total_mw).sum();
    Ok(PowerBreakdown {
        items,
        tx_total,
        rx_total,
        tx_bits: dac_bits,
        rx_bits: adc_bits,
    })
}

/// Smallest antenna count in `1..=max_antennas` whose receiver consumes
/// more than its transmitter.
pub fn rx_tx_crossover_in(
    kind: Architecture,
    device: Device,
    cat: &ComponentCatalog,
    hybrid_rf: usize,
    max_antennas: usize,
) -> Option<usize> {
    (1..=max_antennas).find(|&n| {
        let spec = DevicePowerSpec::new(device, kind, n, hybrid_rf);
        transceiver_power(&spec, cat, cat.ref_sample_rate)
            .map(|b| b.rx_total > b.tx_total)
            .unwrap_or(false)
    })
}

/// Crossover over `[1, 1024]` with the default hybrid sizing.
pub fn rx_tx_crossover(kind: Architecture, device: Device, cat: &ComponentCatalog) -> Option<usize> {
    rx_tx_crossover_in(kind, device, cat, DEFAULT_HYBRID_RF_CHAINS, MAX_ANTENNAS)
}
