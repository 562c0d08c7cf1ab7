//! Noise budget, per-stream SINR and Shannon sum throughput.

use crate::beamform::BeamformerSet;
use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub bandwidth: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub carrier_frequency: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            bandwidth: 200e6,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 5.0,
            carrier_frequency: 28e9,
        }
    }
}

impl LinkBudget {
    pub fn noise_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + 10.0 * self.bandwidth.log10() + self.noise_figure_db
    }

    /// Receiver noise power in watts.
    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Received signal and interference power per stream for a given precoder.
/// Both scale linearly with transmit power, which lets one beamformer
/// design be re-evaluated across a power sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamGains {
    pub signal: Vec<f64>,
    pub interference: Vec<f64>,
    /// Radiated power the gains were measured at, watts.
    pub reference_power: f64,
}

impl StreamGains {
    pub fn measure(channels: &[&ComplexMatrix], bf: &BeamformerSet) -> Self {
        let f = bf.precoder();
        let reference_power = f.frobenius_norm().powi(2);
        let s = bf.streams_per_user;
        let mut signal = Vec::with_capacity(f.cols());
        let mut interference = Vec::with_capacity(f.cols());
        for (k, (h, ue)) in channels.iter().zip(&bf.ue).enumerate() {
            // S × K matrix of received amplitudes for this user's streams
            let rx = &(&ue.combiner.hermitian() * h) * &f;
            for local in 0..s {
                let own = k * s + local;
                let mut sig = 0.0;
                let mut int = 0.0;
                for j in 0..rx.cols() {
                    let p = rx[(local, j)].norm_sqr();
                    if j == own {
                        sig = p;
                    } else {
                        int += p;
                    }
                }
                signal.push(sig);
                interference.push(int);
            }
        }
        Self {
            signal,
            interference,
            reference_power,
        }
    }

    /// SINR of every stream when the same directions radiate `power` watts.
    pub fn sinr_at(&self, power: f64, noise: f64) -> Vec<f64> {
        if self.reference_power == 0.0 || power == 0.0 {
            return vec![0.0; self.signal.len()];
        }
        let scale = self.reference_power / power;
        // a/(b + n·P0/P) is monotone in P under IEEE rounding
        self.signal
            .iter()
            .zip(&self.interference)
            .map(|(&a, &b)| {
                let denom = b + noise * scale;
                if a == 0.0 {
                    0.0
                } else {
                    a / denom
                }
            })
            .collect()
    }
}

/// `|wᴴ H_k f_{k,s}|² / (Σ_{(j,t)≠(k,s)} |wᴴ H_k f_{j,t}|² + noise)`.
pub fn stream_sinr(channels: &[&ComplexMatrix], bf: &BeamformerSet, noise: f64) -> Vec<f64> {
    let gains = StreamGains::measure(channels, bf);
    gains
        .signal
        .iter()
        .zip(&gains.interference)
        .map(|(&a, &b)| if a == 0.0 { 0.0 } else { a / (b + noise) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    /// bit/s per user.
    pub user_rates: Vec<f64>,
    /// bit/s.
    pub sum_throughput: f64,
}

/// Shannon rates, `B·log2(1 + SINR)` per stream, grouped per user.
pub fn sum_throughput(sinrs: &[f64], streams_per_user: usize, budget: &LinkBudget) -> RateReport {
    let per_stream: Vec<f64> = sinrs
        .iter()
        .map(|&s| budget.bandwidth * s.max(0.0).ln_1p() / std::f64::consts::LN_2)
        .collect();
    let user_rates: Vec<f64> = per_stream
        .chunks(streams_per_user.max(1))
        .map(|c| c.iter().sum())
        .collect();
    let sum_throughput = user_rates.iter().sum();
    RateReport {
        sinr: sinrs.to_vec(),
        user_rates,
        sum_throughput,
    }
}
