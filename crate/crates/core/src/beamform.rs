//! Transmit precoders and receive combiners for analog, hybrid and fully
//! digital architectures.
//!
//! Design is two-stage: every terminal first picks combiners from the SVD
//! of its own channel, then the BS precodes on the stacked effective
//! channels `wᴴ·H_k`. Power is split equally across streams.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{norm, pinv_rtol, ComplexMatrix, LinalgError, Svd};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformError {
    #[error("effective channel row {row} is zero")]
    ZeroRow { row: usize },
    #[error("effective channel is rank deficient; dependent rows {rows:?}")]
    RankDeficient { rows: Vec<usize> },
    #[error("{requested} streams requested but only {available} available")]
    TooManyStreams { requested: usize, available: usize },
    #[error("{rf_chains} RF chains cannot carry {streams} streams")]
    InsufficientRfChains { rf_chains: usize, streams: usize },
    #[error("invalid architecture: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    Abf,
    Hbf,
    Dbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Steering,
    Cm,
    Zf,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Abf => "abf",
            Architecture::Hbf => "hbf",
            Architecture::Dbf => "dbf",
        }
    }
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Steering => "steering",
            Strategy::Cm => "cm",
            Strategy::Zf => "zf",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abf" | "analog" => Ok(Architecture::Abf),
            "hbf" | "hybrid" => Ok(Architecture::Hbf),
            "dbf" | "digital" => Ok(Architecture::Dbf),
            other => Err(format!("unknown architecture `{other}`")),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "steering" => Ok(Strategy::Steering),
            "cm" => Ok(Strategy::Cm),
            "zf" => Ok(Strategy::Zf),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureConfig {
    pub kind: Architecture,
    pub strategy: Strategy,
    pub streams_per_user: usize,
    pub bs_rf_chains: usize,
    pub ue_rf_chains: usize,
    /// Phase-shifter resolution; `None` means ideal continuous phases.
    pub phase_bits: Option<u32>,
}

impl ArchitectureConfig {
    /// RF chain sizing used for the frontier runs: analog and hybrid BSs get
    /// one chain per served stream, terminals one chain per own stream,
    /// digital arrays one chain per antenna.
    pub fn sized(
        kind: Architecture,
        strategy: Strategy,
        streams_per_user: usize,
        n_users: usize,
        n_bs_antennas: usize,
        n_ue_antennas: usize,
        phase_bits: Option<u32>,
    ) -> Result<Self, BeamformError> {
        let (bs_rf_chains, ue_rf_chains) = match kind {
            Architecture::Abf | Architecture::Hbf => (streams_per_user * n_users, streams_per_user),
            Architecture::Dbf => (n_bs_antennas, n_ue_antennas),
        };
        let cfg = Self {
            kind,
            strategy,
            streams_per_user,
            bs_rf_chains,
            ue_rf_chains,
            phase_bits,
        };
        cfg.validate(n_users, n_bs_antennas, n_ue_antennas)?;
        Ok(cfg)
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.kind, self.strategy)
    }

    pub fn total_streams(&self, n_users: usize) -> usize {
        self.streams_per_user * n_users
    }

    pub fn validate(
        &self,
        n_users: usize,
        n_tx: usize,
        n_rx: usize,
    ) -> Result<(), BeamformError> {
        let invalid = |m: String| Err(BeamformError::InvalidConfig(m));
        if !(1..=2).contains(&self.streams_per_user) {
            return invalid(format!(
                "streams_per_user must be 1 or 2, got {}",
                self.streams_per_user
            ));
        }
        let total = self.total_streams(n_users);
        if total > n_tx {
            return Err(BeamformError::TooManyStreams {
                requested: total,
                available: n_tx,
            });
        }
        if self.streams_per_user > n_rx {
            return Err(BeamformError::TooManyStreams {
                requested: self.streams_per_user,
                available: n_rx,
            });
        }
        match self.kind {
            Architecture::Abf => {
                if self.strategy != Strategy::Steering {
                    return invalid("analog beamforming only supports steering".into());
                }
                if self.streams_per_user != 1 {
                    return invalid("analog terminals carry a single stream".into());
                }
                if self.bs_rf_chains != total || self.ue_rf_chains != 1 {
                    return invalid("analog arrays use one RF chain per stream path".into());
                }
            }
            Architecture::Hbf => {
                if self.strategy == Strategy::Steering {
                    return invalid("hybrid beamforming uses cm or zf".into());
                }
                if self.bs_rf_chains < total {
                    return Err(BeamformError::InsufficientRfChains {
                        rf_chains: self.bs_rf_chains,
                        streams: total,
                    });
                }
                if self.ue_rf_chains < self.streams_per_user {
                    return Err(BeamformError::InsufficientRfChains {
                        rf_chains: self.ue_rf_chains,
                        streams: self.streams_per_user,
                    });
                }
                if self.bs_rf_chains > n_tx || self.ue_rf_chains > n_rx {
                    return invalid("hybrid RF chains exceed antenna count".into());
                }
            }
            Architecture::Dbf => {
                if self.strategy == Strategy::Steering {
                    return invalid("digital beamforming uses cm or zf".into());
                }
                if self.bs_rf_chains != n_tx || self.ue_rf_chains != n_rx {
                    return invalid("digital arrays need one RF chain per antenna".into());
                }
            }
        }
        Ok(())
    }
}

/// Receive side of one terminal.
#[derive(Debug, Clone)]
pub struct UeCombiner {
    /// Unit-modulus phase-shifter weights (`N_RX × S`), analog and hybrid only.
    pub rf_stage: Option<ComplexMatrix>,
    /// Final combiner columns (`N_RX × S`), each of unit norm.
    pub combiner: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct BeamformerSet {
    /// Unit-modulus analog stage (`N_TX × N_RF`); `None` for digital arrays.
    pub bs_rf_stage: Option<ComplexMatrix>,
    /// Digital precoder (`N_RF × K`, or `N_TX × K` when there is no analog stage).
    pub bs_baseband: ComplexMatrix,
    pub ue: Vec<UeCombiner>,
    pub streams_per_user: usize,
}

impl BeamformerSet {
    /// Overall `N_TX × K` precoder.
    pub fn precoder(&self) -> ComplexMatrix {
        match &self.bs_rf_stage {
            Some(rf) => rf * &self.bs_baseband,
            None => self.bs_baseband.clone(),
        }
    }

    pub fn total_streams(&self) -> usize {
        self.bs_baseband.cols()
    }

    pub fn radiated_power(&self) -> f64 {
        self.precoder().frobenius_norm().powi(2)
    }
}

/// Rounds a phase to the nearest of `2^bits` uniformly spaced levels.
pub fn quantize_phase(phase: f64, bits: Option<u32>) -> f64 {
    match bits {
        None => phase,
        Some(b) => {
            let step = 2.0 * PI / f64::from(1u32 << b.min(30));
            (phase / step).round() * step
        }
    }
}

/// Unit-modulus vector carrying the (optionally quantized) phases of `v`.
pub fn phase_only(v: &[Complex64], bits: Option<u32>) -> Vec<Complex64> {
    v.iter()
        .map(|z| Complex64::from_polar(1.0, quantize_phase(z.arg(), bits)))
        .collect()
}

fn rank_tol(rows: usize, cols: usize) -> f64 {
    pinv_rtol(rows, cols)
}

/// Combiners from a precomputed SVD of the terminal's channel.
pub fn rx_combiners_from_svd(
    svd: &Svd,
    n_rx: usize,
    streams: usize,
    kind: Architecture,
    phase_bits: Option<u32>,
) -> Result<UeCombiner, BeamformError> {
    let available = svd.rank(rank_tol(svd.u.rows(), svd.v.rows()));
    if streams > available || streams > svd.s.len() {
        return Err(BeamformError::TooManyStreams {
            requested: streams,
            available,
        });
    }
    let dominant: Vec<Vec<Complex64>> = (0..streams).map(|j| svd.u.column(j)).collect();
    match kind {
        Architecture::Dbf => Ok(UeCombiner {
            rf_stage: None,
            combiner: ComplexMatrix::from_columns(&dominant),
        }),
        Architecture::Abf | Architecture::Hbf => {
            let rf: Vec<Vec<Complex64>> =
                dominant.iter().map(|u| phase_only(u, phase_bits)).collect();
            let rf = ComplexMatrix::from_columns(&rf);
            let combiner = rf.scale(Complex64::new(1.0 / (n_rx as f64).sqrt(), 0.0));
            Ok(UeCombiner {
                rf_stage: Some(rf),
                combiner,
            })
        }
    }
}

/// Digital: the `streams` dominant left singular vectors of `h`.
/// Analog/hybrid: their phase-only projections scaled by `1/√N_RX`.
pub fn rx_combiners(
    h: &ComplexMatrix,
    streams: usize,
    kind: Architecture,
    phase_bits: Option<u32>,
) -> Result<UeCombiner, BeamformError> {
    if streams > h.rows().min(h.cols()) {
        return Err(BeamformError::TooManyStreams {
            requested: streams,
            available: h.rows().min(h.cols()),
        });
    }
    rx_combiners_from_svd(&h.svd()?, h.rows(), streams, kind, phase_bits)
}

/// Stacks `w_{k,s}ᴴ·H_k` into a `K × N_TX` matrix, user-major.
pub fn effective_channels(
    channels: &[&ComplexMatrix],
    combiners: &[UeCombiner],
) -> Result<ComplexMatrix, BeamformError> {
    assert_eq!(channels.len(), combiners.len(), "one combiner per channel");
    let n_tx = channels.first().map_or(0, |h| h.cols());
    let mut rows: Vec<Complex64> = Vec::new();
    let mut count = 0;
    for (h, c) in channels.iter().zip(combiners) {
        let g = c.combiner.hermitian().matmul(h)?;
        if g.cols() != n_tx {
            return Err(LinalgError::DimensionMismatch {
                op: "effective_channels",
                lhs: (h.rows(), n_tx),
                rhs: h.shape(),
            }
            .into());
        }
        rows.extend_from_slice(g.as_slice());
        count += g.rows();
    }
    Ok(ComplexMatrix::from_vec(count, n_tx, rows)?)
}

fn normalize_columns(f: &mut ComplexMatrix) -> Result<(), BeamformError> {
    for j in 0..f.cols() {
        let n = f.column_norm(j);
        if n == 0.0 {
            return Err(BeamformError::ZeroRow { row: j });
        }
        for i in 0..f.rows() {
            f[(i, j)] /= n;
        }
    }
    Ok(())
}

/// Channel-matched precoder `Gᴴ` with unit-norm columns.
pub fn precoder_cm(g: &ComplexMatrix) -> Result<ComplexMatrix, BeamformError> {
    let mut f = g.hermitian();
    normalize_columns(&mut f)?;
    Ok(f)
}

/// Rows of `g` that lie (numerically) in the span of earlier rows.
fn dependent_rows(g: &ComplexMatrix, rtol: f64) -> Vec<usize> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut out = Vec::new();
    for i in 0..g.rows() {
        let row = g.row(i);
        let row_norm = norm(row);
        let mut r: Vec<Complex64> = row.to_vec();
        for _ in 0..2 {
            for b in &basis {
                let proj: Complex64 = b.iter().zip(&r).map(|(x, y)| x.conj() * y).sum();
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= proj * bi;
                }
            }
        }
        let rn = norm(&r);
        if row_norm == 0.0 || rn <= rtol * row_norm {
            out.push(i);
        } else {
            basis.push(r.into_iter().map(|z| z / rn).collect());
        }
    }
    out
}

/// Zero-forcing precoder `pinv(G)` with unit-norm columns.
pub fn precoder_zf(g: &ComplexMatrix) -> Result<ComplexMatrix, BeamformError> {
    if let Some(row) = (0..g.rows()).find(|&i| norm(g.row(i)) == 0.0) {
        return Err(BeamformError::ZeroRow { row });
    }
    if g.rows() > g.cols() {
        return Err(BeamformError::RankDeficient {
            rows: (g.cols()..g.rows()).collect(),
        });
    }
    let svd = g.svd()?;
    let tol = rank_tol(g.rows(), g.cols());
    if svd.rank(tol) < g.rows() {
        let mut rows = dependent_rows(g, 1e-8);
        if rows.is_empty() {
            rows.push(g.rows() - 1);
        }
        return Err(BeamformError::RankDeficient { rows });
    }
    let mut f = g.pinv()?;
    normalize_columns(&mut f)?;
    Ok(f)
}

/// Phase-only beam towards each effective channel, `exp(j·arg(gᴴ))/√N_TX`.
pub fn precoder_steering(
    g: &ComplexMatrix,
    phase_bits: Option<u32>,
) -> Result<ComplexMatrix, BeamformError> {
    let scale = 1.0 / (g.cols() as f64).sqrt();
    let mut cols = Vec::with_capacity(g.rows());
    for i in 0..g.rows() {
        if norm(g.row(i)) == 0.0 {
            return Err(BeamformError::ZeroRow { row: i });
        }
        let conj: Vec<Complex64> = g.row(i).iter().map(|z| z.conj()).collect();
        cols.push(phase_only(&conj, phase_bits).into_iter().map(|z| z * scale).collect());
    }
    Ok(ComplexMatrix::from_columns(&cols))
}

fn digital_precoder(g: &ComplexMatrix, strategy: Strategy) -> Result<ComplexMatrix, BeamformError> {
    match strategy {
        Strategy::Zf => precoder_zf(g),
        Strategy::Cm | Strategy::Steering => precoder_cm(g),
    }
}

/// Splits a target precoder into a unit-modulus analog stage and a digital
/// baseband recomputed on the reduced channel `G·F_RF`.
///
/// Analog column `j < K` carries the phases of target column `j`; any extra
/// RF chains get DFT columns. Baseband columns are scaled so each column of
/// `F_RF·F_BB` has unit norm.
pub fn hybrid_factorize(
    target: &ComplexMatrix,
    g: &ComplexMatrix,
    n_rf: usize,
    strategy: Strategy,
    phase_bits: Option<u32>,
) -> Result<(ComplexMatrix, ComplexMatrix), BeamformError> {
    let streams = target.cols();
    let n_tx = target.rows();
    if n_rf < streams {
        return Err(BeamformError::InsufficientRfChains {
            rf_chains: n_rf,
            streams,
        });
    }
    let mut cols: Vec<Vec<Complex64>> = (0..streams)
        .map(|j| phase_only(&target.column(j), phase_bits))
        .collect();
    for extra in 0..n_rf - streams {
        let k = extra as f64;
        cols.push(
            (0..n_tx)
                .map(|i| {
                    let phase = 2.0 * PI * k * i as f64 / n_tx as f64;
                    Complex64::from_polar(1.0, quantize_phase(phase, phase_bits))
                })
                .collect(),
        );
    }
    let f_rf = ComplexMatrix::from_columns(&cols);
    let reduced = g.matmul(&f_rf)?;
    let mut f_bb = digital_precoder(&reduced, strategy)?;
    let product = &f_rf * &f_bb;
    for j in 0..streams {
        let n = product.column_norm(j);
        if n == 0.0 {
            return Err(BeamformError::ZeroRow { row: j });
        }
        for i in 0..f_bb.rows() {
            f_bb[(i, j)] /= n;
        }
    }
    Ok((f_rf, f_bb))
}

/// Scales column `j` so `‖(rf·F)_j‖² = P_T / K`.
fn allocate_columns(
    rf: Option<&ComplexMatrix>,
    f: &ComplexMatrix,
    total_power: f64,
) -> Result<ComplexMatrix, BeamformError> {
    let k = f.cols();
    let effective = match rf {
        Some(rf) => rf.matmul(f)?,
        None => f.clone(),
    };
    let per_stream = total_power / k as f64;
    let mut out = f.clone();
    for j in 0..k {
        let n = effective.column_norm(j);
        if n == 0.0 {
            return Err(BeamformError::ZeroRow { row: j });
        }
        let s = per_stream.sqrt() / n;
        for i in 0..out.rows() {
            out[(i, j)] *= s;
        }
    }
    Ok(out)
}

/// Equal power per stream; the result has `‖F‖_F² = P_T`.
pub fn allocate_power(f: &ComplexMatrix, total_power: f64) -> Result<ComplexMatrix, BeamformError> {
    allocate_columns(None, f, total_power)
}

/// Full design for one drop given each user's channel and its SVD.
pub fn design(
    channels: &[&ComplexMatrix],
    svds: &[Svd],
    cfg: &ArchitectureConfig,
    total_power: f64,
) -> Result<BeamformerSet, BeamformError> {
    let n_users = channels.len();
    let n_rx = channels.first().map_or(0, |h| h.rows());
    let n_tx = channels.first().map_or(0, |h| h.cols());
    cfg.validate(n_users, n_tx, n_rx)?;

    let ue = svds
        .iter()
        .map(|svd| {
            rx_combiners_from_svd(svd, n_rx, cfg.streams_per_user, cfg.kind, cfg.phase_bits)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let g = effective_channels(channels, &ue)?;

    let (rf, bb) = match cfg.kind {
        Architecture::Dbf => (None, digital_precoder(&g, cfg.strategy)?),
        Architecture::Abf => {
            let steer = precoder_steering(&g, cfg.phase_bits)?;
            let scale = Complex64::new((n_tx as f64).sqrt(), 0.0);
            let rf = steer.scale(scale);
            let bb = ComplexMatrix::diag(&vec![1.0 / (n_tx as f64).sqrt(); g.rows()]);
            (Some(rf), bb)
        }
        Architecture::Hbf => {
            let target = digital_precoder(&g, cfg.strategy)?;
            let (rf, bb) =
                hybrid_factorize(&target, &g, cfg.bs_rf_chains, cfg.strategy, cfg.phase_bits)?;
            (Some(rf), bb)
        }
    };
    let bs_baseband = allocate_columns(rf.as_ref(), &bb, total_power)?;
    Ok(BeamformerSet {
        bs_rf_stage: rf,
        bs_baseband,
        ue,
        streams_per_user: cfg.streams_per_user,
    })
}

/// Convenience wrapper computing the per-user SVDs.
pub fn design_for_channels(
    channels: &[&ComplexMatrix],
    cfg: &ArchitectureConfig,
    total_power: f64,
) -> Result<BeamformerSet, BeamformError> {
    let svds = channels
        .iter()
        .map(|h| h.svd())
        .collect::<Result<Vec<_>, _>>()?;
    design(channels, &svds, cfg, total_power)
}
