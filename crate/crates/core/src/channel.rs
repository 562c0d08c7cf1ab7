//! User drops, path loss and per-user channel synthesis.
//!
//! Each link is one line-of-sight ray plus a configurable number of
//! single-ray scattering clusters whose angles are Laplacian perturbations
//! of the LoS angles. The BS array lies in the x–z plane at the origin,
//! raised to `bs_height` and facing +y. Terminal arrays face the BS, so the
//! LoS ray always arrives at terminal boresight.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::arrays::{ArrayGeometry, Direction};
use crate::linalg::ComplexMatrix;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Position = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("scenario needs at least one user")]
    NoUsers,
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Fixed wireless access: rooftop/balcony terminals in a sector in front of the BS.
    Fwa,
    /// Vehicle-to-infrastructure: cars on two crossing roads near the BS.
    V2i,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Fwa => "fwa",
            ScenarioKind::V2i => "v2i",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathConfig {
    pub n_clusters: usize,
    /// Power of each cluster below the LoS ray, dB.
    pub cluster_power_db: f64,
    /// RMS angular spread of cluster angles around the LoS angles, radians.
    pub angular_spread: f64,
}

impl Default for MultipathConfig {
    fn default() -> Self {
        Self {
            n_clusters: 3,
            cluster_power_db: 10.0,
            angular_spread: 10f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub bs_height: f64,
    pub n_users: usize,
    pub sector_halfwidth: f64,
    pub min_distance: f64,
    pub max_distance: f64,
    pub user_height_min: f64,
    pub user_height_max: f64,
    pub carrier_frequency: f64,
    /// V2I only: length of each road segment.
    pub road_length: f64,
    /// V2I only: ground distance from the BS foot to the crossroad (along +y).
    pub crossroad_offset: f64,
    pub pathloss_exponent: f64,
    pub multipath: MultipathConfig,
}

impl ScenarioConfig {
    pub fn fwa() -> Self {
        Self {
            kind: ScenarioKind::Fwa,
            bs_height: 30.0,
            n_users: 10,
            sector_halfwidth: 60f64.to_radians(),
            min_distance: 10.0,
            max_distance: 300.0,
            user_height_min: 10.0,
            user_height_max: 20.0,
            carrier_frequency: 28e9,
            road_length: 400.0,
            crossroad_offset: 20.0,
            pathloss_exponent: 2.0,
            multipath: MultipathConfig::default(),
        }
    }

    pub fn v2i() -> Self {
        Self {
            kind: ScenarioKind::V2i,
            bs_height: 15.0,
            n_users: 32,
            user_height_min: 1.65,
            user_height_max: 1.65,
            ..Self::fwa()
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn bs_position(&self) -> Position {
        [0.0, 0.0, self.bs_height]
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |msg: &str| Err(ChannelError::Invalid(msg.to_string()));
        if self.n_users == 0 {
            return Err(ChannelError::NoUsers);
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(ChannelError::NonPositiveFrequency(self.carrier_frequency));
        }
        if !(self.min_distance > 0.0) || self.max_distance < self.min_distance {
            return bad("need 0 < min_distance <= max_distance");
        }
        if self.user_height_max < self.user_height_min {
            return bad("user_height_max below user_height_min");
        }
        if !(0.0..=PI).contains(&self.sector_halfwidth) {
            return bad("sector_halfwidth must lie in [0, pi]");
        }
        if !(self.pathloss_exponent > 0.0) {
            return bad("pathloss_exponent must be positive");
        }
        if !(self.multipath.angular_spread >= 0.0) {
            return bad("angular spread must be non-negative");
        }
        if self.kind == ScenarioKind::V2i {
            if !(self.road_length > 0.0) {
                return bad("road_length must be positive");
            }
            // reachable road points must exist beyond min_distance
            let far = self.crossroad_offset.abs() + self.road_length / 2.0;
            if far <= self.min_distance {
                return bad("roads lie entirely inside min_distance");
            }
        }
        Ok(())
    }
}

/// Free-space path loss `20·log10(4π·d/λ)` in dB.
pub fn free_space_path_loss(distance: f64, frequency: f64) -> Result<f64, ChannelError> {
    path_loss(distance, frequency, 2.0)
}

/// Path loss with a distance exponent; exponent 2 is free space.
pub fn path_loss(distance: f64, frequency: f64, exponent: f64) -> Result<f64, ChannelError> {
    if !(distance > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance));
    }
    if !(frequency > 0.0) {
        return Err(ChannelError::NonPositiveFrequency(frequency));
    }
    let lambda = SPEED_OF_LIGHT / frequency;
    Ok(20.0 * (4.0 * PI / lambda).log10() + 10.0 * exponent * distance.log10())
}

/// Draws user positions. Deterministic in `(cfg, seed)`.
pub fn drop_users(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Position>, ChannelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = (0..cfg.n_users)
        .map(|_| match cfg.kind {
            ScenarioKind::Fwa => drop_fwa(cfg, &mut rng),
            ScenarioKind::V2i => drop_v2i(cfg, &mut rng),
        })
        .collect();
    Ok(users)
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn drop_fwa(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Position {
    let az = uniform(rng, -cfg.sector_halfwidth, cfg.sector_halfwidth);
    let r = uniform(rng, cfg.min_distance, cfg.max_distance);
    let h = uniform(rng, cfg.user_height_min, cfg.user_height_max);
    [r * az.sin(), r * az.cos(), h]
}

/// Two perpendicular roads crossing at `(0, crossroad_offset)`: one parallel
/// to x, one parallel to y, each `road_length` long and centred on the crossing.
fn drop_v2i(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Position {
    let half = cfg.road_length / 2.0;
    loop {
        let along = uniform(rng, -half, half);
        let (x, y) = if rng.random_bool(0.5) {
            (along, cfg.crossroad_offset)
        } else {
            (0.0, cfg.crossroad_offset + along)
        };
        if x.hypot(y) >= cfg.min_distance {
            let h = uniform(rng, cfg.user_height_min, cfg.user_height_max);
            return [x, y, h];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub departure: Direction,
    pub arrival: Direction,
    pub is_los: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn los(&self) -> Option<&Path> {
        self.paths.iter().find(|p| p.is_los)
    }
}

/// `10^(-PL/10) · (1 + K · 10^(-Δ/10))`.
pub fn expected_path_power(cfg: &ScenarioConfig, path_loss_db: f64) -> f64 {
    let los = 10f64.powf(-path_loss_db / 10.0);
    let rel = 10f64.powf(-cfg.multipath.cluster_power_db / 10.0);
    los * (1.0 + cfg.multipath.n_clusters as f64 * rel)
}

#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    pub user_id: usize,
    /// `N_RX × N_TX`.
    pub matrix: ComplexMatrix,
    pub paths: PathSet,
    /// BS-to-user distance in meters.
    pub distance: f64,
    pub path_loss_db: f64,
}

pub fn distance_to_bs(cfg: &ScenarioConfig, position: Position) -> f64 {
    let bs = cfg.bs_position();
    let v = [position[0] - bs[0], position[1] - bs[1], position[2] - bs[2]];
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Laplacian sample with the given RMS value (scale = rms/√2).
fn laplacian(rng: &mut impl Rng, rms: f64) -> f64 {
    if rms == 0.0 {
        return 0.0;
    }
    let b = rms / 2f64.sqrt();
    let u: f64 = rng.random_range(-0.5..0.5);
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `H = Σ_p α_p · a_RX(arrival_p) · a_TX(departure_p)ᴴ`.
pub fn synthesize_channel(
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    user_id: usize,
    position: Position,
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<ChannelMatrix, ChannelError> {
    let bs_pos = cfg.bs_position();
    let offset = [
        position[0] - bs_pos[0],
        position[1] - bs_pos[1],
        position[2] - bs_pos[2],
    ];
    let distance = distance_to_bs(cfg, position);
    let pl = path_loss(distance, cfg.carrier_frequency, cfg.pathloss_exponent)?;
    let los_departure = Direction::from_vector(offset);

    let phase = -2.0 * PI * distance / cfg.wavelength();
    let mut paths = vec![Path {
        gain: Complex64::from_polar(10f64.powf(-pl / 20.0), phase.rem_euclid(2.0 * PI)),
        departure: los_departure,
        arrival: Direction::BORESIGHT,
        is_los: true,
    }];

    let mp = &cfg.multipath;
    let cluster_amp = 10f64.powf(-(pl + mp.cluster_power_db) / 20.0);
    for _ in 0..mp.n_clusters {
        let gain = complex_normal(rng) * cluster_amp;
        let departure = Direction::wrapped(
            los_departure.azimuth() + laplacian(rng, mp.angular_spread),
            los_departure.elevation() + laplacian(rng, mp.angular_spread),
        );
        let arrival = Direction::wrapped(
            laplacian(rng, mp.angular_spread),
            laplacian(rng, mp.angular_spread),
        );
        paths.push(Path {
            gain,
            departure,
            arrival,
            is_los: false,
        });
    }

    let mut matrix = ComplexMatrix::zeros(ue.len(), bs.len());
    for p in &paths {
        let a_rx = ue.steering(p.arrival);
        let a_tx = bs.steering(p.departure);
        for (i, &r) in a_rx.iter().enumerate() {
            let ri = p.gain * r;
            for (j, &t) in a_tx.iter().enumerate() {
                matrix[(i, j)] += ri * t.conj();
            }
        }
    }

    Ok(ChannelMatrix {
        user_id,
        matrix,
        paths: PathSet { paths },
        distance,
        path_loss_db: pl,
    })
}

/// Random stream for channel synthesis of one drop, independent of the
/// stream [`drop_users`] draws positions from.
pub fn channel_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Positions plus channels for every user of one drop.
pub fn realize_drop(
    cfg: &ScenarioConfig,
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    seed: u64,
) -> Result<Vec<ChannelMatrix>, ChannelError> {
    let users = drop_users(cfg, seed)?;
    let mut rng = channel_rng(seed);
    users
        .into_iter()
        .enumerate()
        .map(|(k, pos)| synthesize_channel(bs, ue, k, pos, cfg, &mut rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspl_reference_points() {
        let f = 28e9;
        let lambda = SPEED_OF_LIGHT / f;
        let d0 = lambda / (4.0 * PI);
        assert!(free_space_path_loss(d0, f).unwrap().abs() < 1e-12);
        let diff = free_space_path_loss(200.0, f).unwrap() - free_space_path_loss(100.0, f).unwrap();
        assert!((diff - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((diff - 6.021).abs() < 1e-3);
        let pl = free_space_path_loss(100.0, f).unwrap();
        assert!((pl - 101.39).abs() < 0.005, "{pl}");
    }

    #[test]
    fn fspl_rejects_non_positive_distance() {
        assert_eq!(
            free_space_path_loss(0.0, 28e9),
            Err(ChannelError::NonPositiveDistance(0.0))
        );
        assert!(free_space_path_loss(-1.0, 28e9).is_err());
        assert!(free_space_path_loss(1.0, 0.0).is_err());
    }

    #[test]
    fn path_loss_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for d in [1.0, 5.0, 10.0, 50.0, 300.0] {
            let pl = free_space_path_loss(d, 28e9).unwrap();
            assert!(pl > prev);
            prev = pl;
        }
        assert!(free_space_path_loss(50.0, 39e9).unwrap() > free_space_path_loss(50.0, 28e9).unwrap());
    }

    #[test]
    fn fwa_drop_ranges() {
        let cfg = ScenarioConfig::fwa();
        for seed in 0..20 {
            for p in drop_users(&cfg, seed).unwrap() {
                let ground = p[0].hypot(p[1]);
                assert!((10.0 - 1e-9..=300.0 + 1e-9).contains(&ground));
                assert!((10.0..=20.0).contains(&p[2]));
                assert!(p[1] > 0.0);
            }
        }
    }

    #[test]
    fn degenerate_distance_interval() {
        let cfg = ScenarioConfig {
            min_distance: 100.0,
            max_distance: 100.0,
            ..ScenarioConfig::fwa()
        };
        for p in drop_users(&cfg, 3).unwrap() {
            assert!((p[0].hypot(p[1]) - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fwa_azimuth_statistics() {
        let cfg = ScenarioConfig {
            n_users: 10_000,
            ..ScenarioConfig::fwa()
        };
        let users = drop_users(&cfg, 11).unwrap();
        let az: Vec<f64> = users.iter().map(|p| p[0].atan2(p[1]).to_degrees()).collect();
        let mean = az.iter().sum::<f64>() / az.len() as f64;
        assert!(mean.abs() < 2.0, "mean azimuth {mean}");
        assert!(az.iter().all(|a| a.abs() <= 60.0 + 1e-9));
    }

    #[test]
    fn v2i_users_on_roads() {
        let cfg = ScenarioConfig::v2i();
        for p in drop_users(&cfg, 5).unwrap() {
            assert_eq!(p[2], 1.65);
            let on_x_road = (p[1] - cfg.crossroad_offset).abs() < 1e-12 && p[0].abs() <= 200.0;
            let on_y_road = p[0] == 0.0 && (p[1] - cfg.crossroad_offset).abs() <= 200.0;
            assert!(on_x_road || on_y_road, "{p:?}");
            assert!(p[0].hypot(p[1]) >= 10.0);
        }
    }

    #[test]
    fn zero_users_rejected() {
        let cfg = ScenarioConfig {
            n_users: 0,
            ..ScenarioConfig::fwa()
        };
        assert_eq!(drop_users(&cfg, 0), Err(ChannelError::NoUsers));
    }

    #[test]
    fn drops_are_deterministic() {
        let cfg = ScenarioConfig::v2i();
        assert_eq!(drop_users(&cfg, 42).unwrap(), drop_users(&cfg, 42).unwrap());
        assert_ne!(drop_users(&cfg, 42).unwrap(), drop_users(&cfg, 43).unwrap());
    }

    #[test]
    fn laplacian_rms_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let ms = (0..n).map(|_| laplacian(&mut rng, 0.2).powi(2)).sum::<f64>() / n as f64;
        assert!((ms.sqrt() - 0.2).abs() < 0.005);
    }
}
