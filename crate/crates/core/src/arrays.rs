//! Uniform planar array geometry and steering vectors.
//!
//! Elements sit on a grid in the local x–z plane with boresight along +y.
//! Element 0 is at the local origin; the grid grows along +x (horizontal)
//! and +z (vertical).

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{inner, norm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("array must have at least one element")]
    Empty,
    #[error("{count} elements cannot form a planar grid with {columns} columns")]
    NonRectangular { count: usize, columns: usize },
    #[error("spacing and wavelength must be positive and finite")]
    BadScale,
    #[error("direction out of range: azimuth {azimuth}, elevation {elevation}")]
    BadDirection { azimuth: f64, elevation: f64 },
    #[error("weight and steering vectors differ in length ({weights} vs {steering})")]
    LengthMismatch { weights: usize, steering: usize },
    #[error("weight vector has zero norm")]
    ZeroWeights,
}

/// Angles in radians. Azimuth is measured from boresight (+y) towards +x,
/// elevation from the horizontal plane towards +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    azimuth: f64,
    elevation: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction {
        azimuth: 0.0,
        elevation: 0.0,
    };

    pub fn new(azimuth: f64, elevation: f64) -> Result<Self, ArrayError> {
        let ok = azimuth.is_finite()
            && elevation.is_finite()
            && azimuth > -PI
            && azimuth <= PI
            && elevation.abs() <= PI / 2.0;
        if ok {
            Ok(Self { azimuth, elevation })
        } else {
            Err(ArrayError::BadDirection { azimuth, elevation })
        }
    }

    /// Builds a direction from arbitrary angles, wrapping azimuth into
    /// (−π, π] and clamping elevation to [−π/2, π/2].
    pub fn wrapped(azimuth: f64, elevation: f64) -> Self {
        let mut az = (azimuth + PI).rem_euclid(2.0 * PI) - PI;
        if az <= -PI {
            az += 2.0 * PI;
        }
        Self {
            azimuth: az,
            elevation: elevation.clamp(-PI / 2.0, PI / 2.0),
        }
    }

    /// Direction of a (non-zero) vector in the local frame.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        Self::wrapped(v[0].atan2(v[1]), (v[2] / r).clamp(-1.0, 1.0).asin())
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    /// Unit propagation vector `(cos el·sin az, cos el·cos az, sin el)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (se, ce) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [ce * sa, ce * ca, se]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    n_horizontal: usize,
    n_vertical: usize,
    spacing: f64,
    wavelength: f64,
    positions: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    pub fn planar(
        n_horizontal: usize,
        n_vertical: usize,
        spacing: f64,
        wavelength: f64,
    ) -> Result<Self, ArrayError> {
        if n_horizontal == 0 || n_vertical == 0 {
            return Err(ArrayError::Empty);
        }
        if !(spacing > 0.0 && spacing.is_finite() && wavelength > 0.0 && wavelength.is_finite()) {
            return Err(ArrayError::BadScale);
        }
        let positions = (0..n_vertical)
            .flat_map(|iz| {
                (0..n_horizontal).map(move |ix| [ix as f64 * spacing, 0.0, iz as f64 * spacing])
            })
            .collect();
        Ok(Self {
            n_horizontal,
            n_vertical,
            spacing,
            wavelength,
            positions,
        })
    }

    /// Half-wavelength array of `count` elements with `ceil(√count)` columns.
    /// Counts that do not divide evenly into that many columns are rejected.
    pub fn half_wavelength(count: usize, wavelength: f64) -> Result<Self, ArrayError> {
        let (n_h, n_v) = grid_shape(count)?;
        Self::planar(n_h, n_v, wavelength / 2.0, wavelength)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_horizontal(&self) -> usize {
        self.n_horizontal
    }

    pub fn n_vertical(&self) -> usize {
        self.n_vertical
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// Array response towards `direction`; every entry has unit modulus.
    pub fn steering(&self, direction: Direction) -> Vec<Complex64> {
        let u = direction.unit_vector();
        let k = 2.0 * PI / self.wavelength;
        self.positions
            .iter()
            .map(|p| Complex64::from_polar(1.0, k * (u[0] * p[0] + u[1] * p[1] + u[2] * p[2])))
            .collect()
    }
}

/// Grid shape `(n_horizontal, n_vertical)` for an element count.
pub fn grid_shape(count: usize) -> Result<(usize, usize), ArrayError> {
    if count == 0 {
        return Err(ArrayError::Empty);
    }
    let mut columns = (count as f64).sqrt().ceil() as usize;
    // guard against sqrt rounding on perfect squares
    while columns * columns < count {
        columns += 1;
    }
    while columns > 1 && (columns - 1) * (columns - 1) >= count {
        columns -= 1;
    }
    if !count.is_multiple_of(columns) {
        return Err(ArrayError::NonRectangular { count, columns });
    }
    Ok((columns, count / columns))
}

/// `|⟨w, a⟩|² / ‖w‖²`.
pub fn beam_gain(weights: &[Complex64], steering: &[Complex64]) -> Result<f64, ArrayError> {
    if weights.len() != steering.len() {
        return Err(ArrayError::LengthMismatch {
            weights: weights.len(),
            steering: steering.len(),
        });
    }
    let w = norm(weights);
    if w == 0.0 {
        return Err(ArrayError::ZeroWeights);
    }
    Ok(inner(weights, steering).norm_sqr() / (w * w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LAMBDA: f64 = 0.010_706_874_214_285_714;

    fn pair() -> ArrayGeometry {
        ArrayGeometry::planar(2, 1, LAMBDA / 2.0, LAMBDA).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn broadside_is_all_ones() {
        let g = ArrayGeometry::half_wavelength(64, LAMBDA).unwrap();
        let a = g.steering(Direction::BORESIGHT);
        assert!(a.iter().all(|&z| close(z, Complex64::new(1.0, 0.0))));
    }

    #[test]
    fn endfire_pair_alternates_sign() {
        let a = pair().steering(Direction::new(PI / 2.0, 0.0).unwrap());
        assert!(close(a[0], Complex64::new(1.0, 0.0)));
        assert!(close(a[1], Complex64::new(-1.0, 0.0)));
    }

    #[test]
    fn thirty_degree_pair_gives_quarter_turn() {
        let a = pair().steering(Direction::new(PI / 6.0, 0.0).unwrap());
        // phase = π·sin(π/6) = π/2
        assert!(close(a[1], Complex64::from_polar(1.0, PI * (PI / 6.0).sin())));
        assert!(close(a[1], Complex64::new(0.0, 1.0)));
    }

    #[test]
    fn steering_has_unit_modulus_and_norm_sqrt_n() {
        let g = ArrayGeometry::half_wavelength(16, LAMBDA).unwrap();
        let a = g.steering(Direction::new(0.3, -0.7).unwrap());
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!((norm(&a) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matched_gain_equals_element_count() {
        let g = ArrayGeometry::half_wavelength(64, LAMBDA).unwrap();
        let a = g.steering(Direction::new(0.2, 0.1).unwrap());
        let w: Vec<_> = a.iter().map(|z| z / 8.0).collect();
        let gain = beam_gain(&w, &a).unwrap();
        assert!((gain - 64.0).abs() < 1e-9);
        assert!((10.0 * gain.log10() - 18.06).abs() < 0.01);
    }

    #[test]
    fn orthogonal_weights_have_zero_gain() {
        let a = pair().steering(Direction::BORESIGHT);
        let w = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(beam_gain(&w, &a).unwrap() < 1e-24);
    }

    #[test]
    fn gain_obeys_cauchy_schwarz() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = ArrayGeometry::half_wavelength(16, LAMBDA).unwrap();
        for _ in 0..200 {
            let w: Vec<_> = (0..16)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let d = Direction::wrapped(rng.random_range(-PI..PI), rng.random_range(-1.5..1.5));
            assert!(beam_gain(&w, &g.steering(d)).unwrap() <= 16.0 + 1e-9);
        }
    }

    #[test]
    fn beam_gain_errors() {
        let a = pair().steering(Direction::BORESIGHT);
        assert_eq!(
            beam_gain(&[Complex64::new(0.0, 0.0); 2], &a),
            Err(ArrayError::ZeroWeights)
        );
        assert!(matches!(
            beam_gain(&a[..1], &a),
            Err(ArrayError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(grid_shape(64).unwrap(), (8, 8));
        assert_eq!(grid_shape(256).unwrap(), (16, 16));
        assert_eq!(grid_shape(12).unwrap(), (4, 3));
        assert_eq!(grid_shape(1).unwrap(), (1, 1));
        assert!(matches!(grid_shape(7), Err(ArrayError::NonRectangular { .. })));
        assert_eq!(grid_shape(0), Err(ArrayError::Empty));
    }

    #[test]
    fn direction_validation_and_wrapping() {
        assert!(Direction::new(PI, 0.0).is_ok());
        assert!(Direction::new(-PI, 0.0).is_err());
        assert!(Direction::new(0.0, 1.6).is_err());
        let d = Direction::wrapped(3.0 * PI / 2.0, 2.0);
        assert!((d.azimuth() + PI / 2.0).abs() < 1e-12);
        assert_eq!(d.elevation(), PI / 2.0);
        assert_eq!(Direction::wrapped(-PI, 0.0).azimuth(), PI);
    }

    #[test]
    fn from_vector_inverts_unit_vector() {
        let d = Direction::new(-0.8, -0.4).unwrap();
        let back = Direction::from_vector(d.unit_vector());
        assert!((back.azimuth() - d.azimuth()).abs() < 1e-12);
        assert!((back.elevation() - d.elevation()).abs() < 1e-12);
    }
}
