//! Dense complex matrix kernel.
//!
//! Only what the simulator needs: products, Hermitian transpose, a thin SVD
//! (one-sided Jacobi) and the Moore-Penrose pseudo-inverse built on top of it.
//! Matrices are stored row-major.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use thiserror::Error;

/// Sweep cap for the Jacobi iteration. Typical inputs converge in 6-12 sweeps.
const MAX_SWEEPS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {op} on {lhs:?} and {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("entries length {len} does not match {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("SVD did not converge after {sweeps} Jacobi sweeps")]
    NoConvergence { sweeps: usize },
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Matrix whose columns are the given vectors (all of equal length).
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self::from_fn(rows, cols, |i, j| columns[j][i])
    }

    /// Outer product `a · bᴴ`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[Complex64]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermitian(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                lhs: self.shape(),
                rhs: (v.len(), 1),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "sub",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| self[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Thin singular value decomposition `self = U · diag(S) · Vᴴ`.
    pub fn svd(&self) -> Result<Svd, LinalgError> {
        svd(self)
    }

    pub fn pinv(&self) -> Result<Self, LinalgError> {
        pinv(self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on mismatched shapes; use [`ComplexMatrix::matmul`] for the checked form.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

/// Unconjugated sum `Σ a_i b_i`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hermitian inner product `aᴴ b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Thin SVD factors. For an `m×n` input with `k = min(m, n)`:
/// `u` is `m×k`, `s` has length `k` (descending), `v` is `n×k`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for j in 0..us.cols() {
            for i in 0..us.rows() {
                us[(i, j)] *= self.s[j];
            }
        }
        &us * &self.v.hermitian()
    }

    /// Number of singular values above `rtol · s_max`.
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&s| s > rtol * smax && s > 0.0).count()
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if m.rows >= m.cols {
        let (u, s, v) = jacobi_tall(m)?;
        Ok(Svd { u, s, v })
    } else {
        // A = (Aᴴ)ᴴ = (U' S V'ᴴ)ᴴ = V' S U'ᴴ
        let (u, s, v) = jacobi_tall(&m.hermitian())?;
        Ok(Svd { u: v, s, v: u })
    }
}

/// One-sided (Hestenes) Jacobi on a matrix with `rows >= cols`.
fn jacobi_tall(
    m: &ComplexMatrix,
) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix), LinalgError> {
    let (rows, n) = m.shape();
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let frob = m.frobenius_norm();
    // columns whose squared norm falls below this are numerically zero
    let floor = (f64::EPSILON * frob).powi(2);
    let tol = f64::EPSILON * (rows as f64).sqrt();

    let mut norms: Vec<f64> = a.iter().map(|c| norm_sqr(c)).collect();
    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = inner(&a[p], &a[q]);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
                norms[p] = norm_sqr(&a[p]);
                norms[q] = norm_sqr(&a[q]);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigma: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let smax = order.first().map_or(0.0, |&i| sigma[i]);
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let sj = sigma[j];
        if sj > 0.0 && sj > f64::EPSILON * smax {
            u_cols.push(a[j].iter().map(|z| z / sj).collect());
        } else {
            u_cols.push(Vec::new());
            missing.push(slot);
        }
        s.push(sj);
        v_cols.push(v[j].clone());
    }
    complete_orthonormal(&mut u_cols, &missing, rows);

    Ok((
        ComplexMatrix::from_columns(&u_cols),
        s,
        ComplexMatrix::from_columns(&v_cols),
    ))
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Applies `[a_p a_q] ← [a_p a_q] · [[c, s·φ], [-s·φ*, c]]`.
fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    let sp = phase * s;
    let sc = phase.conj() * s;
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = xp * c - sc * yq;
        *y = sp * xp + yq * c;
    }
}

/// Fills the empty slots of `cols` with unit vectors orthogonal to every other column.
fn complete_orthonormal(cols: &mut [Vec<Complex64>], missing: &[usize], len: usize) {
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < len, "cannot complete orthonormal basis");
            let mut e = vec![Complex64::new(0.0, 0.0); len];
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = inner(other, &e);
                    for (ei, oi) in e.iter_mut().zip(other) {
                        *ei -= proj * oi;
                    }
                }
            }
            let nrm = norm(&e);
            if nrm > 1e-8 {
                cols[slot] = e.into_iter().map(|z| z / nrm).collect();
                break;
            }
        }
    }
}

/// Relative cutoff for treating singular values as zero in [`pinv`].
pub fn pinv_rtol(rows: usize, cols: usize) -> f64 {
    1e-12 * rows.max(cols) as f64
}

/// Moore-Penrose pseudo-inverse. Singular values at or below
/// `1e-12 · max(rows, cols) · s_max` are discarded.
pub fn pinv(m: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let Svd { u, s, v } = svd(m)?;
    let cutoff = pinv_rtol(m.rows, m.cols) * s.first().copied().unwrap_or(0.0);
    // V · diag(1/s) · Uᴴ
    let mut vs = v;
    for (j, &sj) in s.iter().enumerate() {
        let inv = if sj > cutoff && sj > 0.0 { 1.0 / sj } else { 0.0 };
        for i in 0..vs.rows() {
            vs[(i, j)] *= inv;
        }
    }
    vs.matmul(&u.hermitian())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    fn assert_orthonormal_columns(m: &ComplexMatrix, tol: f64) {
        let gram = &m.hermitian() * m;
        let err = rel_err(&gram, &ComplexMatrix::identity(m.cols()));
        assert!(err < tol, "columns not orthonormal: {err}");
    }

    #[test]
    fn hermitian_examples() {
        assert_eq!(ComplexMatrix::identity(3).hermitian(), ComplexMatrix::identity(3));
        let m = ComplexMatrix::from_vec(1, 1, vec![c(0.0, 1.0)]).unwrap();
        assert_eq!(m.hermitian()[(0, 0)], c(0.0, -1.0));
        let r = random(3, 2, 1);
        assert_eq!(r.hermitian().hermitian(), r);
        assert_eq!(r.hermitian().shape(), (2, 3));
    }

    #[test]
    fn product_hermitian_reverses_order() {
        let a = random(3, 4, 2);
        let b = random(4, 2, 3);
        let lhs = (&a * &b).hermitian();
        let rhs = &b.hermitian() * &a.hermitian();
        assert!(rel_err(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(matches!(
            ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.0)]),
            Err(LinalgError::BadShape { .. })
        ));
        assert_eq!(
            ComplexMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(LinalgError::NonFinite)
        );
    }

    #[test]
    fn matmul_shape_mismatch() {
        let err = random(2, 3, 0).matmul(&random(2, 3, 1)).unwrap_err();
        assert!(matches!(err, LinalgError::DimensionMismatch { .. }));
    }

    #[test]
    fn svd_of_diagonal() {
        let d = ComplexMatrix::diag(&[1.0, 3.0]);
        let svd = d.svd().unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-14);
        assert!((svd.s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_of_rank_one_outer_product() {
        let a = vec![c(1.0, 1.0), c(0.0, -2.0), c(0.5, 0.0)];
        let b = vec![c(2.0, 0.0), c(0.0, 1.0)];
        let m = ComplexMatrix::outer(&a, &b);
        let svd = m.svd().unwrap();
        assert!((svd.s[0] - norm(&a) * norm(&b)).abs() < 1e-12);
        assert!(svd.s[1].abs() < 1e-12);
        assert_orthonormal_columns(&svd.u, 1e-12);
        assert_orthonormal_columns(&svd.v, 1e-12);
        assert!(rel_err(&svd.reconstruct(), &m) < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        for (rows, cols, seed) in [(4, 3, 7), (3, 4, 8), (16, 16, 9), (8, 40, 10), (1, 5, 11)] {
            let m = random(rows, cols, seed);
            let svd = m.svd().unwrap();
            assert!(rel_err(&svd.reconstruct(), &m) < 1e-9, "{rows}x{cols}");
            assert_orthonormal_columns(&svd.u, 1e-10);
            assert_orthonormal_columns(&svd.v, 1e-10);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            assert!(svd.s.iter().all(|&s| s >= 0.0));
        }
    }

    #[test]
    fn svd_of_zero_matrix_has_orthonormal_factors() {
        let svd = ComplexMatrix::zeros(3, 2).svd().unwrap();
        assert_eq!(svd.s, vec![0.0, 0.0]);
        assert_orthonormal_columns(&svd.u, 1e-12);
        assert_orthonormal_columns(&svd.v, 1e-12);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = c(f64::INFINITY, 0.0);
        assert_eq!(m.svd().unwrap_err(), LinalgError::NonFinite);
    }

    #[test]
    fn pinv_examples() {
        let id = ComplexMatrix::identity(2);
        assert!(rel_err(&id.pinv().unwrap(), &id) < 1e-15);
        let d = ComplexMatrix::diag(&[2.0, 4.0]);
        assert!(rel_err(&d.pinv().unwrap(), &ComplexMatrix::diag(&[0.5, 0.25])) < 1e-15);
    }

    #[test]
    fn pinv_drops_tiny_singular_values() {
        let d = ComplexMatrix::diag(&[1.0, 1e-14]);
        let p = d.pinv().unwrap();
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-15);
        assert_eq!(p[(1, 1)], c(0.0, 0.0));
    }
}
