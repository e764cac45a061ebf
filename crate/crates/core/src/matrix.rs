//! Dense complex matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default absolute tolerance for equality and unitarity checks.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// A dense complex matrix stored row-major.
///
/// Rows index output modes and columns index input modes whenever the matrix
/// describes an interferometer.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(alloc::format!(
                "{} entries given for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Permutation matrix sending column `j` to row `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut m = Self::zeros(n, n);
        for (j, &i) in perm.iter().enumerate() {
            if i >= n {
                return Err(Error::Bounds { index: i, dim: n });
            }
            if seen[i] {
                return Err(Error::validation("permutation repeats an index"));
            }
            seen[i] = true;
            m.data[i * n + j] = C64::new(1.0, 0.0);
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, z: C64) {
        self.data[r * self.cols + c] = z;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [C64] {
        let cols = self.cols;
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Standard matrix product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape(alloc::format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(i);
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Submatrix `out[i][j] = self[rows[i]][cols[j]]`.
    ///
    /// Indices may repeat, which is how bunched Fock occupations are encoded.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::shape(alloc::format!(
                "row and column index lists differ in length ({} vs {})",
                rows.len(),
                cols.len()
            )));
        }
        for &r in rows {
            if r >= self.rows {
                return Err(Error::Bounds {
                    index: r,
                    dim: self.rows,
                });
            }
        }
        for &c in cols {
            if c >= self.cols {
                return Err(Error::Bounds {
                    index: c,
                    dim: self.cols,
                });
            }
        }
        Ok(Self::from_fn(rows.len(), cols.len(), |i, j| {
            self.get(rows[i], cols[j])
        }))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape("matrices differ in shape"));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Max-norm of `U†U - I`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::shape("unitarity is only defined for square matrices"));
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                if i == j {
                    acc -= C64::new(1.0, 0.0);
                }
                worst = worst.max(acc.norm());
            }
        }
        Ok(worst)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        matches!(self.unitarity_defect(), Ok(d) if d <= tol)
    }

    /// Fails with a validation error unless the matrix is unitary within `tol`.
    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let d = self.unitarity_defect()?;
        if d <= tol {
            Ok(())
        } else {
            Err(Error::validation(alloc::format!(
                "matrix is not unitary: max |U†U - I| = {d:.3e} exceeds {tol:.1e}"
            )))
        }
    }

    /// Entrywise squared moduli, row-major.
    pub fn abs_squared(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    /// FNV-1a hash of the entry bit patterns, used to tag distributions with
    /// the matrix that produced them.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.rows as u64);
        eat(self.cols as u64);
        for z in &self.data {
            eat(z.re.to_bits());
            eat(z.im.to_bits());
        }
        h
    }
}

/// Similarity `|Tr(U†V)| / m` between two square matrices of equal size.
///
/// Equals 1 for identical unitaries and is blind to a global phase on either
/// argument.
pub fn fidelity(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    if !u.is_square() || !v.is_square() || u.rows != v.rows {
        return Err(Error::shape(alloc::format!(
            "fidelity needs two square matrices of equal size, got {}x{} and {}x{}",
            u.rows,
            u.cols,
            v.rows,
            v.cols
        )));
    }
    let mut tr = C64::new(0.0, 0.0);
    for (a, b) in u.data.iter().zip(&v.data) {
        tr += a.conj() * b;
    }
    Ok(tr.norm() / u.rows as f64)
}

/// Draws a Haar-random `m x m` unitary.
///
/// A complex Gaussian matrix is orthonormalized column by column
/// (Gram-Schmidt, applied twice); the triangular factor then has a positive
/// real diagonal, which is the phase fixing that makes the result Haar.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..m)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
                })
                .collect()
        })
        .collect();
    for j in 0..m {
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[k];
                let v = &mut rest[0];
                let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    ComplexMatrix::from_fn(m, m, |r, c| cols[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn hadamard() -> ComplexMatrix {
        let s = FRAC_1_SQRT_2;
        ComplexMatrix::new(2, 2, vec![c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)]).unwrap()
    }

    fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seed::rng_for(seed, 0, 0);
        ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_times_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.multiply(&i2).unwrap(), i2);
    }

    #[test]
    fn hadamard_is_an_involution() {
        let h = hadamard();
        let hh = h.multiply(&h).unwrap();
        assert!(hh.max_abs_diff(&ComplexMatrix::identity(2)).unwrap() < 1e-15);
    }

    #[test]
    fn product_matches_triple_loop() {
        let a = random_matrix(3, 1);
        let b = random_matrix(3, 2);
        let mut naive = ComplexMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = c(0., 0.);
                for k in 0..3 {
                    acc += a.get(i, k) * b.get(k, j);
                }
                naive.set(i, j, acc);
            }
        }
        assert!(a.multiply(&b).unwrap().max_abs_diff(&naive).unwrap() < 1e-13);
    }

    #[test]
    fn multiply_rejects_mismatched_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.multiply(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn new_rejects_bad_entry_count() {
        assert!(ComplexMatrix::new(2, 2, vec![c(1., 0.); 3]).is_err());
        assert!(ComplexMatrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn submatrix_of_identity() {
        let i4 = ComplexMatrix::identity(4);
        assert_eq!(i4.submatrix(&[0, 1], &[0, 1]).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn submatrix_repeats_rows() {
        let u = random_matrix(4, 9);
        let s = u.submatrix(&[2, 2], &[0, 3]).unwrap();
        assert_eq!(s.row(0), s.row(1));
        let p = crate::permanent::permanent(&s).unwrap();
        let expect = u.get(2, 0) * u.get(2, 3) * 2.0;
        assert!((p - expect).norm() < 1e-14);
    }

    #[test]
    fn submatrix_bounds_and_shape_errors() {
        let u = ComplexMatrix::identity(3);
        assert_eq!(
            u.submatrix(&[0, 3], &[0, 1]),
            Err(Error::Bounds { index: 3, dim: 3 })
        );
        assert!(matches!(u.submatrix(&[0], &[0, 1]), Err(Error::Shape(_))));
    }

    #[test]
    fn fidelity_edge_cases() {
        let h = hadamard();
        assert!((fidelity(&h, &h).unwrap() - 1.0).abs() < 1e-15);
        let phased = h.scale(C64::from_polar(1.0, 0.7));
        assert!((fidelity(&h, &phased).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&ComplexMatrix::identity(2), &h).unwrap().abs() < 1e-15);
        assert!(fidelity(&h, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = seed::rng_for(3, seed::stream::HAAR, 0);
        for m in 1..8 {
            let u = haar_unitary(m, &mut rng);
            assert!(u.unitarity_defect().unwrap() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn product_of_unitaries_stays_unitary() {
        let mut rng = seed::rng_for(4, seed::stream::HAAR, 0);
        for _ in 0..10 {
            let a = haar_unitary(5, &mut rng);
            let b = haar_unitary(5, &mut rng);
            assert!(a.multiply(&b).unwrap().is_unitary(UNITARY_TOLERANCE));
        }
    }

    #[test]
    fn permutation_matrix_rejects_repeats() {
        assert!(ComplexMatrix::permutation(&[0, 0]).is_err());
        let p = ComplexMatrix::permutation(&[1, 2, 0]).unwrap();
        assert_eq!(p.get(1, 0), c(1., 0.));
        assert!(p.is_unitary(0.0));
    }
}
