use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Dense 2×2 complex matrix stored row-major: `[m00, m01, m10, m11]`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Complex2x2(pub [C64; 4]);

impl Complex2x2 {
    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Complex2x2([m00, m01, m10, m11])
    }

    pub const fn from_real(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Complex2x2([
            C64::new(m00, 0.0),
            C64::new(m01, 0.0),
            C64::new(m10, 0.0),
            C64::new(m11, 0.0),
        ])
    }

    pub const fn zero() -> Self {
        Complex2x2([ZERO; 4])
    }

    pub const fn identity() -> Self {
        Complex2x2([ONE, ZERO, ZERO, ONE])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[2 * row + col]
    }

    #[inline]
    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.0;
        Complex2x2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        let [a, b, c, d] = self.0;
        Complex2x2([a * s, b * s, c * s, d * s])
    }

    #[inline]
    pub fn scale_c(&self, s: C64) -> Self {
        let [a, b, c, d] = self.0;
        Complex2x2([a * s, b * s, c * s, d * s])
    }

    /// `[self, other] = self·other − other·self`
    #[inline]
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigenvalues of the Hermitian part, ascending, by the closed-form quadratic.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0].re;
        let d = self.0[3].re;
        let b = 0.5 * (self.0[1] + self.0[2].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }
}

impl Add for Complex2x2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Complex2x2([a + e, b + f, c + g, d + h])
    }
}

impl AddAssign for Complex2x2 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        for (x, y) in self.0.iter_mut().zip(rhs.0) {
            *x += y;
        }
    }
}

impl Sub for Complex2x2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Complex2x2([a - e, b - f, c - g, d - h])
    }
}

impl Neg for Complex2x2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Complex2x2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Complex2x2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl Mul<f64> for Complex2x2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl Mul<C64> for Complex2x2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: C64) -> Self {
        self.scale_c(rhs)
    }
}

impl fmt::Debug for Complex2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "[[{a:.6}, {b:.6}], [{c:.6}, {d:.6}]]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_adjoint() {
        let a = Complex2x2::new(ONE, I, ZERO, ONE);
        let b = a.adjoint();
        assert_eq!(b, Complex2x2::new(ONE, ZERO, -I, ONE));
        let p = a * b;
        assert_eq!(p, Complex2x2::new(C64::new(2.0, 0.0), I, -I, ONE));
    }

    #[test]
    fn eigenvalues_of_diagonal_and_projector() {
        let m = Complex2x2::from_real(0.7, 0.0, 0.0, 0.3);
        let [lo, hi] = m.hermitian_eigenvalues();
        assert!((lo - 0.3).abs() < 1e-15 && (hi - 0.7).abs() < 1e-15);
        let plus = Complex2x2::from_real(0.5, 0.5, 0.5, 0.5);
        let [lo, hi] = plus.hermitian_eigenvalues();
        assert!(lo.abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }
}
