use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Sub};

/// Truncated power series in `E = e^{-sδ}` with coefficients in `s`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DelaySeries(pub Vec<Complex64>);

impl DelaySeries {
    pub fn constant(c: Complex64, len: usize) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        v[0] = c;
        DelaySeries(v)
    }

    /// `c₀ + c₁E` padded to `len`.
    pub fn linear(c0: Complex64, c1: Complex64, len: usize) -> Self {
        let mut v = Self::constant(c0, len);
        if len > 1 {
            v.0[1] = c1;
        }
        v
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.0[n]
    }

    pub fn recip(&self) -> Self {
        let x = &self.0;
        let inv = 1.0 / x[0];
        let mut y = Vec::with_capacity(x.len());
        y.push(inv);
        for k in 1..x.len() {
            let acc: Complex64 = (1..=k).map(|j| x[j] * y[k - j]).sum();
            y.push(-inv * acc);
        }
        DelaySeries(y)
    }
}

impl Add for DelaySeries {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for DelaySeries {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul for DelaySeries {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        DelaySeries((0..a.len()).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect())
    }
}

impl Mul<Complex64> for DelaySeries {
    type Output = Self;
    fn mul(mut self, c: Complex64) -> Self {
        self.0.iter_mut().for_each(|a| *a *= c);
        self
    }
}

impl Div for DelaySeries {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}
