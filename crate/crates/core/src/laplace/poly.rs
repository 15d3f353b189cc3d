use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Polynomial in `s` with complex coefficients stored in ascending degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(Vec<Complex64>);

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Poly(coeffs);
        p.trim();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    /// `s - root`.
    pub fn linear(root: Complex64) -> Self {
        Self::new(vec![-root, Complex64::new(1.0, 0.0)])
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| *c == ZERO) {
            self.0.pop();
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.0.last().copied().unwrap_or(ZERO)
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|c| c.im == 0.0)
    }

    /// True when every odd-degree coefficient is exactly zero.
    pub fn is_even(&self) -> bool {
        self.0.iter().skip(1).step_by(2).all(|c| *c == ZERO)
    }

    /// Number of exactly vanishing low-order coefficients.
    pub fn trailing_zeros(&self) -> usize {
        self.0.iter().take_while(|c| **c == ZERO).count()
    }

    /// Divides by `s^k`, dropping the `k` lowest coefficients.
    pub fn shift_down(&self, k: usize) -> Self {
        Self::new(self.0.iter().skip(k).copied().collect())
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.0.iter().rev().fold(ZERO, |acc, &c| acc * s + c)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.0.iter().map(|&c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// First `m` Taylor coefficients of `p(center + e)` in powers of `e`.
    pub fn taylor(&self, center: Complex64, m: usize) -> Vec<Complex64> {
        let mut work = self.0.clone();
        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            if work.is_empty() {
                out.push(ZERO);
                continue;
            }
            // Synthetic division by (s - center): remainder is the next coefficient.
            let mut rem = ZERO;
            let mut quot = vec![ZERO; work.len().saturating_sub(1)];
            for i in (0..work.len()).rev() {
                let v = work[i] + rem * center;
                if i > 0 {
                    quot[i - 1] = v;
                }
                rem = v;
            }
            out.push(rem);
            work = quot;
        }
        out
    }

    /// Polynomial with roots `s -> u` where `u = s^2`, valid for even polynomials.
    pub(crate) fn even_part_in_square(&self) -> Self {
        Self::new(self.0.iter().step_by(2).copied().collect())
    }

    /// Expands `lead * prod (s - r)^m`.
    pub fn from_roots(lead: Complex64, roots: &[(Complex64, usize)]) -> Self {
        let mut p = Poly::constant(lead);
        for &(r, m) in roots {
            for _ in 0..m {
                p = &p * &Poly::linear(r);
            }
        }
        p
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        let c = (0..n)
            .map(|i| self.0.get(i).copied().unwrap_or(ZERO) + rhs.0.get(i).copied().unwrap_or(ZERO))
            .collect();
        Poly::new(c)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.0.iter().map(|c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![ZERO; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}
