//! Quadrature and special-function helpers.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, q) = legendre_pair(n, z);
            let dz = p / (nf * (z * p - q) / (z * z - 1.0));
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (p, q) = legendre_pair(n, z);
        let dp = nf * (z * p - q) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_{n-1}(z))` by the three-term recurrence.
fn legendre_pair(n: usize, z: f64) -> (f64, f64) {
    let (mut p, mut q) = (1.0, 0.0);
    for j in 1..=n {
        let jf = j as f64;
        let r = ((2.0 * jf - 1.0) * z * p - (jf - 1.0) * q) / jf;
        q = p;
        p = r;
    }
    (p, q)
}

/// Exponential integral `E1(z)` for `z` off the negative real axis.
pub fn exp_integral_e1(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..200 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.norm() < 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        return -EULER_GAMMA - z.ln() - sum;
    }
    // Modified Lentz evaluation of the continued fraction.
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `∫_x^∞ sin(u)/u du` for `x >= 0`.
pub fn sine_integral_tail(x: f64) -> f64 {
    if x == 0.0 {
        return PI / 2.0;
    }
    -exp_integral_e1(Complex64::new(0.0, x)).im
}

/// Sine integral `Si(x)`.
pub fn sine_integral(x: f64) -> f64 {
    let si = PI / 2.0 - sine_integral_tail(x.abs());
    si.copysign(x)
}

/// `∫_w^∞ sin(a ω)/ω dω` for `w > 0`.
pub fn sine_over_omega_tail(a: f64, w: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    sine_integral_tail(a.abs() * w) * a.signum()
}

/// Relative change tolerated when the truncation horizon doubles.
pub const HORIZON_TOLERANCE: f64 = 1e-8;

/// `∫_0^∞ f(t) sin(ω t) dt` by half-period panels with Euler acceleration.
///
/// `horizon` is the time beyond which `f` is negligible or eventually
/// periodic-free; `breaks` (ascending) are points where `f` is not smooth and
/// panels are split there. The panel count starts at `max(32, ω·horizon/π)` and is doubled twice.
pub fn sine_transform<F: Fn(f64) -> f64>(f: &F, omega: f64, horizon: f64, breaks: &[f64]) -> Result<f64> {
    let half = PI / omega;
    let n0 = 32usize.max((horizon / half).ceil() as usize);
    let n_max = 4 * n0;
    let fscale = (0..=512)
        .map(|i| f(n_max as f64 * half * i as f64 / 512.0).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-14 * fscale * half;
    let mut terms = Vec::with_capacity(n_max);
    for k in 0..n_max {
        let a = k as f64 * half;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let g = |u: f64| f(a + u) * (omega * u).sin();
        let from = breaks.partition_point(|&b| b <= a);
        let to = breaks.partition_point(|&b| b < a + half);
        let mut lo = 0.0;
        let mut sum = 0.0;
        for &b in &breaks[from..to] {
            sum += adaptive_simpson(&g, lo, b - a, tol);
            lo = b - a;
        }
        sum += adaptive_simpson(&g, lo, half, tol);
        terms.push(sign * sum);
    }
    let v1 = euler_sum(&terms[..2 * n0]);
    let v2 = euler_sum(&terms);
    let floor = 1e-10 * fscale / omega;
    let change = (v2 - v1).abs() / v2.abs().max(floor);
    if !(change <= HORIZON_TOLERANCE) {
        return Err(Error::NonIntegrableKernel { omega, change });
    }
    Ok(v2)
}

/// Limit of the partial sums by repeated averaging of the trailing ones.
fn euler_sum(terms: &[f64]) -> f64 {
    let levels = 24.min(terms.len() - 1);
    let head = terms.len() - levels - 1;
    let mut partial = Vec::with_capacity(levels + 1);
    let mut s: f64 = terms[..head].iter().sum();
    for t in &terms[head..] {
        s += t;
        partial.push(s);
    }
    for _ in 0..levels {
        for i in 0..partial.len() - 1 {
            partial[i] = 0.5 * (partial[i] + partial[i + 1]);
        }
        partial.pop();
    }
    partial[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_integral_reference_values() {
        assert!((sine_integral(1.0) - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((sine_integral(PI) - 1.851_937_051_982_466).abs() < 1e-14);
        assert!((sine_integral(10.0) - 1.658_347_594_218_874).abs() < 1e-14);
        assert!((sine_integral(-2.0) + 1.605_412_976_802_695).abs() < 1e-14);
    }

    #[test]
    fn omega_tail_keeps_its_sign() {
        // Si(10) exceeds π/2, so the tail beyond 10 is negative
        for a in [0.2f64, -0.2, 0.05, -0.05] {
            let want = (PI / 2.0 - sine_integral(50.0 * a.abs())) * a.signum();
            assert!((sine_over_omega_tail(a, 50.0) - want).abs() < 1e-14, "{a}");
        }
        assert!(sine_over_omega_tail(0.2, 50.0) < 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let p12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((p12 - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_on_smooth_integrand() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-14);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn sine_transform_of_exponential() {
        // ∫ e^{-t} sin(2t) dt = 2/5
        let v = sine_transform(&|t: f64| (-t).exp(), 2.0, 40.0, &[]).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn constant_kernel_is_abel_summed() {
        let v = sine_transform(&|_t: f64| 0.2, 3.0, 0.0, &[]).unwrap();
        assert!((v - 0.2 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn growing_kernel_is_rejected() {
        let r = sine_transform(&|t: f64| (0.1 * t).exp(), 1.0, 10.0, &[]);
        assert!(matches!(r, Err(Error::NonIntegrableKernel { .. })));
    }
}
