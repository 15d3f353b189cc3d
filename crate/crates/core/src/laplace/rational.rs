use super::poles::{Pole, PoleSet};
use super::poly::Poly;
use super::Branch;
use crate::error::{invalid, Error, Result};
use num_complex::Complex64;

/// Ratio of polynomials with an optional cached factorization of the denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalLaplace {
    num: Poly,
    den: Poly,
    poles: Option<PoleSet>,
}

impl RationalLaplace {
    /// Unfactored ratio; [`invert_sor`] refuses it until [`Self::factored`] is called.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(invalid("denominator is identically zero"));
        }
        Ok(RationalLaplace { num, den, poles: None })
    }

    /// Ratio with the denominator roots computed up front.
    pub fn factored(num: Poly, den: Poly) -> Result<Self> {
        Self::new(num, den)?.with_poles()
    }

    /// Ratio whose denominator is given directly in factored form.
    pub fn from_poles(num: Poly, poles: PoleSet) -> Self {
        RationalLaplace { num, den: poles.expand(), poles: Some(poles) }
    }

    pub fn with_poles(mut self) -> Result<Self> {
        if self.poles.is_none() {
            self.poles = Some(PoleSet::find(&self.den)?);
        }
        Ok(self)
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn poles(&self) -> Option<&PoleSet> {
        self.poles.as_ref()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }
}

/// Roots of the denominator of `f`.
pub fn find_poles(f: &RationalLaplace) -> Result<PoleSet> {
    match f.poles() {
        Some(p) => Ok(p.clone()),
        None => PoleSet::find(f.denominator()),
    }
}

/// Sum of residues of `f(s) e^{s t}` at `t >= 0`.
///
/// Both branches evaluate the same residue sum in the elapsed time `t = |t_signed|`;
/// the branch enters only through the numerators built by the caller. Impulsive terms
/// from a non-proper ratio are not represented.
pub fn invert_sor(f: &RationalLaplace, t: f64, _branch: Branch) -> Result<Complex64> {
    let poles = f.poles().ok_or(Error::PolesNotComputed)?;
    Ok(residue_sum(f.numerator(), poles, t))
}

pub(crate) fn residue_sum(num: &Poly, set: &PoleSet, t: f64) -> Complex64 {
    let poles = set.poles();
    let lead = set.lead();
    poles
        .iter()
        .enumerate()
        .map(|(j, pole)| residue(num, poles, j, pole, t) / lead)
        .sum()
}

fn residue(num: &Poly, poles: &[Pole], j: usize, pole: &Pole, t: f64) -> Complex64 {
    let p = pole.location;
    let m = pole.multiplicity;
    let ept = (p * t).exp();
    if m == 1 {
        let den: Complex64 = poles
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, q)| (p - q.location).powi(q.multiplicity as i32))
            .product();
        return num.eval(p) * ept / den;
    }
    // Coefficient of e^{m-1} in N(p+e) e^{(p+e)t} / prod (p + e - q)^{k}.
    let mut series = num.taylor(p, m);
    let mut exp_series = vec![Complex64::new(0.0, 0.0); m];
    let mut term = ept;
    for (k, slot) in exp_series.iter_mut().enumerate() {
        *slot = term;
        term *= t / (k + 1) as f64;
    }
    series = truncated_product(&series, &exp_series);
    for (i, q) in poles.iter().enumerate() {
        if i == j {
            continue;
        }
        let d = p - q.location;
        let k = q.multiplicity as f64;
        // (d + e)^{-k} = d^{-k} sum_n binom(-k, n) (e/d)^n
        let mut inv = vec![Complex64::new(0.0, 0.0); m];
        let mut c = d.powf(-k);
        for (n, slot) in inv.iter_mut().enumerate() {
            *slot = c;
            c *= -(k + n as f64) / ((n + 1) as f64 * d);
        }
        series = truncated_product(&series, &inv);
    }
    series[m - 1]
}

fn truncated_product(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let m = a.len();
    (0..m)
        .map(|n| (0..=n).map(|k| a[k] * b[n - k]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fwd(f: &RationalLaplace, t: f64) -> Complex64 {
        invert_sor(f, t, Branch::Forward).unwrap()
    }

    #[test]
    fn sine_pair() {
        let f = RationalLaplace::factored(Poly::from_real(&[1.0]), Poly::from_real(&[4.0, 0.0, 1.0])).unwrap();
        let v = fwd(&f, 1.0);
        assert!((v.re - (2.0f64).sin() / 2.0).abs() < 1e-15);
        assert!((v.re - 0.45465).abs() < 5e-6);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn cosine_pair_at_origin() {
        let f = RationalLaplace::factored(Poly::from_real(&[0.0, 1.0]), Poly::from_real(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(fwd(&f, 0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn double_pole_ramp() {
        let f = RationalLaplace::factored(Poly::from_real(&[1.0]), Poly::from_real(&[0.25, 1.0, 1.0])).unwrap();
        let v = fwd(&f, 2.0);
        assert!((v.re - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((v.re - 0.73576).abs() < 5e-6);
    }

    #[test]
    fn triple_pole_with_polynomial_numerator() {
        // (s + 2)/(s + 1)^3 -> e^{-t}(t + t^2/2)
        let poles = PoleSet::from_factors(Complex64::new(1.0, 0.0), &[Pole { location: Complex64::new(-1.0, 0.0), multiplicity: 3 }]).unwrap();
        let f = RationalLaplace::from_poles(Poly::from_real(&[2.0, 1.0]), poles);
        for t in [0.0, 0.7, 3.0] {
            let want = (-t as f64).exp() * (t + t * t / 2.0);
            assert!((fwd(&f, t).re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn unfactored_input_is_refused() {
        let f = RationalLaplace::new(Poly::from_real(&[1.0]), Poly::from_real(&[1.0, 1.0])).unwrap();
        assert_eq!(invert_sor(&f, 1.0, Branch::Forward), Err(Error::PolesNotComputed));
    }

    #[test]
    fn double_pole_mixed_with_simple_poles() {
        // 1/((s+1)^2 (s+3)) = e^{-3t}/4 + e^{-t}(t/2 - 1/4)
        let poles = PoleSet::from_factors(
            Complex64::new(1.0, 0.0),
            &[Pole { location: Complex64::new(-1.0, 0.0), multiplicity: 2 }, Pole::simple(Complex64::new(-3.0, 0.0))],
        )
        .unwrap();
        let f = RationalLaplace::from_poles(Poly::from_real(&[1.0]), poles);
        for t in [0.0, 0.5, 4.0] {
            let want = (-3.0 * t as f64).exp() / 4.0 + (-t as f64).exp() * (t / 2.0 - 0.25);
            assert!((fwd(&f, t).re - want).abs() < 1e-15);
        }
    }
}
