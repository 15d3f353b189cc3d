//! Transfer functions in the complex `s` plane and their inversion.
//!
//! Rational functions are inverted exactly by summing residues of `F(s) e^{st}`;
//! anything else goes through a numerical contour integral.

mod poles;
mod poly;
mod rational;
mod series;
mod talbot;

pub use poles::{Pole, PoleRecord, PoleSet, MERGE_RADIUS};
pub use poly::Poly;
pub use rational::{find_poles, invert_sor, RationalLaplace};
pub(crate) use rational::residue_sum;
pub(crate) use series::DelaySeries;

pub use talbot::{invert_numeric, GeneralLaplace, LaplaceFn, DIVERGENCE_TOLERANCE};

use crate::medium::{chi_laplace_at, MediumModel};
use num_complex::Complex64;

/// Half of the time axis a solution describes. All APIs take the elapsed time `|t| >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `t > 0`.
    Forward,
    /// `t < 0`.
    Backward,
}

impl Branch {
    /// `+1` forward, `-1` backward.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Forward => 1.0,
            Branch::Backward => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Forward => "forward",
            Branch::Backward => "backward",
        }
    }
}

/// A transform that is either an exact polynomial ratio or a callable.
#[derive(Debug, Clone)]
pub enum LaplaceFunction {
    Rational(RationalLaplace),
    General(GeneralLaplace),
}

impl LaplaceFunction {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        match self {
            LaplaceFunction::Rational(r) => r.eval(s),
            LaplaceFunction::General(g) => g.eval(s),
        }
    }

    pub fn as_rational(&self) -> Option<&RationalLaplace> {
        match self {
            LaplaceFunction::Rational(r) => Some(r),
            LaplaceFunction::General(_) => None,
        }
    }
}

/// Polynomial pieces of the cleared mode denominator.
///
/// `D(s) = s² + ω_q² + s²χ̃_e - ω_q²χ̃_m = characteristic / cleared`, with
/// `χ̃_e = N_e/D_e`, `χ̃_m = N_m/D_m`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ClearedDenominator {
    pub characteristic: Poly,
    pub cleared: Poly,
    pub ne: Poly,
    pub de: Poly,
    pub nm: Poly,
    pub dm: Poly,
}

pub(crate) fn cleared_denominator(medium: &MediumModel, omega_q: f64) -> Option<ClearedDenominator> {
    let (ne, de) = medium.chi_e.rational_parts()?;
    let (nm, dm) = medium.chi_m.rational_parts()?;
    let w2 = Poly::from_real(&[omega_q * omega_q]);
    let s2 = Poly::from_real(&[0.0, 0.0, 1.0]);
    let free = &s2 + &w2;
    let characteristic = &(&(&(&free * &de) * &dm) + &(&(&s2 * &ne) * &dm)) - &(&(&w2 * &nm) * &de);
    let cleared = &de * &dm;
    Some(ClearedDenominator { characteristic, cleared, ne, de, nm, dm })
}

/// Mode denominator `D(s)`: a ratio of polynomials whose numerator carries the mode poles
/// (common powers of `s` removed), or a callable for non-rational media.
pub fn mode_denominator(medium: &MediumModel, omega_q: f64) -> crate::Result<LaplaceFunction> {
    if !(omega_q > 0.0 && omega_q.is_finite()) {
        return Err(crate::error::invalid(format!("omega_q must be positive, got {omega_q}")));
    }
    if let Some(c) = cleared_denominator(medium, omega_q) {
        let k = c.characteristic.trailing_zeros().min(c.cleared.trailing_zeros());
        let num = c.characteristic.shift_down(k);
        let den = c.cleared.shift_down(k);
        return Ok(LaplaceFunction::Rational(RationalLaplace::new(num, den)?));
    }
    let m = medium.clone();
    let w2 = omega_q * omega_q;
    Ok(LaplaceFunction::General(GeneralLaplace::new(
        move |s| s * s * (1.0 + chi_laplace_at(&m.chi_e, s)) + w2 * (1.0 - chi_laplace_at(&m.chi_m, s)),
        0.0,
        omega_q,
    )))
}

/// Zeros of the mode denominator for a rational medium.
pub fn mode_poles(medium: &MediumModel, omega_q: f64) -> crate::Result<PoleSet> {
    match mode_denominator(medium, omega_q)? {
        LaplaceFunction::Rational(r) => PoleSet::find(r.numerator()),
        LaplaceFunction::General(_) => Err(crate::error::invalid("mode poles need a rational medium")),
    }
}
