//! Susceptibility kernels, their transforms and the derived coupling spectra.
//!
//! A kernel `χ(t)` is causal and vanishes for `t <= 0`. Its Laplace transform
//! `χ̃(s) = ∫ χ(t) e^{-st} dt` is rational for the zero, instantaneous, step and
//! Lorentz variants and is evaluated numerically otherwise.

mod coupling;
mod grid;
mod kk;
mod units;

pub use coupling::{ROUND_TRIP_TOLERANCE, chi_from_coupling, reconstruct_chi, round_trip_residual, coupling_from_chi, coupling_strength, numeric_coupling_strength, numeric_sine_transform, CouplingKind, CouplingSpectrum, DeltaPeak};
pub use grid::{FrequencyGrid, QuadratureRule};
pub use kk::{KK_TOLERANCE, KK_TOLERANCE_STEP, kk_check, kk_residuals, KkResiduals};
pub use units::UnitsSystem;

use crate::error::{invalid, Error, Result};
use crate::laplace::{Branch, GeneralLaplace, LaplaceFunction, Poly, RationalLaplace};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Uniformly sampled kernel: `χ(start + i·dt) = samples[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    start: f64,
    dt: f64,
    samples: Arc<[f64]>,
}

impl TabulatedKernel {
    pub const MIN_SAMPLES: usize = 8;

    /// Samples at `t = dt, 2dt, …, n·dt`.
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        Self::with_start(dt, dt, samples)
    }

    /// Samples at `t = start + i·dt`; `χ` holds `samples[0]` on `(0, start)`.
    pub fn with_start(start: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("tabulated dt must be positive, got {dt}")));
        }
        if !(start >= 0.0 && start.is_finite()) {
            return Err(invalid(format!("tabulated start must be non-negative, got {start}")));
        }
        if samples.len() < Self::MIN_SAMPLES {
            return Err(invalid(format!(
                "tabulated kernel needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tabulated samples must be finite"));
        }
        Ok(TabulatedKernel { start, dt, samples: samples.into() })
    }

    /// Builds a kernel from `(t, χ)` pairs on a uniform, strictly increasing grid.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.len() < Self::MIN_SAMPLES {
            return Err(invalid(format!("tabulated kernel needs at least {} samples", Self::MIN_SAMPLES)));
        }
        let dt = pairs[1].0 - pairs[0].0;
        for w in pairs.windows(2) {
            let step = w[1].0 - w[0].0;
            if !(step > 0.0) || (step - dt).abs() > 1e-9 * dt.abs().max(w[1].0.abs()) {
                return Err(invalid("tabulated time grid must be uniform and strictly increasing"));
            }
        }
        Self::with_start(pairs[0].0, dt, pairs.iter().map(|p| p.1).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of the first sample.
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn t_max(&self) -> f64 {
        self.start + (self.samples.len() - 1) as f64 * self.dt
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 || t > self.t_max() {
            return 0.0;
        }
        if t <= self.start {
            return self.samples[0];
        }
        let x = (t - self.start) / self.dt;
        let i = (x.floor() as usize).min(self.samples.len() - 2);
        let frac = x - i as f64;
        self.samples[i] + frac * (self.samples[i + 1] - self.samples[i])
    }

    fn laplace(&self, s: Complex64) -> Complex64 {
        let y = &self.samples;
        let mut total = y[0] * segment_moments(s, self.start).0;
        for i in 0..y.len() - 1 {
            let a = self.start + i as f64 * self.dt;
            let (m0, m1) = segment_moments(s, self.dt);
            total += (-s * a).exp() * (y[i] * m0 + (y[i + 1] - y[i]) / self.dt * m1);
        }
        total
    }
}

/// `(∫_0^h e^{-su} du, ∫_0^h u e^{-su} du)`.
fn segment_moments(s: Complex64, h: f64) -> (Complex64, Complex64) {
    let z = s * h;
    if z.norm() < 0.1 {
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..20 {
            m0 += p / (fact * (k + 1) as f64);
            m1 += p / (fact * (k + 2) as f64);
            p *= -z;
            fact *= (k + 1) as f64;
        }
        return (m0 * h, m1 * h * h);
    }
    let e = (-z).exp();
    ((1.0 - e) / s, (1.0 - e * (1.0 + z)) / (s * s))
}

/// Causal response kernel of the medium.
#[derive(Debug, Clone, PartialEq)]
pub enum SusceptibilityKernel {
    Zero,
    /// Memoryless response with constant `χ̃ = chi0`; the `Δ → 0` limit of `Box`.
    Instantaneous { chi0: f64 },
    /// `χ = chi0/delta` on `(0, delta)`.
    Box { chi0: f64, delta: f64 },
    /// `χ = beta` for `t > 0`.
    Step { beta: f64 },
    /// `χ = ω_p² e^{-γt/2} sin(ν₀t)/ν₀`, `ν₀² = ω₀² - γ²/4`.
    Lorentz { omega0: f64, gamma: f64, omega_p: f64 },
    Tabulated(TabulatedKernel),
}

impl SusceptibilityKernel {
    pub fn step(beta: f64) -> Result<Self> {
        let k = SusceptibilityKernel::Step { beta };
        k.validate()?;
        Ok(k)
    }

    pub fn lorentz(omega0: f64, gamma: f64, omega_p: f64) -> Result<Self> {
        let k = SusceptibilityKernel::Lorentz { omega0, gamma, omega_p };
        k.validate()?;
        Ok(k)
    }

    pub fn boxcar(chi0: f64, delta: f64) -> Result<Self> {
        let k = SusceptibilityKernel::Box { chi0, delta };
        k.validate()?;
        Ok(k)
    }

    /// Magnetic box kernel for a medium with static magnetic susceptibility `chi_m0`:
    /// the strength entering the wave equation is `chi_m0/(chi_m0 + 1)`.
    pub fn magnetic_box(chi_m0: f64, delta: f64) -> Result<Self> {
        Self::boxcar(magnetic_strength(chi_m0)?, delta)
    }

    /// Instantaneous limit of [`Self::magnetic_box`].
    pub fn magnetic_instantaneous(chi_m0: f64) -> Result<Self> {
        Ok(SusceptibilityKernel::Instantaneous { chi0: magnetic_strength(chi_m0)? })
    }

    pub fn validate(&self) -> Result<()> {
        use SusceptibilityKernel::*;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            Zero | Tabulated(_) => Ok(()),
            Instantaneous { chi0 } => {
                if chi0.is_finite() && chi0 > -1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("chi0 must exceed -1, got {chi0}")))
                }
            }
            Box { chi0, delta } => {
                positive("delta", delta)?;
                if chi0.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("chi0 must be finite"))
                }
            }
            Step { beta } => positive("beta", beta),
            Lorentz { omega0, gamma, omega_p } => {
                positive("omega0", omega0)?;
                positive("omega_p", omega_p)?;
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(invalid(format!("gamma must be non-negative, got {gamma}")));
                }
                if gamma >= 2.0 * omega0 {
                    return Err(invalid(format!("gamma = {gamma} must be below 2*omega0 = {}", 2.0 * omega0)));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SusceptibilityKernel::Zero)
    }

    /// `(N, D)` with `χ̃ = N/D`, when the transform is rational.
    pub fn rational_parts(&self) -> Option<(Poly, Poly)> {
        use SusceptibilityKernel::*;
        match *self {
            Zero => Some((Poly::zero(), Poly::from_real(&[1.0]))),
            Instantaneous { chi0 } => Some((Poly::from_real(&[chi0]), Poly::from_real(&[1.0]))),
            Step { beta } => Some((Poly::from_real(&[beta]), Poly::s())),
            Lorentz { omega0, gamma, omega_p } => Some((
                Poly::from_real(&[omega_p * omega_p]),
                Poly::from_real(&[omega0 * omega0, gamma, 1.0]),
            )),
            Box { .. } | Tabulated(_) => None,
        }
    }

    /// Time after which the kernel is negligible, used to size numerical transforms.
    pub(crate) fn horizon(&self) -> f64 {
        use SusceptibilityKernel::*;
        match self {
            Zero | Instantaneous { .. } | Step { .. } => 0.0,
            Box { delta, .. } => *delta,
            Lorentz { gamma, .. } if *gamma > 0.0 => 40.0 / gamma,
            Lorentz { .. } => f64::INFINITY,
            Tabulated(t) => t.t_max(),
        }
    }

    /// Times where `χ` or its slope is not smooth.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        use SusceptibilityKernel::*;
        match self {
            Box { delta, .. } => vec![*delta],
            Tabulated(t) => (0..t.samples.len()).map(|i| t.start + i as f64 * t.dt).collect(),
            _ => Vec::new(),
        }
    }

    /// Discontinuities `(t, χ(t+) - χ(t-))` of the kernel on `t >= 0`.
    pub(crate) fn jumps(&self) -> Vec<(f64, f64)> {
        use SusceptibilityKernel::*;
        match self {
            Zero | Instantaneous { .. } | Lorentz { .. } => Vec::new(),
            Step { beta } => vec![(0.0, *beta)],
            Box { chi0, delta } => vec![(0.0, chi0 / delta), (*delta, -chi0 / delta)],
            Tabulated(t) => vec![(0.0, t.samples[0]), (t.t_max(), -t.samples[t.samples.len() - 1])],
        }
    }
}

fn magnetic_strength(chi_m0: f64) -> Result<f64> {
    if !(chi_m0.is_finite() && chi_m0 > -1.0) {
        return Err(invalid(format!("chi_m0 must exceed -1, got {chi_m0}")));
    }
    Ok(chi_m0 / (chi_m0 + 1.0))
}

/// Electric and magnetic kernels of one homogeneous medium.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumModel {
    pub chi_e: SusceptibilityKernel,
    pub chi_m: SusceptibilityKernel,
    pub units: UnitsSystem,
}

impl MediumModel {
    pub fn new(chi_e: SusceptibilityKernel, chi_m: SusceptibilityKernel, units: UnitsSystem) -> Result<Self> {
        chi_e.validate()?;
        chi_m.validate()?;
        Ok(MediumModel { chi_e, chi_m, units })
    }

    pub fn vacuum() -> Self {
        MediumModel {
            chi_e: SusceptibilityKernel::Zero,
            chi_m: SusceptibilityKernel::Zero,
            units: UnitsSystem::default(),
        }
    }

    /// Non-magnetic medium with the given electric kernel.
    pub fn electric(chi_e: SusceptibilityKernel) -> Result<Self> {
        Self::new(chi_e, SusceptibilityKernel::Zero, UnitsSystem::default())
    }

    pub fn is_vacuum(&self) -> bool {
        self.chi_e.is_zero() && self.chi_m.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.chi_e.rational_parts().is_some() && self.chi_m.rational_parts().is_some()
    }
}

/// `χ(t)`, zero for `t <= 0`.
///
/// The instantaneous variant has no regular part and returns 0 everywhere.
pub fn chi_time(kernel: &SusceptibilityKernel, t: f64) -> f64 {
    use SusceptibilityKernel::*;
    if t <= 0.0 {
        return 0.0;
    }
    match kernel {
        Zero | Instantaneous { .. } => 0.0,
        Box { chi0, delta } => {
            if t < *delta {
                chi0 / delta
            } else {
                0.0
            }
        }
        Step { beta } => *beta,
        Lorentz { omega0, gamma, omega_p } => {
            let nu0 = (omega0 * omega0 - gamma * gamma / 4.0).sqrt();
            omega_p * omega_p * (-gamma * t / 2.0).exp() * (nu0 * t).sin() / nu0
        }
        Tabulated(tab) => tab.eval(t),
    }
}

/// Laplace transform `χ̃(s)`.
pub fn chi_laplace(kernel: &SusceptibilityKernel) -> LaplaceFunction {
    use SusceptibilityKernel::*;
    match kernel {
        Box { chi0, delta } => {
            let k = chi0 / delta;
            LaplaceFunction::General(
                GeneralLaplace::new(move |s| k / s, 0.0, 1.0 / delta).with_delayed(*delta, move |s| -k / s),
            )
        }
        Tabulated(tab) => {
            let tab = tab.clone();
            let scale = PI / tab.dt;
            LaplaceFunction::General(GeneralLaplace::new(move |s| tab.laplace(s), 0.0, scale))
        }
        _ => {
            let (n, d) = kernel.rational_parts().expect("rational variant");
            LaplaceFunction::Rational(RationalLaplace::factored(n, d).expect("kernel denominators have degree <= 2"))
        }
    }
}

/// Evaluates `χ̃(s)` directly, including the non-rational variants.
pub fn chi_laplace_at(kernel: &SusceptibilityKernel, s: Complex64) -> Complex64 {
    use SusceptibilityKernel::*;
    match kernel {
        Box { chi0, delta } => {
            let z = s * *delta;
            if z.norm() < 1e-4 {
                // (1 - e^{-z})/z = 1 - z/2 + z²/6 - z³/24
                *chi0 * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
            } else {
                *chi0 * (1.0 - (-z).exp()) / z
            }
        }
        Tabulated(tab) => tab.laplace(s),
        _ => {
            let (n, d) = kernel.rational_parts().expect("rational variant");
            n.eval(s) / d.eval(s)
        }
    }
}

/// Evaluation point `s = ∓iω` of a branch.
pub fn axis_point(omega: f64, branch: Branch) -> Complex64 {
    Complex64::new(0.0, -branch.sign() * omega)
}

/// `χ̃(∓iω)`, refusing evaluation on an imaginary-axis pole.
pub fn chi_on_axis(kernel: &SusceptibilityKernel, omega: f64, branch: Branch) -> Result<Complex64> {
    let s = axis_point(omega, branch);
    if let Some((n, d)) = kernel.rational_parts() {
        let den = d.eval(s);
        if den.norm() < 1e-12 {
            return Err(Error::PoleOnAxis { re: s.re, im: s.im });
        }
        return Ok(n.eval(s) / den);
    }
    Ok(chi_laplace_at(kernel, s))
}

/// Relative permittivity `1 + χ̃_e(∓iω)`.
pub fn permittivity(medium: &MediumModel, omega: f64, branch: Branch) -> Result<Complex64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid(format!("omega must be positive, got {omega}")));
    }
    Ok(1.0 + chi_on_axis(&medium.chi_e, omega, branch)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::invert_numeric;

    fn lorentz(gamma: f64) -> SusceptibilityKernel {
        SusceptibilityKernel::lorentz(1.0, gamma, 0.5).unwrap()
    }

    #[test]
    fn chi_time_examples() {
        assert_eq!(chi_time(&SusceptibilityKernel::Zero, 1.0), 0.0);
        assert!((chi_time(&lorentz(0.0), PI / 2.0) - 0.25).abs() < 1e-15);
        let b = SusceptibilityKernel::boxcar(3.0, 0.5).unwrap();
        assert_eq!(chi_time(&b, 0.25), 6.0);
        assert_eq!(chi_time(&b, 0.75), 0.0);
    }

    #[test]
    fn chi_laplace_examples() {
        let v = chi_laplace(&lorentz(0.1)).eval(Complex64::new(0.0, 1.0));
        assert!((v - Complex64::new(0.0, -2.5)).norm() < 1e-13);
        let v = chi_laplace(&SusceptibilityKernel::step(0.2).unwrap()).eval(Complex64::new(2.0, 0.0));
        assert!((v - 0.1).norm() < 1e-16);
        assert_eq!(chi_laplace(&SusceptibilityKernel::Zero).eval(Complex64::new(0.3, 2.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn box_transform_inverts_to_the_plateau() {
        let b = SusceptibilityKernel::boxcar(3.0, 0.5).unwrap();
        let LaplaceFunction::General(g) = chi_laplace(&b) else { panic!("box is not rational") };
        assert!((invert_numeric(&g, 0.25).unwrap().re - 6.0).abs() < 1e-6);
        let s = Complex64::new(0.7, 1.3);
        assert!((g.eval(s) - chi_laplace_at(&b, s)).norm() < 1e-13);
    }

    #[test]
    fn tabulated_transform_matches_quadrature() {
        let samples: Vec<f64> = (1..=40).map(|i| (-(i as f64) * 0.05).exp()).collect();
        let tab = TabulatedKernel::new(0.05, samples).unwrap();
        let k = SusceptibilityKernel::Tabulated(tab);
        for s in [Complex64::new(0.5, 0.0), Complex64::new(0.2, 3.0), Complex64::new(0.0, 40.0)] {
            let re = crate::quad::adaptive_simpson(&|t: f64| chi_time(&k, t) * (-s * t).exp().re, 0.0, 2.0, 1e-13);
            let im = crate::quad::adaptive_simpson(&|t: f64| chi_time(&k, t) * (-s * t).exp().im, 0.0, 2.0, 1e-13);
            assert!((chi_laplace_at(&k, s) - Complex64::new(re, im)).norm() < 1e-9);
        }
    }

    #[test]
    fn tabulated_interpolation_and_support() {
        let tab = TabulatedKernel::new(0.5, (1..=8).map(|i| i as f64).collect()).unwrap();
        let k = SusceptibilityKernel::Tabulated(tab);
        assert_eq!(chi_time(&k, 0.0), 0.0);
        assert_eq!(chi_time(&k, 0.2), 1.0);
        assert!((chi_time(&k, 0.75) - 1.5).abs() < 1e-15);
        assert_eq!(chi_time(&k, 4.0), 8.0);
        assert_eq!(chi_time(&k, 4.01), 0.0);
    }

    #[test]
    fn tabulated_validation() {
        assert!(TabulatedKernel::new(0.1, vec![1.0; 7]).is_err());
        assert!(TabulatedKernel::new(-0.1, vec![1.0; 8]).is_err());
        let pairs: Vec<(f64, f64)> = (0..8).map(|i| (i as f64 * 0.1, 1.0)).collect();
        assert!(TabulatedKernel::from_pairs(&pairs).is_ok());
        let mut bad = pairs.clone();
        bad[3].0 += 0.01;
        assert!(TabulatedKernel::from_pairs(&bad).is_err());
    }

    #[test]
    fn lorentz_rejects_overdamping() {
        assert!(SusceptibilityKernel::lorentz(1.0, 2.0, 0.5).is_err());
        assert!(SusceptibilityKernel::lorentz(1.0, 1.99, 0.5).is_ok());
    }

    #[test]
    fn permittivity_examples() {
        let m = MediumModel::electric(lorentz(0.1)).unwrap();
        let fwd = permittivity(&m, 1.0, Branch::Forward).unwrap();
        let bwd = permittivity(&m, 1.0, Branch::Backward).unwrap();
        assert!((fwd - Complex64::new(1.0, 2.5)).norm() < 1e-12);
        assert!((bwd - Complex64::new(1.0, -2.5)).norm() < 1e-12);
        let low = permittivity(&m, 1e-9, Branch::Forward).unwrap();
        assert!((low - 1.25).norm() < 1e-9);
        assert_eq!(permittivity(&MediumModel::vacuum(), 3.0, Branch::Forward).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn lossless_resonance_is_refused() {
        let m = MediumModel::electric(lorentz(0.0)).unwrap();
        assert!(matches!(permittivity(&m, 1.0, Branch::Forward), Err(Error::PoleOnAxis { .. })));
    }

    #[test]
    fn magnetic_box_strength() {
        let k = SusceptibilityKernel::magnetic_box(1.0, 0.1).unwrap();
        assert_eq!(k, SusceptibilityKernel::Box { chi0: 0.5, delta: 0.1 });
    }
}
