//! Time-domain mode kernels.
//!
//! Every kernel is the inverse transform of a ratio over the mode denominator
//! `D(s) = s²(1 + χ̃_e) + ω_q²(1 - χ̃_m)`:
//!
//! | kernel | transform (forward, `s + iω_k`; backward, `s - iω_k`) |
//! |--------|-----------------------------------------------------|
//! | `r`    | `s(1 + χ̃_e) / D` |
//! | `h`    | `1 / D` |
//! | `Z`    | `[s(1 + χ̃_e) ∓ iω_q] / D` |
//! | `ξ`    | `1 / ((s ± iω_k) D)` |
//! | `ζ`    | `f(ω_k) s / ((s ± iω_k) D)` |
//! | `η`    | `g(ω_k) / ((s ± iω_k) D)` |
//! | `Q`    | `1 / ((1 + χ̃_e)(s ± iω_k))` |
//!
//! Rational media are inverted by residues over the cleared polynomial
//! `P = D·D_e·D_m`. Media with tabulated kernels are integrated in time as
//! delay equations; the remaining ones go through the numerical contour.

mod stepped;

use crate::error::{invalid, Error, Result};
use crate::laplace::{
    cleared_denominator, invert_numeric, residue_sum, Branch, ClearedDenominator, DelaySeries, GeneralLaplace, PoleSet,
    Poly,
};
use crate::medium::{chi_laplace_at, coupling_strength, MediumModel, SusceptibilityKernel};
use crate::report::CheckReport;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};
use stepped::{ModeSample, Stepper};

/// Step of the central differences used by [`kernel_consistency`].
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance of the derivative identities.
pub const FD_TOLERANCE: f64 = 1e-6;
/// Tolerance of the algebraic identity `Z = r ∓ iω_q h`.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

const AXIS_TOLERANCE: f64 = 1e-12;

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// Pole `∓iω_k` contributed by a reservoir oscillator.
fn drive_pole(omega_k: f64, branch: Branch) -> Complex64 {
    Complex64::new(0.0, -branch.sign() * omega_k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    R,
    H,
    Z,
    Xi,
    Zeta,
    Eta,
    Q,
}

impl KernelKind {
    pub const ALL: [KernelKind; 7] =
        [KernelKind::R, KernelKind::H, KernelKind::Z, KernelKind::Xi, KernelKind::Zeta, KernelKind::Eta, KernelKind::Q];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::R => "r",
            KernelKind::H => "h",
            KernelKind::Z => "Z",
            KernelKind::Xi => "xi",
            KernelKind::Zeta => "zeta",
            KernelKind::Eta => "eta",
            KernelKind::Q => "Q",
        }
    }

    /// Whether the kernel depends on a reservoir frequency.
    pub fn needs_omega_k(self) -> bool {
        matches!(self, KernelKind::Xi | KernelKind::Zeta | KernelKind::Eta | KernelKind::Q)
    }
}

#[derive(Debug, Clone)]
struct RationalBackend {
    poly: ClearedDenominator,
    /// Roots of `P`, zero roots included.
    modes: PoleSet,
    /// Roots of `D_e + N_e`.
    longitudinal: PoleSet,
    num_r: Poly,
    num_z: Poly,
    num_dz: Poly,
    num_dd: Poly,
}

/// Expressions in `w = 1/(1 + χ̃_e)`, `u = 1 - χ̃_m` and `B = s² + ω_q² u w`, which
/// stay bounded where delayed exponentials in `χ̃` overflow.
#[derive(Debug, Clone, Copy)]
enum Transform {
    R,
    H,
    Driven { pole: Complex64, with_s: bool },
    Q(Complex64),
    DisplacementPhotonic(Complex64),
    DisplacementElectric(Complex64),
    DisplacementMagnetic(Complex64),
}

trait Field:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Mul<Complex64, Output = Self>
{
}

impl Field for Complex64 {}
impl Field for DelaySeries {}

struct Terms<T> {
    one: T,
    s: T,
    w: T,
    u: T,
    /// `u·w`.
    ratio: T,
    reduced: T,
    w2: Complex64,
}

impl Transform {
    fn eval<T: Field>(self, x: &Terms<T>) -> T {
        let Terms { one, s, w, u, ratio, reduced: b, w2 } = x;
        let shifted = |p: Complex64| s.clone() - one.clone() * p;
        match self {
            Transform::R => s.clone() / b.clone(),
            Transform::H => w.clone() / b.clone(),
            Transform::Driven { pole, with_s } => {
                let num = if with_s { s.clone() * w.clone() } else { w.clone() };
                num / (shifted(pole) * b.clone())
            }
            Transform::Q(p) => w.clone() / shifted(p),
            Transform::DisplacementPhotonic(c) => (s.clone() * (-c) - u.clone() * *w2) / b.clone(),
            Transform::DisplacementElectric(p) => ratio.clone() * *w2 / (shifted(p) * b.clone()),
            Transform::DisplacementMagnetic(p) => s.clone() / (shifted(p) * b.clone()),
        }
    }
}

/// Most delayed parts split off a transform.
const MAX_DELAY_PARTS: usize = 32;
/// Largest initial node count accepted for a single contour.
const PLAIN_NODE_BUDGET: f64 = 4096.0;
/// Largest neglected contribution of a delay pole outside the contour.
const CHAIN_CUTOFF: f64 = 1e-12;

/// Media with at least one non-rational susceptibility.
#[derive(Debug, Clone)]
struct GeneralBackend {
    chi_e: SusceptibilityKernel,
    chi_m: SusceptibilityKernel,
    omega_q: f64,
    /// Common delay of the box kernels, when nothing else is delayed.
    series_delay: Option<f64>,
    /// `(Δ, χ⁰/Δ)` of each box kernel: delay and height of its trailing jump.
    jumps: Vec<(f64, f64)>,
}

impl GeneralBackend {
    fn new(medium: &MediumModel, omega_q: f64) -> Self {
        use SusceptibilityKernel::{Box, Tabulated};
        let kernels = [&medium.chi_e, &medium.chi_m];
        let jumps: Vec<(f64, f64)> =
            kernels.iter().filter_map(|k| if let Box { chi0, delta } = k { Some((*delta, chi0.abs() / delta)) } else { None }).collect();
        let tabulated = kernels.iter().any(|k| matches!(k, Tabulated(_)));
        let common = jumps.iter().all(|(d, _)| (d - jumps[0].0).abs() <= 1e-12 * jumps[0].0);
        let series_delay = (!tabulated && !jumps.is_empty() && common).then(|| jumps[0].0);
        GeneralBackend { chi_e: medium.chi_e.clone(), chi_m: medium.chi_m.clone(), omega_q, series_delay, jumps }
    }

    /// `D(s)`, for collision checks on the imaginary axis.
    fn denominator(&self, s: Complex64) -> Complex64 {
        s * s * (1.0 + chi_laplace_at(&self.chi_e, s)) + self.omega_q * self.omega_q * (1.0 - chi_laplace_at(&self.chi_m, s))
    }

    fn scalar(&self, f: Transform, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let w = finite_or_zero(1.0 / (1.0 + chi_laplace_at(&self.chi_e, s)));
        let u = 1.0 - chi_laplace_at(&self.chi_m, s);
        let ratio = finite_or_zero(u * w);
        let w2 = Complex64::new(self.omega_q * self.omega_q, 0.0);
        let reduced = s * s + w2 * ratio;
        let value = f.eval(&Terms { one, s, w, u, ratio, reduced, w2 });
        match f {
            // u → ∞ at fixed w
            Transform::DisplacementPhotonic(_) if !u.is_finite() => finite_or_zero(-1.0 / w),
            _ => finite_or_zero(value),
        }
    }

    fn series(kernel: &SusceptibilityKernel, s: Complex64, len: usize) -> DelaySeries {
        match kernel {
            SusceptibilityKernel::Box { chi0, delta } => {
                let a = *chi0 / (s * *delta);
                DelaySeries::linear(a, -a, len)
            }
            k => DelaySeries::constant(chi_laplace_at(k, s), len),
        }
    }

    fn expanded(&self, f: Transform, s: Complex64, len: usize) -> DelaySeries {
        let one = DelaySeries::constant(Complex64::new(1.0, 0.0), len);
        let w = (one.clone() + Self::series(&self.chi_e, s, len)).recip();
        let u = one.clone() - Self::series(&self.chi_m, s, len);
        let ratio = u.clone() * w.clone();
        let w2 = Complex64::new(self.omega_q * self.omega_q, 0.0);
        let reduced = one.clone() * (s * s) + ratio.clone() * w2;
        f.eval(&Terms { s: one.clone() * s, one, w, u, ratio, reduced, w2 })
    }

    /// Frequency scale of a single contour that encloses every delay pole contributing
    /// more than [`CHAIN_CUTOFF`] at `t`.
    fn plain_scale(&self, scale: f64, t: f64) -> f64 {
        // A jump J at delay δ puts poles near |s/J| = e^{-Re(s) δ}, contributing |s/J|^{-t/δ};
        // the lowest of them has |s δ| ≈ 2π.
        let height = self
            .jumps
            .iter()
            .filter_map(|(d, j)| {
                let grow = CHAIN_CUTOFF.powf(-d / t);
                (j * d * grow >= PI).then_some(j * grow)
            })
            .fold(0.0, f64::max);
        scale.max(height / (1.5 * PI))
    }

    /// Inverse transform at `t`; `initial` is returned at `t = 0`.
    ///
    /// A single contour is used when one of affordable size encloses the relevant
    /// delay poles. Otherwise, with a common delay `δ`, the transform is expanded
    /// in `e^{-sδ}` and each delayed part is inverted on its own contour.
    fn invert(&self, f: Transform, scale: f64, t: f64, initial: Complex64) -> Result<Complex64> {
        if t == 0.0 {
            return Ok(initial);
        }
        let plain = self.plain_scale(scale, t);
        let laplace = match self.series_delay {
            Some(delay) if 10.0 * t * plain > PLAIN_NODE_BUDGET && t <= MAX_DELAY_PARTS as f64 * delay => {
                let parts = (t / delay).ceil() as usize;
                let head = self.clone();
                let mut l = GeneralLaplace::new(move |s| head.expanded(f, s, 1).coeff(0), 0.0, scale);
                for k in 1..parts {
                    let part = self.clone();
                    l = l.with_delayed(k as f64 * delay, move |s| part.expanded(f, s, k + 1).coeff(k));
                }
                l
            }
            _ => {
                let whole = self.clone();
                GeneralLaplace::new(move |s| whole.scalar(f, s), 0.0, plain)
            }
        };
        invert_numeric(&laplace, t)
    }
}

#[derive(Debug, Clone)]
struct SteppedBackend {
    stepper: Stepper,
    /// Contour fallback for transforms the stepper does not track.
    contour: GeneralBackend,
}

impl SteppedBackend {
    fn undriven(&self, t: f64) -> Result<ModeSample> {
        self.stepper.mode(Complex64::new(0.0, 0.0), t)
    }

    fn driven(&self, p: Complex64, t: f64) -> Result<ModeSample> {
        if self.contour.denominator(p).norm() < AXIS_TOLERANCE {
            return Err(Error::PoleOnAxis { re: p.re, im: p.im });
        }
        self.stepper.mode(p, t)
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Rational(Box<RationalBackend>),
    General(GeneralBackend),
    Stepped(Box<SteppedBackend>),
}

/// Kernels of one mode on one branch; all time arguments are elapsed times `τ >= 0`.
#[derive(Debug, Clone)]
pub struct ModeKernels {
    medium: MediumModel,
    omega_q: f64,
    branch: Branch,
    backend: Backend,
}

pub fn make_kernels(medium: &MediumModel, omega_q: f64, branch: Branch) -> Result<ModeKernels> {
    if !(omega_q > 0.0 && omega_q.is_finite()) {
        return Err(invalid(format!("omega_q must be positive, got {omega_q}")));
    }
    let backend = match cleared_denominator(medium, omega_q) {
        Some(poly) => {
            let modes = PoleSet::find(&poly.characteristic)?;
            let longitudinal = PoleSet::find(&(&poly.de + &poly.ne))?;
            let s = Poly::s();
            let num_r = &(&s * &(&poly.de + &poly.ne)) * &poly.dm;
            let num_z = &num_r - &poly.cleared.scale(i() * branch.sign() * omega_q);
            let w2 = Complex64::new(omega_q * omega_q, 0.0);
            let magnetic = (&poly.dm - &poly.nm).scale(w2);
            let num_dz = &(&poly.de + &poly.ne)
                * &(&(&s * &poly.dm).scale(-i() * branch.sign() * omega_q) - &magnetic);
            let num_dd = &magnetic * &poly.de;
            Backend::Rational(Box::new(RationalBackend { poly, modes, longitudinal, num_r, num_z, num_dz, num_dd }))
        }
        None if [&medium.chi_e, &medium.chi_m].iter().any(|k| matches!(k, SusceptibilityKernel::Tabulated(_))) => {
            Backend::Stepped(Box::new(SteppedBackend {
                stepper: Stepper::new(medium, omega_q),
                contour: GeneralBackend::new(medium, omega_q),
            }))
        }
        None => Backend::General(GeneralBackend::new(medium, omega_q)),
    };
    Ok(ModeKernels { medium: medium.clone(), omega_q, branch, backend })
}

impl ModeKernels {
    pub fn omega_q(&self) -> f64 {
        self.omega_q
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn medium(&self) -> &MediumModel {
        &self.medium
    }

    /// Zeros of the cleared mode polynomial (rational media only).
    pub fn mode_poles(&self) -> Option<&PoleSet> {
        match &self.backend {
            Backend::Rational(b) => Some(&b.modes),
            Backend::General(_) | Backend::Stepped(_) => None,
        }
    }

    /// Electric coupling `f(ω_k) = sqrt(|f|²)` of the continuous spectrum.
    pub fn coupling_f(&self, omega_k: f64) -> Result<f64> {
        Ok(coupling_strength(&self.medium.chi_e, omega_k)?.sqrt())
    }

    /// Magnetic coupling `g(ω_k)`.
    pub fn coupling_g(&self, omega_k: f64) -> Result<f64> {
        Ok(coupling_strength(&self.medium.chi_m, omega_k)?.sqrt())
    }

    pub fn r(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        match &self.backend {
            Backend::Rational(b) => rational(&b.num_r, &b.modes, None, t),
            Backend::General(g) => g.invert(Transform::R, g.omega_q, t, 1.0.into()),
            Backend::Stepped(b) => Ok(b.undriven(t)?.r),
        }
    }

    pub fn h(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        match &self.backend {
            Backend::Rational(b) => rational(&b.poly.cleared, &b.modes, None, t),
            Backend::General(g) => g.invert(Transform::H, g.omega_q, t, 0.0.into()),
            Backend::Stepped(b) => Ok(b.undriven(t)?.h),
        }
    }

    /// `Z(0) = 1`, `Z'(0) = ∓iω_q`.
    pub fn z(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        match &self.backend {
            Backend::Rational(b) => rational(&b.num_z, &b.modes, None, t),
            Backend::General(g) => {
                let r = g.invert(Transform::R, g.omega_q, t, 1.0.into())?;
                let h = g.invert(Transform::H, g.omega_q, t, 0.0.into())?;
                Ok(r - i() * self.branch.sign() * self.omega_q * h)
            }
            Backend::Stepped(b) => {
                let m = b.undriven(t)?;
                Ok(m.r - i() * self.branch.sign() * self.omega_q * m.h)
            }
        }
    }

    pub fn xi(&self, omega_k: f64, t: f64) -> Result<Complex64> {
        self.driven(omega_k, t, false)
    }

    /// `ζ / f(ω_k)`, defined even where the coupling vanishes.
    pub fn zeta_unit(&self, omega_k: f64, t: f64) -> Result<Complex64> {
        self.driven(omega_k, t, true)
    }

    pub fn zeta(&self, omega_k: f64, t: f64) -> Result<Complex64> {
        let f = self.coupling_f(omega_k)?;
        if f == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(f * self.zeta_unit(omega_k, t)?)
    }

    pub fn eta(&self, omega_k: f64, t: f64) -> Result<Complex64> {
        let g = self.coupling_g(omega_k)?;
        if g == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(g * self.xi(omega_k, t)?)
    }

    pub fn q(&self, omega_k: f64, t: f64) -> Result<Complex64> {
        check_reservoir(omega_k)?;
        check_time(t)?;
        let p = drive_pole(omega_k, self.branch);
        match &self.backend {
            Backend::Rational(b) => rational(&b.poly.de, &b.longitudinal, Some(p), t),
            Backend::General(g) => {
                if (1.0 + chi_laplace_at(&self.medium.chi_e, p)).norm() < AXIS_TOLERANCE {
                    return Err(Error::PoleOnAxis { re: p.re, im: p.im });
                }
                g.invert(Transform::Q(p), g.omega_q.max(omega_k), t, 1.0.into())
            }
            Backend::Stepped(b) => {
                if (1.0 + chi_laplace_at(&self.medium.chi_e, p)).norm() < AXIS_TOLERANCE {
                    return Err(Error::PoleOnAxis { re: p.re, im: p.im });
                }
                b.stepper.longitudinal(p, t)
            }
        }
    }

    pub fn eval(&self, kind: KernelKind, omega_k: f64, t: f64) -> Result<Complex64> {
        match kind {
            KernelKind::R => self.r(t),
            KernelKind::H => self.h(t),
            KernelKind::Z => self.z(t),
            KernelKind::Xi => self.xi(omega_k, t),
            KernelKind::Zeta => self.zeta(omega_k, t),
            KernelKind::Eta => self.eta(omega_k, t),
            KernelKind::Q => self.q(omega_k, t),
        }
    }

    /// `C/((s ± iω_k) P)`, times `s` when `with_s`.
    fn driven(&self, omega_k: f64, t: f64, with_s: bool) -> Result<Complex64> {
        check_reservoir(omega_k)?;
        check_time(t)?;
        let p = drive_pole(omega_k, self.branch);
        match &self.backend {
            Backend::Rational(b) => {
                let num = if with_s { &Poly::s() * &b.poly.cleared } else { b.poly.cleared.clone() };
                rational(&num, &b.modes, Some(p), t)
            }
            Backend::General(g) => {
                if g.denominator(p).norm() < AXIS_TOLERANCE {
                    return Err(Error::PoleOnAxis { re: p.re, im: p.im });
                }
                g.invert(Transform::Driven { pole: p, with_s }, g.omega_q.max(omega_k), t, 0.0.into())
            }
            Backend::Stepped(b) => {
                let m = b.driven(p, t)?;
                Ok(if with_s { m.dxi } else { m.xi })
            }
        }
    }
}

/// Kernels of the displacement field, `D = σ(1 + χ_e*) dα/dτ + noise` with
/// `σ = ∓1`, before the slot prefactors are applied.
impl ModeKernels {
    /// `(1 + χ̃_e)[∓iω_q s - ω_q²(1 - χ̃_m)] / D`.
    pub(crate) fn displacement_photonic(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        let c = i() * self.branch.sign() * self.omega_q;
        match &self.backend {
            Backend::Rational(b) => rational(&b.num_dz, &b.modes, None, t),
            Backend::General(g) => {
                g.invert(Transform::DisplacementPhotonic(c), g.omega_q, t, -c)
            }
            Backend::Stepped(b) => b.contour.invert(Transform::DisplacementPhotonic(c), b.contour.omega_q, t, -c),
        }
    }

    /// `ω_q²(1 - χ̃_m) / ((s ± iω_k) D)`: the electric slot per unit coupling, noise included.
    pub(crate) fn displacement_electric(&self, omega_k: f64, t: f64) -> Result<Complex64> {
        check_reservoir(omega_k)?;
        check_time(t)?;
        let p = drive_pole(omega_k, self.branch);
        match &self.backend {
            Backend::Rational(b) => rational(&b.num_dd, &b.modes, Some(p), t),
            Backend::General(g) => {
                g.invert(Transform::DisplacementElectric(p), g.omega_q.max(omega_k), t, 0.0.into())
            }
            Backend::Stepped(b) => Ok(b.driven(p, t)?.electric),
        }
    }

    /// `s(1 + χ̃_e) / ((s ± iω_k) D)`: the magnetic slot per unit `σω_q g`.
    pub(crate) fn displacement_magnetic(&self, omega_k: f64, t: f64) -> Result<Complex64> {
        check_reservoir(omega_k)?;
        check_time(t)?;
        let p = drive_pole(omega_k, self.branch);
        match &self.backend {
            Backend::Rational(b) => rational(&b.num_r, &b.modes, Some(p), t),
            Backend::General(g) => {
                g.invert(Transform::DisplacementMagnetic(p), g.omega_q.max(omega_k), t, 1.0.into())
            }
            Backend::Stepped(b) => Ok(b.driven(p, t)?.magnetic),
        }
    }
}

fn finite_or_zero(z: Complex64) -> Complex64 {
    if z.is_finite() {
        z
    } else {
        Complex64::new(0.0, 0.0)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("elapsed time must be non-negative, got {t}")));
    }
    Ok(())
}

fn check_reservoir(omega_k: f64) -> Result<()> {
    if !(omega_k > 0.0 && omega_k.is_finite()) {
        return Err(invalid(format!("omega_k must be positive, got {omega_k}")));
    }
    Ok(())
}

/// Residue inversion of `num / (lead Π(s - p))`, optionally with an extra simple pole.
///
/// At `t = 0` the initial value `lim s·F(s)` is returned.
pub(crate) fn rational(num: &Poly, poles: &PoleSet, extra: Option<Complex64>, t: f64) -> Result<Complex64> {
    let set = match extra {
        Some(p) => poles.with_simple_pole(p)?,
        None => poles.clone(),
    };
    if t == 0.0 {
        let dn = match num.degree() {
            Some(d) => d,
            None => return Ok(Complex64::new(0.0, 0.0)),
        };
        let dd = set.degree();
        if dn + 1 == dd {
            return Ok(num.leading() / set.lead());
        }
        if dn + 1 < dd {
            return Ok(Complex64::new(0.0, 0.0));
        }
    }
    Ok(residue_sum(num, &set, t))
}

/// Contour inversion; `initial` is returned at `t = 0`.
/// `Q(ω_k, t)` for the longitudinal field.
pub fn kernel_q(medium: &MediumModel, omega_k: f64, t: f64, branch: Branch) -> Result<Complex64> {
    // Q does not involve ω_q; any positive value builds the same longitudinal part.
    let longitudinal = MediumModel::new(medium.chi_e.clone(), SusceptibilityKernel::Zero, medium.units)?;
    make_kernels(&longitudinal, 1.0, branch)?.q(omega_k, t)
}

/// Steady-state response to a reservoir oscillator at `ω_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticAmplitudes {
    pub omega_k: f64,
    pub omega_q: f64,
    pub branch: Branch,
    /// `ω_q² - ω_k² - ω_k²χ̃_e(∓iω_k) - ω_q²χ̃_m(∓iω_k)`.
    pub denominator: Complex64,
    pub amplitude: Complex64,
    /// `amplitude · ω_k f(ω_k)`.
    pub electric: Complex64,
    /// `amplitude · ω_q g(ω_k)`.
    pub magnetic: Complex64,
}

pub fn asymptotic_amplitude(medium: &MediumModel, omega_k: f64, omega_q: f64, branch: Branch) -> Result<AsymptoticAmplitudes> {
    check_reservoir(omega_k)?;
    let kernels = make_kernels(medium, omega_q, branch)?;
    if let Some(set) = kernels.mode_poles() {
        // Zero roots of P cancel against the cleared denominator and are not modes.
        let margin = stripped_margin(set);
        if !(margin > 0.0) {
            return Err(Error::NotDissipative { margin });
        }
    }
    let s = drive_pole(omega_k, branch);
    let denominator = omega_q * omega_q - omega_k * omega_k
        - omega_k * omega_k * chi_laplace_at(&medium.chi_e, s)
        - omega_q * omega_q * chi_laplace_at(&medium.chi_m, s);
    if denominator.norm() < AXIS_TOLERANCE {
        return Err(Error::PoleOnAxis { re: s.re, im: s.im });
    }
    let amplitude = 1.0 / denominator;
    Ok(AsymptoticAmplitudes {
        omega_k,
        omega_q,
        branch,
        denominator,
        amplitude,
        electric: amplitude * omega_k * kernels.coupling_f(omega_k)?,
        magnetic: amplitude * omega_q * kernels.coupling_g(omega_k)?,
    })
}

fn stripped_margin(set: &PoleSet) -> f64 {
    -set
        .poles()
        .iter()
        .filter(|p| p.location != Complex64::new(0.0, 0.0))
        .map(|p| p.location.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Stability margin `-max Re p` over the zeros of the mode denominator.
pub fn stability_margin(medium: &MediumModel, omega_q: f64) -> Result<f64> {
    let set = crate::laplace::mode_poles(medium, omega_q)?;
    Ok(set.margin())
}

/// Checks `Z = r ∓ iω_q h`, `ζ = f·dξ/dτ`, `Z(0) = 1` and `dZ/dτ(0) = ∓iω_q`
/// (divided by `1 + χ_e⁰` for an instantaneous electric response).
///
/// Derivatives are taken in elapsed time `τ`; in signed time the second identity
/// reads `ζ = ±f·dξ/dt`. It is checked per unit coupling so that it is meaningful
/// where `f` vanishes.
pub fn kernel_consistency(kernels: &ModeKernels, t_grid: &[f64], omega_k_grid: &[f64]) -> Result<CheckReport> {
    if t_grid.is_empty() || omega_k_grid.is_empty() {
        return Err(invalid("consistency check needs non-empty time and frequency grids"));
    }
    let wq = kernels.omega_q;
    let sign = kernels.branch.sign();
    let h = FD_STEP;
    let mut report = CheckReport::new("kernel_consistency", crate::describe_medium(&kernels.medium))
        .param("omega_q", wq)
        .param("branch_sign", sign);

    let mut max_a: f64 = 0.0;
    for &t in t_grid {
        let z = kernels.z(t)?;
        let rh = kernels.r(t)? - i() * sign * wq * kernels.h(t)?;
        let res = (z - rh).norm() / z.norm().max(1.0);
        max_a = max_a.max(res);
        report.push(t, z.re, rh.re, res);
    }

    let mut max_b: f64 = 0.0;
    for &wk in omega_k_grid {
        let mut pairs = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let d = if t >= h {
                (kernels.xi(wk, t + h)? - kernels.xi(wk, t - h)?) / (2.0 * h)
            } else {
                (-3.0 * kernels.xi(wk, t)? + 4.0 * kernels.xi(wk, t + h)? - kernels.xi(wk, t + 2.0 * h)?) / (2.0 * h)
            };
            pairs.push((t, kernels.zeta_unit(wk, t)?, d));
        }
        let scale = pairs.iter().map(|p| p.1.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for (t, zeta, d) in pairs {
            let res = (zeta - d).norm() / scale;
            max_b = max_b.max(res);
            report.push(t, zeta.re, d.re, res);
        }
    }

    let z0 = kernels.z(0.0)?;
    let dz0 = (-3.0 * z0 + 4.0 * kernels.z(h)? - kernels.z(2.0 * h)?) / (2.0 * h);
    // an instantaneous part of χ_e stiffens the start: Z'(0) = ∓iω_q/(1 + χ̃_e(∞))
    let stiff = match kernels.medium.chi_e {
        SusceptibilityKernel::Instantaneous { chi0 } => 1.0 + chi0,
        _ => 1.0,
    };
    let want = -i() * sign * wq / stiff;
    let res_z0 = (z0 - 1.0).norm();
    let res_dz0 = (dz0 - want).norm() / wq;
    report.push(0.0, z0.re, 1.0, res_z0);
    report.push(0.0, dz0.im, want.im, res_dz0);

    let mut report = report
        .param("max_z_identity", max_a)
        .param("max_zeta_identity", max_b)
        .param("z0_residual", res_z0)
        .param("dz0_residual", res_dz0)
        .finish(FD_TOLERANCE);
    report.pass &= max_a <= IDENTITY_TOLERANCE;
    Ok(report)
}
