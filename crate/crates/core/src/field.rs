//! Operator-coefficient vectors of one transverse mode.
//!
//! A field quantity at elapsed time `τ` is a linear combination of the initial
//! operators `a, a†` (photon), `d, d†` (electric reservoir) and `b, b†`
//! (magnetic reservoir). Only the c-number coefficients are represented.

use crate::error::{invalid, Error, Result};
use crate::kernels::{make_kernels, ModeKernels};
use crate::laplace::Branch;
use crate::medium::{chi_time, coupling_strength, FrequencyGrid, MediumModel, SusceptibilityKernel};
use crate::report::CheckReport;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Accepted deviation of the commutator from one.
pub const COMMUTATOR_TOLERANCE: f64 = 5e-3;
/// Relative change tolerated when the convolution step is halved.
pub const CONVOLUTION_TOLERANCE: f64 = 1e-6;
/// Drift tolerated in the medium energy of the instantaneous limit.
pub const ENERGY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Vector potential.
    A,
    /// Displacement field.
    D,
}

/// Coefficients of one reservoir family on its frequency nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReservoirSlots {
    pub omega: Vec<f64>,
    /// Quadrature weight times the `4πω²` shell measure.
    pub weight: Vec<f64>,
    pub coeff: Vec<Complex64>,
    pub coeff_dag: Vec<Complex64>,
}

impl ReservoirSlots {
    fn with_coeffs(channels: &[Channel], coeff: Vec<Complex64>) -> Self {
        ReservoirSlots {
            omega: channels.iter().map(|c| c.omega).collect(),
            weight: channels.iter().map(|c| c.weight).collect(),
            coeff_dag: coeff.iter().map(|c| c.conj()).collect(),
            coeff,
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCoefficients {
    pub quantity: Quantity,
    pub omega_q: f64,
    pub t: f64,
    pub branch: Branch,
    pub a: Complex64,
    pub a_dag: Complex64,
    pub electric: ReservoirSlots,
    pub magnetic: ReservoirSlots,
    /// Part of the electric slots of `D` carried by the noise polarization; empty for `A`.
    pub noise: Vec<Complex64>,
}

/// One reservoir oscillator family member: frequency, measure weight, real coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Channel {
    omega: f64,
    weight: f64,
    coupling: f64,
}

/// Grid nodes with `4πω²w_i`, plus a discrete channel for a lossless resonance.
fn channels(kernel: &SusceptibilityKernel, grid: &FrequencyGrid) -> Result<Vec<Channel>> {
    if kernel.is_zero() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(grid.len() + 1);
    for (&w, &q) in grid.nodes().iter().zip(grid.weights()) {
        out.push(Channel { omega: w, weight: 4.0 * PI * w * w * q, coupling: coupling_strength(kernel, w)?.sqrt() });
    }
    if let SusceptibilityKernel::Lorentz { omega0, gamma, omega_p } = *kernel {
        if gamma == 0.0 {
            let strength = omega_p * omega_p / (8.0 * PI * omega0.powi(3));
            out.push(Channel { omega: omega0, weight: 4.0 * PI * omega0 * omega0, coupling: strength.sqrt() });
        }
    }
    Ok(out)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Evaluates `f` on channels with non-zero coupling.
fn over<F>(channels: &[Channel], mut f: F) -> Result<Vec<Complex64>>
where
    F: FnMut(&Channel) -> Result<Complex64>,
{
    channels.iter().map(|c| if c.coupling == 0.0 { Ok(zero()) } else { f(c) }).collect()
}

struct Setup {
    kernels: ModeKernels,
    electric: Vec<Channel>,
    magnetic: Vec<Channel>,
}

fn setup(medium: &MediumModel, omega_q: f64, grid: &FrequencyGrid, branch: Branch) -> Result<Setup> {
    Ok(Setup {
        kernels: make_kernels(medium, omega_q, branch)?,
        electric: channels(&medium.chi_e, grid)?,
        magnetic: channels(&medium.chi_m, grid)?,
    })
}

/// `A`: `√(1/2ω_q) Z` on `a`, `±ζ` on `d`, `ω_q η` on `b`.
pub fn coefficients_a(medium: &MediumModel, omega_q: f64, t: f64, grid: &FrequencyGrid, branch: Branch) -> Result<OperatorCoefficients> {
    let s = setup(medium, omega_q, grid, branch)?;
    assemble_a(&s, t)
}

fn assemble_a(s: &Setup, t: f64) -> Result<OperatorCoefficients> {
    let k = &s.kernels;
    let wq = k.omega_q();
    let sign = k.branch().sign();
    let a = (0.5 / wq).sqrt() * k.z(t)?;
    let d = over(&s.electric, |c| Ok(sign * c.coupling * k.zeta_unit(c.omega, t)?))?;
    let b = over(&s.magnetic, |c| Ok(wq * c.coupling * k.xi(c.omega, t)?))?;
    Ok(OperatorCoefficients {
        quantity: Quantity::A,
        omega_q: wq,
        t,
        branch: k.branch(),
        a,
        a_dag: a.conj(),
        electric: ReservoirSlots::with_coeffs(&s.electric, d),
        magnetic: ReservoirSlots::with_coeffs(&s.magnetic, b),
        noise: Vec::new(),
    })
}

/// `D = σ(1 + χ_e*)(dα/dτ) + P_N` with `σ = ∓1`, from the closed transforms.
///
/// The noise polarization puts `f(ω_k) e^{∓iω_k τ}` on each `d` slot.
pub fn coefficients_d(medium: &MediumModel, omega_q: f64, t: f64, grid: &FrequencyGrid, branch: Branch) -> Result<OperatorCoefficients> {
    let s = setup(medium, omega_q, grid, branch)?;
    assemble_d(&s, t)
}

fn assemble_d(s: &Setup, t: f64) -> Result<OperatorCoefficients> {
    let k = &s.kernels;
    let wq = k.omega_q();
    let sigma = -k.branch().sign();
    let a = sigma * (0.5 / wq).sqrt() * k.displacement_photonic(t)?;
    let d = over(&s.electric, |c| Ok(c.coupling * k.displacement_electric(c.omega, t)?))?;
    let b = over(&s.magnetic, |c| Ok(sigma * wq * c.coupling * k.displacement_magnetic(c.omega, t)?))?;
    let noise = noise_slots(&s.electric, k.branch(), t);
    Ok(OperatorCoefficients {
        quantity: Quantity::D,
        omega_q: wq,
        t,
        branch: k.branch(),
        a,
        a_dag: a.conj(),
        electric: ReservoirSlots::with_coeffs(&s.electric, d),
        magnetic: ReservoirSlots::with_coeffs(&s.magnetic, b),
        noise,
    })
}

fn noise_slots(channels: &[Channel], branch: Branch, t: f64) -> Vec<Complex64> {
    channels
        .iter()
        .map(|c| c.coupling * Complex64::from_polar(1.0, -branch.sign() * c.omega * t))
        .collect()
}

/// `D` built in the time domain: finite-difference `dα/dτ` and a trapezoid
/// convolution with `χ_e`. The step starts at `10⁻²/ω_max` and is halved until
/// each slot settles to [`CONVOLUTION_TOLERANCE`].
pub fn coefficients_d_time_domain(
    medium: &MediumModel,
    omega_q: f64,
    t: f64,
    grid: &FrequencyGrid,
    branch: Branch,
) -> Result<OperatorCoefficients> {
    let s = setup(medium, omega_q, grid, branch)?;
    let k = &s.kernels;
    let a = assemble_a(&s, t)?;
    let sign = branch.sign();
    let sigma = -sign;
    let top = grid.omega_max().max(omega_q);
    let conv = Convolution::new(&medium.chi_e, t, 1e-2 / top);
    let noise = noise_slots(&s.electric, branch, t);

    let photon = sigma * conv.apply(&|tau| Ok((0.5 / omega_q).sqrt() * k.z(tau)?), sigma, zero())?;
    let d = s
        .electric
        .iter()
        .zip(&noise)
        .map(|(c, n)| {
            if c.coupling == 0.0 {
                return Ok(zero());
            }
            Ok(sigma * conv.apply(&|tau| Ok(sign * c.coupling * k.zeta_unit(c.omega, tau)?), sigma, *n)? + n)
        })
        .collect::<Result<Vec<_>>>()?;
    let b = over(&s.magnetic, |c| Ok(sigma * conv.apply(&|tau| Ok(omega_q * c.coupling * k.xi(c.omega, tau)?), sigma, zero())?))?;
    Ok(OperatorCoefficients {
        quantity: Quantity::D,
        a: photon,
        a_dag: photon.conj(),
        electric: ReservoirSlots::with_coeffs(&s.electric, d),
        magnetic: ReservoirSlots::with_coeffs(&s.magnetic, b),
        noise,
        ..a
    })
}

/// Step halvings tried before giving up.
const MAX_HALVINGS: u32 = 6;

/// `u(t) + ∫_0^t χ(t - τ') u(τ') dτ'` with `u = dα/dτ`.
struct Convolution {
    t: f64,
    /// Pieces of `[0, t]` free of kernel jumps and of kinks in `α`.
    segments: Vec<(f64, f64)>,
    step: f64,
    kernel: SusceptibilityKernel,
    instantaneous: f64,
}

impl Convolution {
    fn new(kernel: &SusceptibilityKernel, t: f64, step: f64) -> Self {
        let breaks = kernel.breakpoints();
        let mut cuts: Vec<f64> = breaks.iter().flat_map(|b| [t - b, *b]).filter(|&c| c > 0.0 && c < t).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t);
        let mut edges = vec![0.0];
        edges.extend(cuts);
        edges.push(t);
        let segments = edges.windows(2).map(|w| (w[0], w[1])).collect();
        let instantaneous = match kernel {
            SusceptibilityKernel::Instantaneous { chi0 } => *chi0,
            _ => 0.0,
        };
        Convolution { t, segments, step, kernel: kernel.clone(), instantaneous }
    }

    /// `χ(t - τ')` on the segment `[lo, hi]`, taking the one-sided limit at its ends.
    fn chi(&self, tau: f64, lo: f64, hi: f64) -> f64 {
        let nudge = 1e-12 * (1.0 + self.t);
        let tau = tau.clamp(lo + nudge, hi - nudge);
        chi_time(&self.kernel, (self.t - tau).max(f64::MIN_POSITIVE))
    }

    fn trapezoid(&self, derivative: &dyn Fn(f64) -> Result<Complex64>, refine: u32) -> Result<Complex64> {
        let mut total = zero();
        for &(lo, hi) in &self.segments {
            let len = hi - lo;
            let n = ((len / self.step).ceil() as usize).max(2) << refine;
            let dx = len / n as f64;
            let mut sum = zero();
            for j in 0..=n {
                let tau = lo + j as f64 * dx;
                let v = self.chi(tau, lo, hi) * derivative(tau)?;
                sum += if j == 0 || j == n { 0.5 * v } else { v };
            }
            total += sum * dx;
        }
        Ok(total)
    }

    /// The bracketed response; `σ·result + offset` is the slot whose settling is checked.
    fn apply(&self, alpha: &dyn Fn(f64) -> Result<Complex64>, sigma: f64, offset: Complex64) -> Result<Complex64> {
        let h = crate::kernels::FD_STEP;
        let derivative = |tau: f64| -> Result<Complex64> {
            if tau >= h {
                Ok((alpha(tau + h)? - alpha(tau - h)?) / (2.0 * h))
            } else {
                Ok((-3.0 * alpha(tau)? + 4.0 * alpha(tau + h)? - alpha(tau + 2.0 * h)?) / (2.0 * h))
            }
        };
        let now = (1.0 + self.instantaneous) * derivative(self.t)?;
        if self.kernel.is_zero() || self.instantaneous != 0.0 || self.t == 0.0 {
            return Ok(now);
        }
        let mut coarse = self.trapezoid(&derivative, 0)?;
        let mut change = f64::INFINITY;
        for refine in 1..=MAX_HALVINGS {
            let fine = self.trapezoid(&derivative, refine)?;
            let slot = sigma * (now + fine) + offset;
            change = (fine - coarse).norm() / slot.norm().max(f64::MIN_POSITIVE);
            if change <= CONVOLUTION_TOLERANCE {
                return Ok(now + fine);
            }
            coarse = fine;
        }
        Err(Error::ConvolutionUnderresolved { change })
    }
}

/// Per-mode canonical commutator `c = (1/i) Σ w (α π* - α* π)` with `π = -D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorLedger {
    pub t: f64,
    pub value: f64,
    pub photonic: f64,
    pub electric: f64,
    pub magnetic: f64,
}

fn bilinear(alpha: Complex64, d: Complex64) -> f64 {
    // (1/i)(α π* - α* π) = 2 Im(α π*)
    2.0 * (alpha * (-d).conj()).im
}

fn ledger(a: &OperatorCoefficients, d: &OperatorCoefficients) -> CommutatorLedger {
    let family = |x: &ReservoirSlots, y: &ReservoirSlots| -> f64 {
        x.coeff.iter().zip(&y.coeff).zip(&x.weight).map(|((p, q), w)| w * bilinear(*p, *q)).sum()
    };
    let photonic = bilinear(a.a, d.a);
    let electric = family(&a.electric, &d.electric);
    let magnetic = family(&a.magnetic, &d.magnetic);
    CommutatorLedger { t: a.t, value: photonic + electric + magnetic, photonic, electric, magnetic }
}

fn check_commutator_grid(grid: &FrequencyGrid, omega_q: f64) -> Result<()> {
    if grid.len() < 200 || grid.nodes()[0] > omega_q / 20.0 || grid.omega_max() < 20.0 * omega_q {
        return Err(invalid("commutator grid needs >= 200 nodes spanning [omega_q/20, 20 omega_q]"));
    }
    Ok(())
}

pub fn commutator_check(medium: &MediumModel, omega_q: f64, t: f64, grid: &FrequencyGrid, branch: Branch) -> Result<CommutatorLedger> {
    check_commutator_grid(grid, omega_q)?;
    let s = setup(medium, omega_q, grid, branch)?;
    Ok(ledger(&assemble_a(&s, t)?, &assemble_d(&s, t)?))
}

/// Commutator at several times as a report with tolerance [`COMMUTATOR_TOLERANCE`].
pub fn commutator_report(medium: &MediumModel, omega_q: f64, times: &[f64], grid: &FrequencyGrid, branch: Branch) -> Result<CheckReport> {
    check_commutator_grid(grid, omega_q)?;
    let s = setup(medium, omega_q, grid, branch)?;
    let mut report = CheckReport::new("commutator", crate::describe_medium(medium))
        .param("omega_q", omega_q)
        .param("branch_sign", branch.sign())
        .grid(grid);
    for &t in times {
        let l = ledger(&assemble_a(&s, t)?, &assemble_d(&s, t)?);
        report.push(t, l.value, 1.0, (l.value - 1.0).abs());
    }
    Ok(report.finish(COMMUTATOR_TOLERANCE))
}

/// Weight of `d₃(0)` in the longitudinal field: `-f(ω_k) Q(ω_k, τ)`.
pub fn longitudinal_e(medium: &MediumModel, omega_k: f64, t: f64, branch: Branch) -> Result<Complex64> {
    let f = coupling_strength(&medium.chi_e, omega_k)?.sqrt();
    if f == 0.0 {
        return Ok(zero());
    }
    Ok(-f * crate::kernels::kernel_q(medium, omega_k, t, branch)?)
}

/// Photon-slot fields of the instantaneous medium, from the closed-form `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantaneousFields {
    pub e: Complex64,
    pub d: Complex64,
    pub b: Complex64,
    pub h: Complex64,
}

/// `Z = cos ω̃t - iκ sin ω̃t`, `κ = √((1+χ_m⁰)/(1+χ_e⁰))`, `ω̃ = ω_q/√((1+χ_e⁰)(1+χ_m⁰))`.
pub fn instantaneous_fields(chi_e0: f64, chi_m0: f64, omega_q: f64, t: f64) -> InstantaneousFields {
    let kappa = ((1.0 + chi_m0) / (1.0 + chi_e0)).sqrt();
    let w = omega_q / ((1.0 + chi_e0) * (1.0 + chi_m0)).sqrt();
    let norm = (0.5 / omega_q).sqrt();
    let (s, c) = (w * t).sin_cos();
    let alpha = norm * Complex64::new(c, -kappa * s);
    let rate = norm * w * Complex64::new(-s, -kappa * c);
    let e = -rate;
    let b = omega_q * alpha;
    InstantaneousFields { e, d: (1.0 + chi_e0) * e, b, h: b / (1.0 + chi_m0) }
}

/// Energy of the instantaneous medium, `½E·D + ½H·B`, against the vacuum form `½E² + ½B²`.
pub fn energy_example2(chi_e0: f64, chi_m0: f64, omega_q: f64, t_grid: &[f64]) -> Result<CheckReport> {
    if !(chi_e0 > -1.0 && chi_m0 > -1.0) {
        return Err(invalid("instantaneous susceptibilities must exceed -1"));
    }
    if !(omega_q > 0.0) {
        return Err(invalid(format!("omega_q must be positive, got {omega_q}")));
    }
    if t_grid.is_empty() {
        return Err(invalid("energy check needs at least one time"));
    }
    let medium = |f: InstantaneousFields| 0.5 * (f.e * f.d.conj()).re + 0.5 * (f.h * f.b.conj()).re;
    let vacuum = |f: InstantaneousFields| 0.5 * f.e.norm_sqr() + 0.5 * f.b.norm_sqr();
    let start = instantaneous_fields(chi_e0, chi_m0, omega_q, 0.0);
    let (m0, v0) = (medium(start), vacuum(start));
    let label = format!("chi_e=instantaneous(chi0={chi_e0}); chi_m=instantaneous(chi0={chi_m0})");
    let mut report = CheckReport::new("energy_example2", label)
        .param("chi_e0", chi_e0)
        .param("chi_m0", chi_m0)
        .param("omega_q", omega_q);
    let mut vacuum_drift: f64 = 0.0;
    for &t in t_grid {
        let f = instantaneous_fields(chi_e0, chi_m0, omega_q, t);
        let m = medium(f);
        vacuum_drift = vacuum_drift.max((vacuum(f) - v0).abs() / v0);
        report.push(t, m, m0, (m - m0).abs() / m0);
    }
    Ok(report.param("vacuum_drift", vacuum_drift).finish(ENERGY_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::uniform(400, 20.0).unwrap()
    }

    fn step() -> MediumModel {
        MediumModel::electric(SusceptibilityKernel::step(0.2).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_a_is_the_free_field() {
        let c = coefficients_a(&MediumModel::vacuum(), 2.0, 0.0, &grid(), Branch::Forward).unwrap();
        assert_eq!(c.a, Complex64::new(0.5, 0.0));
        assert!(c.electric.is_empty() && c.magnetic.is_empty());
        let c = coefficients_a(&MediumModel::vacuum(), 2.0, 1.3, &grid(), Branch::Forward).unwrap();
        assert!((c.a - 0.5 * Complex64::from_polar(1.0, -2.6)).norm() < 1e-15);
    }

    #[test]
    fn vacuum_d_magnitude() {
        for branch in [Branch::Forward, Branch::Backward] {
            let c = coefficients_d(&MediumModel::vacuum(), 2.0, 0.7, &grid(), branch).unwrap();
            assert!((c.a.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reservoir_slots_start_empty() {
        for branch in [Branch::Forward, Branch::Backward] {
            let a = coefficients_a(&step(), 1.0, 0.0, &grid(), branch).unwrap();
            assert_eq!(a.a, Complex64::new((0.5f64).sqrt(), 0.0));
            assert!(a.electric.coeff.iter().all(|c| *c == zero()));
            let d = coefficients_d(&step(), 1.0, 0.0, &grid(), branch).unwrap();
            for ((n, w), total) in d.noise.iter().zip(&d.electric.omega).zip(&d.electric.coeff) {
                let f = coupling_strength(&SusceptibilityKernel::step(0.2).unwrap(), *w).unwrap().sqrt();
                assert_eq!(*n, Complex64::new(f, 0.0));
                assert_eq!(*total, zero());
            }
        }
    }

    #[test]
    fn hermitian_pairing() {
        let d = coefficients_d(&step(), 1.0, 2.5, &grid(), Branch::Backward).unwrap();
        assert_eq!(d.a_dag, d.a.conj());
        assert!(d.electric.coeff.iter().zip(&d.electric.coeff_dag).all(|(c, cd)| *cd == c.conj()));
    }

    #[test]
    fn commutator_at_zero_is_exact() {
        for branch in [Branch::Forward, Branch::Backward] {
            let l = commutator_check(&step(), 1.0, 0.0, &grid(), branch).unwrap();
            assert!((l.value - 1.0).abs() < 1e-14, "{l:?}");
        }
    }

    #[test]
    fn vacuum_commutator() {
        let l = commutator_check(&MediumModel::vacuum(), 1.0, 7.0, &grid(), Branch::Forward).unwrap();
        assert!((l.value - 1.0).abs() < 1e-14);
        assert_eq!(l.electric, 0.0);
    }

    #[test]
    fn coarse_commutator_grid_is_rejected() {
        let g = FrequencyGrid::uniform(100, 20.0).unwrap();
        assert!(commutator_check(&step(), 1.0, 1.0, &g, Branch::Forward).is_err());
    }

    #[test]
    fn energy_of_the_instantaneous_medium_is_constant() {
        let ts: Vec<f64> = (0..=500).map(|j| 0.1 * j as f64).collect();
        let r = energy_example2(3.0, 0.0, 1.0, &ts).unwrap();
        assert!(r.pass, "{}", r.max_residual);
        assert!(r.params["vacuum_drift"] > 0.5);
        let v = energy_example2(0.0, 0.0, 1.0, &ts).unwrap();
        assert!(v.params["vacuum_drift"] < 1e-14);
    }

    #[test]
    fn longitudinal_weight_of_vacuum_and_lossless_media() {
        assert_eq!(longitudinal_e(&MediumModel::vacuum(), 1.0, 3.0, Branch::Forward).unwrap(), zero());
        let m = MediumModel::electric(SusceptibilityKernel::lorentz(1.0, 0.0, 0.5).unwrap()).unwrap();
        assert_eq!(longitudinal_e(&m, 0.7, 0.0, Branch::Forward).unwrap(), zero());
    }
}
