//! Invariants that hold for whole families of media, plus a few spectral and
//! time-domain cross-checks.

use num_complex::Complex64;
use proptest::prelude::*;
use qedk_core::field::{
    coefficients_a, coefficients_d, coefficients_d_time_domain, commutator_check, commutator_report, energy_example2,
    longitudinal_e, OperatorCoefficients,
};
use qedk_core::kernels::make_kernels;
use qedk_core::laplace::{invert_sor, Poly, RationalLaplace};
use qedk_core::medium::{FrequencyGrid, MediumModel, SusceptibilityKernel, UnitsSystem};
use qedk_core::Branch;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn electric(k: SusceptibilityKernel) -> MediumModel {
    MediumModel::electric(k).unwrap()
}

fn rational_medium() -> impl Strategy<Value = MediumModel> {
    prop_oneof![
        (0.01f64..3.0).prop_map(|b| electric(SusceptibilityKernel::step(b).unwrap())),
        (0.3f64..3.0, 0.0f64..0.95, 0.1f64..2.0)
            .prop_map(|(w0, g, wp)| electric(SusceptibilityKernel::lorentz(w0, 2.0 * g * w0, wp).unwrap())),
    ]
}

fn chi_m() -> impl Strategy<Value = SusceptibilityKernel> {
    prop_oneof![
        Just(SusceptibilityKernel::Zero),
        (0.05f64..0.9, 0.1f64..2.0).prop_map(|(c, d)| SusceptibilityKernel::magnetic_box(c, d).unwrap()),
        (0.05f64..0.9).prop_map(|c| SusceptibilityKernel::magnetic_instantaneous(c).unwrap()),
    ]
}

fn paired(c: &OperatorCoefficients) -> bool {
    let slots = [&c.electric, &c.magnetic];
    c.a_dag == c.a.conj()
        && slots
            .iter()
            .all(|s| s.coeff.iter().zip(&s.coeff_dag).all(|(x, y)| *y == x.conj()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn branches_are_conjugate(m in rational_medium(), wq in 0.2f64..4.0, t in 0.0f64..15.0) {
        let f = make_kernels(&m, wq, Branch::Forward).unwrap();
        let b = make_kernels(&m, wq, Branch::Backward).unwrap();
        let (zf, zb) = (f.z(t).unwrap(), b.z(t).unwrap());
        prop_assert!((zb - zf.conj()).norm() <= 1e-12 * (1.0 + zf.norm()), "{zf} vs {zb}");
    }

    #[test]
    fn real_transforms_invert_to_real_signals(
        reals in proptest::collection::vec(-2.0f64..-0.01, 0..3),
        pairs in proptest::collection::vec((-1.5f64..0.0, 0.1f64..3.0), 1..3),
        num in proptest::collection::vec(-2.0f64..2.0, 1..3),
        t in 0.0f64..10.0,
    ) {
        // products of real linear and quadratic factors keep every coefficient real
        let mut den = Poly::from_real(&[1.0]);
        for r in &reals {
            den = mul(&den, &Poly::from_real(&[-r, 1.0]));
        }
        for (a, b) in &pairs {
            den = mul(&den, &Poly::from_real(&[a * a + b * b, -2.0 * a, 1.0]));
        }
        let f = RationalLaplace::factored(Poly::from_real(&num), den).unwrap();
        let x = invert_sor(&f, t, Branch::Forward).unwrap();
        prop_assert!(x.im.abs() <= 1e-12 * (1.0 + x.re.abs()), "{x}");
    }

    #[test]
    fn longitudinal_weight_starts_at_one(m in rational_medium(), wk in 0.1f64..10.0) {
        for branch in [Branch::Forward, Branch::Backward] {
            let k = make_kernels(&m, 1.0, branch).unwrap();
            let q = k.q(wk, 0.0).unwrap();
            prop_assert!((q - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{q}");
        }
    }

    #[test]
    fn longitudinal_weight_ignores_chi_m(beta in 0.05f64..2.0, m in chi_m(), wk in 0.1f64..5.0, t in 0.0f64..8.0) {
        let chi_e = SusceptibilityKernel::step(beta).unwrap();
        let bare = MediumModel::electric(chi_e.clone()).unwrap();
        let dressed = MediumModel::new(chi_e, m, UnitsSystem::default()).unwrap();
        let a = longitudinal_e(&bare, wk, t, Branch::Forward).unwrap();
        let b = longitudinal_e(&dressed, wk, t, Branch::Forward).unwrap();
        prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
        prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn coefficients_come_in_hermitian_pairs(m in rational_medium(), t in 0.0f64..6.0, backward in any::<bool>()) {
        let branch = if backward { Branch::Backward } else { Branch::Forward };
        let grid = FrequencyGrid::uniform(60, 10.0).unwrap();
        prop_assert!(paired(&coefficients_a(&m, 1.0, t, &grid, branch).unwrap()));
        prop_assert!(paired(&coefficients_d(&m, 1.0, t, &grid, branch).unwrap()));
    }

    #[test]
    fn damped_mode_stays_under_its_envelope(wq in 0.2f64..4.0, frac in 0.0f64..1.0, t in 0.0f64..20.0) {
        // |Z| <= e^{-βt/2}(1 + β/2Ω) needs β <= √3 ω_q
        let beta = frac * 3f64.sqrt() * wq;
        let k = make_kernels(&electric(SusceptibilityKernel::step(beta).unwrap()), wq, Branch::Forward).unwrap();
        let omega = (wq * wq - beta * beta / 4.0).sqrt();
        let bound = (-beta * t / 2.0).exp() * (1.0 + beta / (2.0 * omega));
        let z = k.z(t).unwrap().norm();
        prop_assert!(z <= bound * (1.0 + 1e-12) + 1e-15, "|Z| = {z} > {bound}");
    }
}

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Complex64::new(0.0, 0.0); a.coeffs().len() + b.coeffs().len() - 1];
    for (i, x) in a.coeffs().iter().enumerate() {
        for (j, y) in b.coeffs().iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Poly::new(out)
}

/// Fraction of spectral power within `halfwidth` bins of each target bin.
fn spectral_mass(samples: Vec<Complex64>, targets: &[usize], halfwidth: usize) -> f64 {
    let n = samples.len();
    let mut buf = samples;
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let total: f64 = buf.iter().map(|x| x.norm_sqr()).sum();
    let mut hit = vec![false; n];
    for &k in targets {
        for d in 0..=2 * halfwidth {
            hit[(k + n + d - halfwidth) % n] = true;
        }
    }
    let inside: f64 = buf.iter().zip(&hit).filter(|(_, h)| **h).map(|(x, _)| x.norm_sqr()).sum();
    inside / total
}

#[test]
fn lossless_lorentz_mode_lives_on_two_frequencies() {
    // ω0 = ω_q = √2, ω_p = 1 puts the dressed frequencies at exactly 1 and 2
    let w = 2f64.sqrt();
    let m = electric(SusceptibilityKernel::lorentz(w, 0.0, 1.0).unwrap());
    let k = make_kernels(&m, w, Branch::Forward).unwrap();
    let (n, cycles) = (4096usize, 64.0);
    let dt = 2.0 * PI * cycles / n as f64;
    let z: Vec<Complex64> = (0..n).map(|j| k.z(j as f64 * dt).unwrap()).collect();
    let bins = |omega: f64| (omega * cycles).round() as usize;
    let targets = [bins(1.0), bins(2.0), n - bins(1.0), n - bins(2.0)];
    let mass = spectral_mass(z, &targets, 0);
    assert!(mass > 0.999, "{mass}");
}

#[test]
fn lossless_lorentz_spectrum_with_a_window() {
    let (w0, wq, wp) = (1.0, 1.0, 0.5);
    let m = electric(SusceptibilityKernel::lorentz(w0, 0.0, wp).unwrap());
    let k = make_kernels(&m, wq, Branch::Forward).unwrap();
    // roots of s⁴ + (ω0² + ω_q² + ω_p²)s² + ω0²ω_q²
    let b = w0 * w0 + wq * wq + wp * wp;
    let disc = (b * b - 4.0 * w0 * w0 * wq * wq).sqrt();
    let omegas = [((b - disc) / 2.0).sqrt(), ((b + disc) / 2.0).sqrt()];
    let (n, span) = (8192usize, 1000.0);
    let dt = span / n as f64;
    let z: Vec<Complex64> = (0..n)
        .map(|j| {
            let hann = 0.5 - 0.5 * (2.0 * PI * j as f64 / n as f64).cos();
            hann * k.z(j as f64 * dt).unwrap()
        })
        .collect();
    let mut targets = Vec::new();
    for om in omegas {
        let bin = (om * span / (2.0 * PI)).round() as usize;
        targets.extend([bin, n - bin]);
    }
    let mass = spectral_mass(z, &targets, 3);
    assert!(mass > 0.999, "{mass}");
}

#[test]
fn step_commutator_at_late_times() {
    let m = electric(SusceptibilityKernel::step(0.2).unwrap());
    let grid = FrequencyGrid::uniform(2000, 40.0).unwrap();
    for branch in [Branch::Forward, Branch::Backward] {
        let r = commutator_report(&m, 1.0, &[1.0, 5.0, 10.0], &grid, branch).unwrap();
        assert!(r.pass, "{branch:?}: {}", r.max_residual);
    }
}

#[test]
fn commutator_ledger_adds_up() {
    let m = electric(SusceptibilityKernel::lorentz(1.0, 0.3, 0.8).unwrap());
    let grid = FrequencyGrid::uniform(400, 25.0).unwrap();
    for t in [0.5, 3.0] {
        let l = commutator_check(&m, 1.0, t, &grid, Branch::Forward).unwrap();
        assert_eq!(l.magnetic, 0.0);
        assert!((l.photonic + l.electric + l.magnetic - l.value).abs() < 1e-14, "{l:?}");
        assert!(l.photonic < 1.0 && l.electric > 0.0);
    }
}

#[test]
fn displacement_from_the_time_domain() {
    let m = electric(SusceptibilityKernel::step(0.3).unwrap());
    let grid = FrequencyGrid::uniform(40, 8.0).unwrap();
    for branch in [Branch::Forward, Branch::Backward] {
        let laplace = coefficients_d(&m, 1.0, 2.0, &grid, branch).unwrap();
        let direct = coefficients_d_time_domain(&m, 1.0, 2.0, &grid, branch).unwrap();
        assert!((laplace.a - direct.a).norm() < 1e-5, "{} vs {}", laplace.a, direct.a);
        for (x, y) in laplace.electric.coeff.iter().zip(&direct.electric.coeff) {
            assert!((x - y).norm() < 1e-5, "{x} vs {y}");
        }
    }
}

#[test]
fn vacuum_energy_is_flat() {
    let ts: Vec<f64> = (0..=200).map(|j| 0.25 * j as f64).collect();
    for wq in [0.3, 1.0, 7.5] {
        let r = energy_example2(0.0, 0.0, wq, &ts).unwrap();
        assert!(r.params["vacuum_drift"] <= 1e-12, "{}", r.params["vacuum_drift"]);
    }
}
