//! Box-kernel media against a direct integration of the delay equation
//!
//!   z'' + k_e (z' - z'(t-Δ)) + ω_q² (z - k_m ∫_{t-Δ}^t z) = F(t)
//!
//! obtained by differentiating the memory integrals of a box kernel.

use num_complex::Complex64;
use qedk_core::kernels::make_kernels;
use qedk_core::medium::{MediumModel, SusceptibilityKernel, UnitsSystem};
use qedk_core::Branch;

struct DelayOde {
    ke: f64,
    km: f64,
    delta: f64,
    wq: f64,
    drive: Option<Complex64>,
}

/// State: (z, z', ∫_{t-Δ}^t z).
type State = [Complex64; 3];

impl DelayOde {
    /// Classical RK4 with integer `Δ/h`; delayed values by cubic Hermite interpolation.
    ///
    /// Kinks sit on nodes, so each step uses one-sided limits of the delayed terms.
    fn solve(&self, z0: Complex64, v0: Complex64, t_end: f64, per_delay: usize) -> impl Fn(f64) -> Complex64 {
        let h = self.delta / per_delay as f64;
        let steps = (t_end / h).ceil() as usize + 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut z = vec![z0];
        let mut v = vec![v0];
        // accelerations as right limits (`from`) and left limits (`to`) at each node
        let mut from: Vec<Complex64> = Vec::new();
        let mut to: Vec<Complex64> = vec![zero];
        let mut state: State = [z0, v0, zero];

        let rhs = |t: f64, y: &State, active: bool, hist: &History| -> State {
            let (zd, vd) = if active { hist.at(t - self.delta, h) } else { (zero, zero) };
            let force = self.drive.map_or(zero, |p| (p * t).exp());
            let a = force - self.ke * (y[1] - vd) - self.wq * self.wq * (y[0] - self.km * y[2]);
            [y[1], a, y[0] - zd]
        };

        for n in 0..steps {
            let t = n as f64 * h;
            let active = n >= per_delay;
            let add = |y: &State, k: &State, c: f64| -> State { [y[0] + k[0] * c, y[1] + k[1] * c, y[2] + k[2] * c] };
            from.push(zero);
            let k1 = {
                let hist = History { z: &z, v: &v, from: &from, to: &to };
                rhs(t, &state, active, &hist)
            };
            from[n] = k1[1];
            let hist = History { z: &z, v: &v, from: &from, to: &to };
            let k2 = rhs(t + h / 2.0, &add(&state, &k1, h / 2.0), active, &hist);
            let k3 = rhs(t + h / 2.0, &add(&state, &k2, h / 2.0), active, &hist);
            let k4 = rhs(t + h, &add(&state, &k3, h), active, &hist);
            for i in 0..3 {
                state[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
            }
            z.push(state[0]);
            v.push(state[1]);
            let end = rhs(t + h, &state, active, &History { z: &z, v: &v, from: &from, to: &to })[1];
            to.push(end);
        }
        move |t: f64| {
            let j = (t / h).round() as usize;
            assert!((j as f64 * h - t).abs() < 1e-9 * h.max(t), "t must be a grid node");
            z[j]
        }
    }
}

struct History<'a> {
    z: &'a [Complex64],
    v: &'a [Complex64],
    from: &'a [Complex64],
    to: &'a [Complex64],
}

impl History<'_> {
    /// `(z, z')` at `t` by cubic Hermite interpolation within one step.
    fn at(&self, t: f64, h: f64) -> (Complex64, Complex64) {
        let x = t / h;
        let j = x.floor() as usize;
        let u = x - j as f64;
        if u.abs() < 1e-9 {
            return (self.z[j], self.v[j]);
        }
        let (h00, h10, h01, h11) = (
            2.0 * u.powi(3) - 3.0 * u * u + 1.0,
            u.powi(3) - 2.0 * u * u + u,
            -2.0 * u.powi(3) + 3.0 * u * u,
            u.powi(3) - u * u,
        );
        let z = self.z[j] * h00 + self.v[j] * (h * h10) + self.z[j + 1] * h01 + self.v[j + 1] * (h * h11);
        let v = self.v[j] * h00 + self.from[j] * (h * h10) + self.v[j + 1] * h01 + self.to[j + 1] * (h * h11);
        (z, v)
    }
}

fn medium(chi_e: (f64, f64), chi_m0: Option<f64>) -> MediumModel {
    let e = SusceptibilityKernel::boxcar(chi_e.0, chi_e.1).unwrap();
    let m = chi_m0.map_or(SusceptibilityKernel::Zero, |c| SusceptibilityKernel::magnetic_box(c, chi_e.1).unwrap());
    MediumModel::new(e, m, UnitsSystem::default()).unwrap()
}

fn strengths(m: &MediumModel) -> (f64, f64, f64) {
    let SusceptibilityKernel::Box { chi0, delta } = m.chi_e else { unreachable!() };
    let km = match m.chi_m {
        SusceptibilityKernel::Box { chi0, .. } => chi0 / delta,
        _ => 0.0,
    };
    (chi0 / delta, km, delta)
}

/// Multiples of Δ: every kink up to 6Δ, points between them, and late times.
fn times_per_delay() -> Vec<f64> {
    let mut r: Vec<f64> = (1..=48).map(|j| j as f64 * 0.125).collect();
    r.extend([6.3, 7.0, 8.5, 10.75, 14.0]);
    r
}

fn check_z(m: &MediumModel, wq: f64, branch: Branch) {
    let (ke, km, delta) = strengths(m);
    let c = Complex64::new(0.0, -branch.sign() * wq);
    let ode = DelayOde { ke, km, delta, wq, drive: None };
    let oracle = ode.solve(Complex64::new(1.0, 0.0), c, 14.0 * delta, 4000);
    let k = make_kernels(m, wq, branch).unwrap();
    for r in times_per_delay() {
        let t = r * delta;
        let got = k.z(t).unwrap();
        let want = oracle(t);
        assert!((got - want).norm() < 1e-7, "t={t}: {got} vs {want}");
    }
}

fn check_xi(m: &MediumModel, wq: f64, omega_k: f64, branch: Branch) {
    let (ke, km, delta) = strengths(m);
    let p = Complex64::new(0.0, -branch.sign() * omega_k);
    let ode = DelayOde { ke, km, delta, wq, drive: Some(p) };
    let zero = Complex64::new(0.0, 0.0);
    let oracle = ode.solve(zero, zero, 14.0 * delta, 4000);
    let k = make_kernels(m, wq, branch).unwrap();
    for r in times_per_delay() {
        let t = r * delta;
        let got = k.xi(omega_k, t).unwrap();
        let want = oracle(t);
        assert!((got - want).norm() < 1e-7, "t={t}: {got} vs {want}");
    }
}

#[test]
fn weak_long_box_z() {
    check_z(&medium((0.5, 1.0), None), 1.0, Branch::Forward);
}

#[test]
fn strong_short_box_z_both_branches() {
    let m = medium((3.0, 0.5), None);
    check_z(&m, 1.0, Branch::Forward);
    check_z(&m, 1.0, Branch::Backward);
}

#[test]
fn very_strong_box_z() {
    check_z(&medium((20.0, 0.3), None), 2.0, Branch::Forward);
}

#[test]
fn box_xi() {
    check_xi(&medium((3.0, 0.5), None), 1.0, 1.3, Branch::Forward);
    check_xi(&medium((0.5, 1.0), None), 1.0, 0.4, Branch::Backward);
}

#[test]
fn electric_and_magnetic_boxes() {
    let m = medium((0.8, 0.7), Some(0.6));
    check_z(&m, 1.5, Branch::Forward);
    check_xi(&m, 1.5, 2.2, Branch::Forward);
}
