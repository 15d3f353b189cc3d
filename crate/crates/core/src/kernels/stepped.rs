//! Time stepping of the mode equations for media with tabulated kernels.
//!
//! A piecewise-linear kernel acts on a signal `x` through finitely many delayed
//! antiderivatives, `χ * x = Σ_j c_j X_{n_j}(t - d_j)` with `X_n` the `n`-fold
//! integral of `x`. Each kernel then solves a linear delay equation, integrated
//! by classical RK4 with cubic Hermite interpolation of the stored history.

use crate::error::{invalid, Result};
use crate::medium::{MediumModel, SusceptibilityKernel};
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Phase advanced per step by the fastest oscillation in the problem.
const PHASE_PER_STEP: f64 = 2e-3;
/// Longest trajectory kept for one drive.
const MAX_STEPS: usize = 1 << 17;

#[derive(Debug, Clone, Copy)]
struct Tap {
    coef: f64,
    /// Number of integrations applied to the signal.
    order: i32,
    delay: f64,
}

/// A kernel in the form `instant·x + Σ taps + (Lorentz auxiliary state)`.
#[derive(Debug, Clone, Default)]
struct Memory {
    instant: f64,
    taps: Vec<Tap>,
    /// `(ω₀, γ, ω_p)`.
    resonance: Option<(f64, f64, f64)>,
}

impl Memory {
    fn new(kernel: &SusceptibilityKernel) -> Self {
        use SusceptibilityKernel::*;
        let tap = |coef: f64, order: i32, delay: f64| Tap { coef, order, delay };
        match kernel {
            Zero => Memory::default(),
            Instantaneous { chi0 } => Memory { instant: *chi0, ..Memory::default() },
            Step { beta } => Memory { taps: vec![tap(*beta, 1, 0.0)], ..Memory::default() },
            Box { chi0, delta } => {
                let k = chi0 / delta;
                Memory { taps: vec![tap(k, 1, 0.0), tap(-k, 1, *delta)], ..Memory::default() }
            }
            Lorentz { omega0, gamma, omega_p } => Memory { resonance: Some((*omega0, *gamma, *omega_p)), ..Memory::default() },
            Tabulated(tab) => {
                let y = tab.samples();
                let mut taps = vec![tap(y[0], 1, 0.0)];
                let mut slope = 0.0;
                for j in 1..y.len() {
                    let next = (y[j] - y[j - 1]) / tab.dt();
                    taps.push(tap(next - slope, 2, tab.start() + (j - 1) as f64 * tab.dt()));
                    slope = next;
                }
                taps.push(tap(-slope, 2, tab.t_max()));
                taps.push(tap(-y[y.len() - 1], 1, tab.t_max()));
                taps.retain(|t| t.coef != 0.0);
                Memory { taps, ..Memory::default() }
            }
        }
    }

    /// Rate scale of the kernel, used to size steps.
    fn rate(&self) -> f64 {
        let taps = self.taps.iter().map(|t| if t.order == 1 { t.coef.abs() } else { t.coef.abs().sqrt() }).fold(0.0, f64::max);
        let res = self.resonance.map_or(0.0, |(w0, g, wp)| w0.max(g).max(wp));
        taps.max(res)
    }

    fn shortest_delay(&self) -> Option<f64> {
        self.taps.iter().map(|t| t.delay).filter(|d| *d > 0.0).reduce(f64::min)
    }

    /// `Σ c_j X_{n_j - shift}(t - d_j)`, with `X_n` read by `signal`.
    fn taps_at(&self, shift: i32, t: f64, now: impl Fn(i32) -> C, past: impl Fn(i32, f64) -> C) -> C {
        self.taps
            .iter()
            .map(|tap| {
                let order = tap.order - shift;
                tap.coef * if tap.delay == 0.0 { now(order) } else { past(order, t - tap.delay) }
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Limits from above at breakpoints: the first stage of a step.
    Right,
    Left,
}

#[derive(Debug, Clone)]
struct Trajectory<const N: usize> {
    h: f64,
    states: Vec<[C; N]>,
    /// Derivative at each node, as the first stage of the following step.
    right: Vec<[C; N]>,
    /// Derivative at each node, as the last stage of the preceding step.
    left: Vec<[C; N]>,
}

struct Past<'a, const N: usize> {
    traj: &'a Trajectory<N>,
    side: Side,
}

impl<const N: usize> Past<'_, N> {
    /// Component `c` at `tau`; zero before the start.
    fn at(&self, c: usize, tau: f64) -> C {
        let tr = self.traj;
        let eps = 1e-9 * tr.h;
        if tau < -eps {
            return ZERO;
        }
        if tau <= eps {
            return if self.side == Side::Right { tr.states[0][c] } else { ZERO };
        }
        let x = tau / tr.h;
        let j = x.floor() as usize;
        let u = x - j as f64;
        let last = tr.states.len() - 1;
        if j >= last {
            return tr.states[last][c];
        }
        if u < 1e-9 {
            return tr.states[j][c];
        }
        if u > 1.0 - 1e-9 {
            return tr.states[j + 1][c];
        }
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        tr.states[j][c] * h00 + tr.right[j][c] * (tr.h * h10) + tr.states[j + 1][c] * h01 + tr.left[j + 1][c] * (tr.h * h11)
    }
}

trait System<const N: usize> {
    fn initial(&self) -> [C; N];
    fn rate(&self, t: f64, y: &[C; N], past: &Past<N>) -> [C; N];
}

fn axpy<const N: usize>(y: &[C; N], k: &[C; N], a: f64) -> [C; N] {
    std::array::from_fn(|i| y[i] + k[i] * a)
}

impl<const N: usize> Trajectory<N> {
    fn new(sys: &impl System<N>, h: f64) -> Self {
        let y0 = sys.initial();
        let mut tr = Trajectory { h, states: vec![y0], right: Vec::new(), left: vec![[ZERO; N]] };
        let r = sys.rate(0.0, &y0, &Past { traj: &tr, side: Side::Right });
        tr.right.push(r);
        tr
    }

    fn extend_to(&mut self, sys: &impl System<N>, n: usize) -> Result<()> {
        if n > MAX_STEPS {
            return Err(invalid(format!(
                "time {} needs {n} steps of the delay equation, more than {MAX_STEPS}",
                n as f64 * self.h
            )));
        }
        while self.states.len() <= n {
            let last = self.states.len() - 1;
            let t = last as f64 * self.h;
            let y = self.advance(sys, last, self.h);
            let left = sys.rate(t + self.h, &y, &Past { traj: self, side: Side::Left });
            self.states.push(y);
            self.left.push(left);
            let right = sys.rate(t + self.h, &y, &Past { traj: self, side: Side::Right });
            self.right.push(right);
        }
        Ok(())
    }

    /// RK4 step of length `theta <= h` from node `n`.
    fn advance(&self, sys: &impl System<N>, n: usize, theta: f64) -> [C; N] {
        let t = n as f64 * self.h;
        let y = &self.states[n];
        let k1 = self.right[n];
        let mid = Past { traj: self, side: Side::Right };
        let k2 = sys.rate(t + theta / 2.0, &axpy(y, &k1, theta / 2.0), &mid);
        let k3 = sys.rate(t + theta / 2.0, &axpy(y, &k2, theta / 2.0), &mid);
        let k4 = sys.rate(t + theta, &axpy(y, &k3, theta), &Past { traj: self, side: Side::Left });
        std::array::from_fn(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (theta / 6.0))
    }

    /// State at `t`, extending the stored history as needed.
    fn state(&mut self, sys: &impl System<N>, t: f64) -> Result<[C; N]> {
        let x = t / self.h;
        let n = x.floor() as usize;
        let theta = t - n as f64 * self.h;
        if theta <= 1e-12 * self.h {
            self.extend_to(sys, n)?;
            return Ok(self.states[n]);
        }
        if self.h - theta <= 1e-12 * self.h {
            self.extend_to(sys, n + 1)?;
            return Ok(self.states[n + 1]);
        }
        self.extend_to(sys, n)?;
        Ok(self.advance(sys, n, theta))
    }
}

// Mode system: y = h(t) with its derivative and two antiderivatives, Lorentz
// auxiliaries for χ_e * y and χ_m * y, and three drives by e^{pt}.
const Y: usize = 0;
const DY: usize = 1;
const Y1: usize = 2;
const Y2: usize = 3;
const AE: usize = 4;
const DAE: usize = 5;
const AM: usize = 6;
const DAM: usize = 7;
const XI: usize = 8;
const MAG: usize = 9;
const ELE: usize = 10;
const MODE_DIM: usize = 11;

fn mode_component(order: i32) -> usize {
    match order {
        -1 => DY,
        0 => Y,
        1 => Y1,
        2 => Y2,
        _ => unreachable!("kernel taps integrate at most twice"),
    }
}

fn resonance_accel(res: Option<(f64, f64, f64)>, x: C, a: C, da: C) -> C {
    res.map_or(ZERO, |(w0, g, wp)| x * (wp * wp) - da * g - a * (w0 * w0))
}

struct ModeSystem<'a> {
    e: &'a Memory,
    m: &'a Memory,
    w2: f64,
    pole: C,
}

impl ModeSystem<'_> {
    fn taps(&self, mem: &Memory, shift: i32, t: f64, y: &[C; MODE_DIM], past: &Past<MODE_DIM>) -> C {
        mem.taps_at(shift, t, |o| y[mode_component(o)], |o, tau| past.at(mode_component(o), tau))
    }

    /// `χ_m * y`.
    fn magnetic(&self, t: f64, y: &[C; MODE_DIM], past: &Past<MODE_DIM>) -> C {
        y[Y] * self.m.instant + self.taps(self.m, 0, t, y, past) + y[AM]
    }

    /// `r = d/dt (y + χ_e * y)`.
    fn r(&self, t: f64, y: &[C; MODE_DIM], past: &Past<MODE_DIM>) -> C {
        y[DY] * (1.0 + self.e.instant) + self.taps(self.e, 1, t, y, past) + y[DAE]
    }
}

impl System<MODE_DIM> for ModeSystem<'_> {
    fn initial(&self) -> [C; MODE_DIM] {
        let mut y = [ZERO; MODE_DIM];
        y[DY] = C::new(1.0 / (1.0 + self.e.instant), 0.0);
        y
    }

    fn rate(&self, t: f64, y: &[C; MODE_DIM], past: &Past<MODE_DIM>) -> [C; MODE_DIM] {
        let ae2 = resonance_accel(self.e.resonance, y[Y], y[AE], y[DAE]);
        let am2 = resonance_accel(self.m.resonance, y[Y], y[AM], y[DAM]);
        let e2 = self.taps(self.e, 2, t, y, past) + ae2;
        let cm = self.magnetic(t, y, past);
        let accel = (-e2 - y[Y] * self.w2 + cm * self.w2) / (1.0 + self.e.instant);
        let r = self.r(t, y, past);
        let mut d = [ZERO; MODE_DIM];
        d[Y] = y[DY];
        d[DY] = accel;
        d[Y1] = y[Y];
        d[Y2] = y[Y1];
        d[AE] = y[DAE];
        d[DAE] = ae2;
        d[AM] = y[DAM];
        d[DAM] = am2;
        d[XI] = self.pole * y[XI] + y[Y];
        d[MAG] = self.pole * y[MAG] + r;
        d[ELE] = self.pole * y[ELE] + (y[Y] - cm) * self.w2;
        d
    }
}

// Longitudinal system: antiderivatives of q with (1 + χ_e*) q = e^{pt}.
const Q1: usize = 0;
const Q2: usize = 1;
const QA: usize = 2;
const DQA: usize = 3;
const LONG_DIM: usize = 4;

fn long_component(order: i32) -> usize {
    match order {
        1 => Q1,
        2 => Q2,
        _ => unreachable!("longitudinal taps act on antiderivatives"),
    }
}

struct LongSystem<'a> {
    e: &'a Memory,
    pole: C,
}

impl LongSystem<'_> {
    fn q(&self, t: f64, y: &[C; LONG_DIM], past: &Past<LONG_DIM>) -> C {
        let memory = self.e.taps_at(0, t, |o| y[long_component(o)], |o, tau| past.at(long_component(o), tau));
        ((self.pole * t).exp() - memory - y[QA]) / (1.0 + self.e.instant)
    }
}

impl System<LONG_DIM> for LongSystem<'_> {
    fn initial(&self) -> [C; LONG_DIM] {
        [ZERO; LONG_DIM]
    }

    fn rate(&self, t: f64, y: &[C; LONG_DIM], past: &Past<LONG_DIM>) -> [C; LONG_DIM] {
        let q = self.q(t, y, past);
        [q, y[Q1], y[DQA], resonance_accel(self.e.resonance, q, y[QA], y[DQA])]
    }
}

/// Kernel values at one time, all from one trajectory.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeSample {
    /// `1/D`.
    pub h: C,
    /// `s(1 + χ̃_e)/D`.
    pub r: C,
    /// `1/((s - p) D)`.
    pub xi: C,
    /// `s/((s - p) D)`.
    pub dxi: C,
    /// `s(1 + χ̃_e)/((s - p) D)`.
    pub magnetic: C,
    /// `ω_q²(1 - χ̃_m)/((s - p) D)`.
    pub electric: C,
}

type Key = (u64, u64);

fn key(p: C) -> Key {
    (p.re.to_bits(), p.im.to_bits())
}

/// Memoized delay-equation trajectories, one per drive pole.
#[derive(Clone)]
pub(crate) struct Stepper {
    e: Memory,
    m: Memory,
    omega_q: f64,
    modes: Arc<Mutex<HashMap<Key, Trajectory<MODE_DIM>>>>,
    longitudinal: Arc<Mutex<HashMap<Key, Trajectory<LONG_DIM>>>>,
}

impl fmt::Debug for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stepper")
            .field("electric_taps", &self.e.taps.len())
            .field("magnetic_taps", &self.m.taps.len())
            .field("omega_q", &self.omega_q)
            .finish()
    }
}

impl Stepper {
    pub fn new(medium: &MediumModel, omega_q: f64) -> Self {
        Stepper {
            e: Memory::new(&medium.chi_e),
            m: Memory::new(&medium.chi_m),
            omega_q,
            modes: Arc::default(),
            longitudinal: Arc::default(),
        }
    }

    /// Step commensurate with the shortest kernel delay.
    fn step(&self, pole: C, magnetic: bool) -> f64 {
        let mut fast = pole.norm().max(self.e.rate());
        let mut delay = self.e.shortest_delay();
        if magnetic {
            let stiff = (1.0 + self.m.instant.abs()) / (1.0 + self.e.instant).min(1.0);
            fast = fast.max(self.omega_q * stiff.sqrt()).max(self.m.rate());
            delay = match (delay, self.m.shortest_delay()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
        let target = PHASE_PER_STEP / fast.max(f64::MIN_POSITIVE);
        match delay {
            Some(d) => d / (d / target).ceil(),
            None => target,
        }
    }

    pub fn mode(&self, pole: C, t: f64) -> Result<ModeSample> {
        let sys = ModeSystem { e: &self.e, m: &self.m, w2: self.omega_q * self.omega_q, pole };
        let mut cache = self.modes.lock().expect("trajectory cache poisoned");
        let traj = cache.entry(key(pole)).or_insert_with(|| Trajectory::new(&sys, self.step(pole, true)));
        let y = traj.state(&sys, t)?;
        let past = Past { traj, side: Side::Left };
        Ok(ModeSample {
            h: y[Y],
            r: sys.r(t, &y, &past),
            xi: y[XI],
            dxi: pole * y[XI] + y[Y],
            magnetic: y[MAG],
            electric: y[ELE],
        })
    }

    /// `1/((1 + χ̃_e)(s - p))`.
    pub fn longitudinal(&self, pole: C, t: f64) -> Result<C> {
        let sys = LongSystem { e: &self.e, pole };
        let mut cache = self.longitudinal.lock().expect("trajectory cache poisoned");
        let traj = cache.entry(key(pole)).or_insert_with(|| Trajectory::new(&sys, self.step(pole, false)));
        let y = traj.state(&sys, t)?;
        Ok(sys.q(t, &y, &Past { traj, side: Side::Left }))
    }
}
