//! Lossless two-step transfer in the single-mode (Jaynes–Cummings) limit.
//!
//! In step 1 only the sender couples to the resonant mode q with strength
//! `g·S(s,q)`; in step 2 only the receiver does, with `g·S(r,q)`. For one
//! excitation the whole protocol reduces to the transfer amplitude
//! `f = −sin(S(s,q)·gt1)·sin(S(r,q)·gt2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_basis::ModeBasis;

/// Pure qubit state `cos(θ/2)|g⟩ + e^{iφ} sin(θ/2)|e⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub theta: f64,
    pub phi: f64,
}

impl BlochState {
    /// Builds a state, wrapping φ into [0, 2π).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::InvalidConfiguration(format!(
                "Bloch angles out of range: theta={theta}, phi={phi}"
            )));
        }
        Ok(BlochState {
            theta,
            phi: phi.rem_euclid(2.0 * PI),
        })
    }

    pub fn ground() -> Self {
        BlochState { theta: 0.0, phi: 0.0 }
    }

    pub fn excited() -> Self {
        BlochState { theta: PI, phi: 0.0 }
    }

    /// The six eigenstates of σx, σy, σz: +z, −z, +x, −x, +y, −y.
    pub fn axis_states() -> [BlochState; 6] {
        [
            BlochState { theta: 0.0, phi: 0.0 },
            BlochState { theta: PI, phi: 0.0 },
            BlochState { theta: FRAC_PI_2, phi: 0.0 },
            BlochState { theta: FRAC_PI_2, phi: PI },
            BlochState { theta: FRAC_PI_2, phi: FRAC_PI_2 },
            BlochState { theta: FRAC_PI_2, phi: 3.0 * FRAC_PI_2 },
        ]
    }

    /// (amplitude on |g⟩, amplitude on |e⟩).
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let (s, c) = (self.theta / 2.0).sin_cos();
        (Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi))
    }
}

/// Timing of one protocol run. Durations are in units of 1/g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub gt1: f64,
    pub gt2: f64,
    #[serde(default)]
    pub gt_delay: f64,
    /// Relative error on the step-1 duration, applied as `gt1·(1+dt1_frac)`.
    #[serde(default)]
    pub dt1_frac: f64,
    #[serde(default)]
    pub dt2_frac: f64,
    #[serde(default)]
    pub measure_after_step1: bool,
}

impl ProtocolSchedule {
    pub fn new(gt1: f64, gt2: f64) -> Self {
        ProtocolSchedule {
            gt1,
            gt2,
            gt_delay: 0.0,
            dt1_frac: 0.0,
            dt2_frac: 0.0,
            measure_after_step1: false,
        }
    }

    pub fn with_delay(mut self, gt_delay: f64) -> Self {
        self.gt_delay = gt_delay;
        self
    }

    pub fn with_timing_errors(mut self, dt1_frac: f64, dt2_frac: f64) -> Self {
        self.dt1_frac = dt1_frac;
        self.dt2_frac = dt2_frac;
        self
    }

    pub fn with_measurement(mut self, measure: bool) -> Self {
        self.measure_after_step1 = measure;
        self
    }

    pub fn effective_gt1(&self) -> f64 {
        self.gt1 * (1.0 + self.dt1_frac)
    }

    pub fn effective_gt2(&self) -> f64 {
        self.gt2 * (1.0 + self.dt2_frac)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gt1, self.gt2, self.gt_delay, self.dt1_frac, self.dt2_frac]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfiguration(format!(
                "schedule has non-finite entries: {self:?}"
            )));
        }
        if self.gt1 < 0.0 || self.gt2 < 0.0 || self.gt_delay < 0.0 {
            return Err(Error::InvalidConfiguration(format!(
                "durations must be non-negative: gt1={}, gt2={}, delay={}",
                self.gt1, self.gt2, self.gt_delay
            )));
        }
        if self.dt1_frac.abs() >= 1.0 || self.dt2_frac.abs() >= 1.0 {
            return Err(Error::InvalidConfiguration(format!(
                "timing errors must satisfy |dt| < 1: dt1={}, dt2={}",
                self.dt1_frac, self.dt2_frac
            )));
        }
        Ok(())
    }
}

/// One atom and one bosonic mode truncated at `n_max` photons.
///
/// Basis ordering: index `2n` is |g,n⟩ and `2n+1` is |e,n⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomModeState {
    n_max: usize,
    amps: Vec<Complex64>,
}

impl AtomModeState {
    pub fn from_amplitudes(n_max: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidConfiguration("photon cutoff must be >= 1".into()));
        }
        if amps.len() != 2 * (n_max + 1) {
            return Err(Error::ContractViolation(format!(
                "expected {} amplitudes for n_max={n_max}, got {}",
                2 * (n_max + 1),
                amps.len()
            )));
        }
        Ok(AtomModeState { n_max, amps })
    }

    pub fn basis_state(n_max: usize, excited: bool, photons: usize) -> Result<Self> {
        if photons > n_max {
            return Err(Error::IndexOutOfRange {
                name: "photons",
                value: photons,
                max: n_max,
            });
        }
        let mut amps = vec![Complex64::default(); 2 * (n_max + 1)];
        amps[2 * photons + usize::from(excited)] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(n_max, amps)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, excited: bool, photons: usize) -> Complex64 {
        self.amps[2 * photons + usize::from(excited)]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Resonant JC evolution of atom `site` with mode `mode` for a time `gt`.
///
/// Each pair {|e,n⟩, |g,n+1⟩} rotates by `S(site,mode)·gt·√(n+1)`, with
/// `−i sin` on the off-diagonal. |g,0⟩ is dark and |e,n_max⟩ is left alone
/// since its partner lies outside the truncation.
pub fn jc_propagator(
    basis: &ModeBasis,
    site: usize,
    mode: usize,
    gt: f64,
    state: &AtomModeState,
) -> Result<AtomModeState> {
    let coupling = basis.amplitude(site, mode)?;
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::ContractViolation(format!(
            "input state not normalized (norm {norm})"
        )));
    }
    let mut out = state.amps.clone();
    if coupling == 0.0 {
        return Ok(AtomModeState {
            n_max: state.n_max,
            amps: out,
        });
    }
    let minus_i = Complex64::new(0.0, -1.0);
    for n in 0..state.n_max {
        let angle = coupling * gt * ((n + 1) as f64).sqrt();
        let (s, c) = angle.sin_cos();
        let e = 2 * n + 1;
        let g = 2 * (n + 1);
        let (ae, ag) = (state.amps[e], state.amps[g]);
        out[e] = ae * c + minus_i * s * ag;
        out[g] = ag * c + minus_i * s * ae;
    }
    Ok(AtomModeState {
        n_max: state.n_max,
        amps: out,
    })
}

/// `f = −sin(S(s,q)·gt1)·sin(S(r,q)·gt2)`.
pub fn transfer_function(
    basis: &ModeBasis,
    sender: usize,
    receiver: usize,
    mode: usize,
    gt1: f64,
    gt2: f64,
) -> Result<f64> {
    let a = basis.amplitude(sender, mode)?;
    let b = basis.amplitude(receiver, mode)?;
    Ok(-(a * gt1).sin() * (b * gt2).sin())
}

/// Pure-state fidelity of the lossless protocol for transfer amplitude `f`.
pub fn ideal_fidelity(state: &BlochState, f: f64) -> f64 {
    let (s, c) = (state.theta / 2.0).sin_cos();
    let (c2, s2) = (c * c, s * s);
    c2 * c2 + s2 * s2 * f * f + 2.0 * s2 * c2 * f
}

/// Uniform Bloch-sphere average of [`ideal_fidelity`]: `(1 + f + f²)/3`.
pub fn ideal_average_fidelity(f: f64) -> f64 {
    (1.0 + f + f * f) / 3.0
}

/// Perfect-transfer timing as multiples of a quarter Rabi turn per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfectTiming {
    pub sender_amplitude: f64,
    pub receiver_amplitude: f64,
    /// Always 1: `|S(s,q)|·gt1 = π/2`.
    pub sender_quarter_turns: u32,
    /// 1 or 3: `|S(r,q)|·gt2 = π/2` or `3π/2`.
    pub receiver_quarter_turns: u32,
}

impl PerfectTiming {
    pub fn gt1(&self) -> f64 {
        self.sender_quarter_turns as f64 * FRAC_PI_2 / self.sender_amplitude.abs()
    }

    pub fn gt2(&self) -> f64 {
        self.receiver_quarter_turns as f64 * FRAC_PI_2 / self.receiver_amplitude.abs()
    }

    pub fn schedule(&self) -> ProtocolSchedule {
        ProtocolSchedule::new(self.gt1(), self.gt2())
    }

    /// Closed forms such as `π/√2` or `3√3π/2`, when `1/S²` is rational.
    pub fn symbolic(&self) -> (Option<String>, Option<String>) {
        (
            symbolic_duration(self.sender_quarter_turns, self.sender_amplitude),
            symbolic_duration(self.receiver_quarter_turns, self.receiver_amplitude),
        )
    }
}

/// Shortest sender pulse that empties the sender, then the shortest receiver
/// pulse that makes `f = +1`.
pub fn perfect_timing(
    basis: &ModeBasis,
    sender: usize,
    receiver: usize,
    mode: usize,
) -> Result<PerfectTiming> {
    let a = basis.amplitude(sender, mode)?;
    let b = basis.amplitude(receiver, mode)?;
    if a == 0.0 {
        return Err(Error::Decoupled { site: sender, mode });
    }
    if b == 0.0 {
        return Err(Error::Decoupled {
            site: receiver,
            mode,
        });
    }
    // After |a|·gt1 = π/2, sin(a·gt1) = sign(a). f = +1 then needs
    // sin(|b|·gt2) = −sign(a)·sign(b).
    let needed = -a.signum() * b.signum();
    let receiver_quarter_turns = if needed > 0.0 { 1 } else { 3 };
    Ok(PerfectTiming {
        sender_amplitude: a,
        receiver_amplitude: b,
        sender_quarter_turns: 1,
        receiver_quarter_turns,
    })
}

pub fn perfect_schedule(
    basis: &ModeBasis,
    sender: usize,
    receiver: usize,
    mode: usize,
) -> Result<ProtocolSchedule> {
    perfect_timing(basis, sender, receiver, mode).map(|t| t.schedule())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Splits `n` into `(a, b)` with `n = a²·b` and `b` squarefree.
fn split_square(n: u64) -> (u64, u64) {
    let mut a = 1;
    let mut b = n;
    let mut p = 2;
    while p * p <= b {
        while b % (p * p) == 0 {
            b /= p * p;
            a *= p;
        }
        p += 1;
    }
    (a, b)
}

/// Renders `quarter_turns·(π/2)/|amplitude|` symbolically if `1/amplitude²`
/// is a small-denominator rational.
pub fn symbolic_duration(quarter_turns: u32, amplitude: f64) -> Option<String> {
    if amplitude == 0.0 || !amplitude.is_finite() {
        return None;
    }
    let x = 1.0 / (amplitude * amplitude);
    let (p, d) = (1..=12u64).find_map(|d| {
        let p = (x * d as f64).round();
        ((x * d as f64 - p).abs() < 1e-9 * x.max(1.0) && p >= 1.0).then_some((p as u64, d))
    })?;
    // m·√(p/d)/2 = m·√(p·d)/(2d)
    let (a, b) = split_square(p * d);
    let mut num = quarter_turns as u64 * a;
    let mut den = 2 * d;
    let g = gcd(num, den);
    num /= g;
    den /= g;
    let coeff = if num == 1 { String::new() } else { num.to_string() };
    let text = match (b, den) {
        (1, 1) => format!("{coeff}π"),
        (1, _) => format!("{coeff}π/{den}"),
        (2, 2) => format!("{coeff}π/√2"),
        (_, 1) => format!("{coeff}√{b}π"),
        _ => format!("{coeff}√{b}π/{den}"),
    };
    Some(text)
}
