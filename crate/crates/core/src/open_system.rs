//! Dissipative two-step protocol on the four-state space
//! {|g_s g_r 0⟩, |e_s g_r 0⟩, |g_s e_r 0⟩, |g_s g_r 1_q⟩}.
//!
//! Only the resonant mode q is kept; it leaks through the collective
//! channel `b_q` at rate `N·γ` (or `γ` with uniform scaling) and each atom
//! decays to its ground state at its own rate. The zero-temperature vacuum
//! is the only stationary state.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal_protocol::{perfect_schedule, BlochState, ProtocolSchedule};
use crate::integrator::{Dopri5, Tolerance};
use crate::mode_basis::ModeBasis;
use crate::optimize::golden_section_max;
use crate::params::ChainParams;

pub const DEFAULT_TOLERANCE: Tolerance = Tolerance::new(1e-10, 1e-13);

pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

/// Allowed relative distance between the optimized and the ideal schedule.
pub const OPTIMUM_PROXIMITY: f64 = 0.02;

/// Index of each basis state.
pub const VACUUM: usize = 0;
pub const SENDER_EXCITED: usize = 1;
pub const RECEIVER_EXCITED: usize = 2;
pub const PHOTON: usize = 3;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Step1,
    Delay,
    Step2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Matrix4<C>,
}

impl DensityMatrix {
    pub const DIM: usize = 4;

    pub fn from_matrix(entries: Matrix4<C>) -> Self {
        DensityMatrix { entries }
    }

    pub fn pure(psi: &Vector4<C>) -> Self {
        DensityMatrix {
            entries: psi * psi.adjoint(),
        }
    }

    pub fn vacuum() -> Self {
        let mut psi = Vector4::zeros();
        psi[VACUUM] = C::new(1.0, 0.0);
        Self::pure(&psi)
    }

    /// Sender in `state`, receiver in |g⟩, field in vacuum.
    pub fn initial(state: &BlochState) -> Self {
        let (g, e) = state.amplitudes();
        let mut psi = Vector4::zeros();
        psi[VACUUM] = g;
        psi[SENDER_EXCITED] = e;
        Self::pure(&psi)
    }

    pub fn dim(&self) -> usize {
        Self::DIM
    }

    pub fn entries(&self) -> &Matrix4<C> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.entries - self.entries.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.entries + self.entries.adjoint()) * C::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.entries[(index, index)].re
    }

    /// Expected number of excitations (atomic plus photonic).
    pub fn excitation(&self) -> f64 {
        self.population(SENDER_EXCITED) + self.population(RECEIVER_EXCITED) + self.population(PHOTON)
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation(&self, psi: &Vector4<C>) -> f64 {
        (psi.adjoint() * self.entries * psi)[(0, 0)].re
    }

    fn check(&self, gt: f64, check_trace: bool) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOLERANCE {
            return Err(Error::InvariantViolation {
                gt,
                message: format!("hermiticity error {herm:e}"),
            });
        }
        if check_trace {
            let tr = self.trace();
            if (tr - 1.0).abs() > TRACE_TOLERANCE {
                return Err(Error::InvariantViolation {
                    gt,
                    message: format!("trace {tr}"),
                });
            }
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOLERANCE {
            return Err(Error::InvariantViolation {
                gt,
                message: format!("negative eigenvalue {min:e}"),
            });
        }
        Ok(())
    }
}

/// Target state: sender and field in their ground states, receiver holding
/// the input qubit.
pub fn target_state(state: &BlochState) -> Vector4<C> {
    let (g, e) = state.amplitudes();
    let mut psi = Vector4::zeros();
    psi[VACUUM] = g;
    psi[RECEIVER_EXCITED] = e;
    psi
}

fn transition(to: usize, from: usize) -> Matrix4<C> {
    let mut m = Matrix4::zeros();
    m[(to, from)] = C::new(1.0, 0.0);
    m
}

/// Precomputed generators for one parameter set.
#[derive(Debug, Clone)]
pub struct OpenModel {
    params: ChainParams,
    h_step1: Matrix4<C>,
    h_step2: Matrix4<C>,
    /// Jump operator and its rate; the receiver channel is listed last.
    mode_jump: (Matrix4<C>, f64),
    sender_jump: (Matrix4<C>, f64),
    receiver_jump: (Matrix4<C>, f64),
    solver: Dopri5,
}

impl OpenModel {
    pub fn new(params: &ChainParams) -> Result<Self> {
        Self::with_tolerance(params, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(params: &ChainParams, tol: Tolerance) -> Result<Self> {
        params.validate()?;
        let basis = ModeBasis::new(params.n_cavities)?;
        let a = basis.amplitude(params.sender, params.resonant_mode)?;
        let b = basis.amplitude(params.receiver, params.resonant_mode)?;
        let exchange = |site: usize, strength: f64| {
            (transition(PHOTON, site) + transition(site, PHOTON)) * C::new(strength, 0.0)
        };
        Ok(OpenModel {
            params: params.clone(),
            h_step1: exchange(SENDER_EXCITED, a),
            h_step2: exchange(RECEIVER_EXCITED, b),
            mode_jump: (transition(VACUUM, PHOTON), params.mode_decay_rate()),
            sender_jump: (transition(VACUUM, SENDER_EXCITED), params.kappa_s_over_g),
            receiver_jump: (transition(VACUUM, RECEIVER_EXCITED), params.kappa_r_over_g),
            solver: Dopri5::new(tol),
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// dρ/d(gt) for the given stage.
    pub fn rhs(&self, stage: Stage, rho: &Matrix4<C>) -> Matrix4<C> {
        let minus_i = C::new(0.0, -1.0);
        let mut out = match stage {
            Stage::Step1 => (self.h_step1 * rho - rho * self.h_step1) * minus_i,
            Stage::Step2 => (self.h_step2 * rho - rho * self.h_step2) * minus_i,
            Stage::Delay => Matrix4::zeros(),
        };
        let mut add = |(l, rate): &(Matrix4<C>, f64)| {
            if *rate == 0.0 {
                return;
            }
            let ld = l.adjoint();
            let ldl = ld * l;
            out += (l * rho * ld - (ldl * rho + rho * ldl) * C::new(0.5, 0.0)) * C::new(*rate, 0.0);
        };
        add(&self.mode_jump);
        add(&self.sender_jump);
        if stage == Stage::Step2 {
            add(&self.receiver_jump);
        }
        out
    }

    fn evolve(&self, stage: Stage, rho: &mut Matrix4<C>, t0: f64, duration: f64) -> Result<()> {
        if duration == 0.0 {
            return Ok(());
        }
        self.solver
            .integrate(t0, t0 + duration, rho.as_mut_slice(), |_, y, dy| {
                let m = Matrix4::from_column_slice(y);
                dy.copy_from_slice(self.rhs(stage, &m).as_slice());
            })?;
        Ok(())
    }
}

pub fn lindblad_rhs(params: &ChainParams, stage: Stage, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let model = OpenModel::new(params)?;
    Ok(DensityMatrix::from_matrix(model.rhs(stage, &rho.entries)))
}

/// Populations and instantaneous target overlap at one sampled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub gt: f64,
    pub p_es: f64,
    pub p_er: f64,
    pub p_photon: f64,
    pub p_vac: f64,
    pub f_inst: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Sample the trajectory every `sample_dt` (and at each stage boundary).
    pub sample_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeRunResult {
    pub rho_final: DensityMatrix,
    pub fidelity: f64,
    pub avg_fidelity: f64,
    pub success_probability: f64,
    pub timeline: Option<Vec<TimelinePoint>>,
}

/// Outcome of a single input state before any renormalization.
struct Branch {
    /// Normalized final state (conditional on success when measuring).
    rho: Matrix4<C>,
    /// Probability of the kept measurement branch, 1 without measurement.
    success: f64,
    timeline: Option<Vec<TimelinePoint>>,
}

fn sample(rho: &Matrix4<C>, target: &Vector4<C>, gt: f64) -> TimelinePoint {
    let dm = DensityMatrix::from_matrix(*rho);
    TimelinePoint {
        gt,
        p_es: dm.population(SENDER_EXCITED),
        p_er: dm.population(RECEIVER_EXCITED),
        p_photon: dm.population(PHOTON),
        p_vac: dm.population(VACUUM),
        f_inst: dm.expectation(target),
    }
}

fn run_branch(
    model: &OpenModel,
    schedule: &ProtocolSchedule,
    initial: &BlochState,
    opts: &RunOptions,
) -> Result<Branch> {
    schedule.validate()?;
    let target = target_state(initial);
    let mut rho = *DensityMatrix::initial(initial).entries();
    let mut success = 1.0;
    let mut timeline = opts.sample_dt.map(|_| vec![sample(&rho, &target, 0.0)]);
    let segments = [
        (Stage::Step1, schedule.effective_gt1()),
        (Stage::Delay, schedule.gt_delay),
        (Stage::Step2, schedule.effective_gt2()),
    ];
    let mut t = 0.0;
    for (stage, duration) in segments {
        let chunk = opts.sample_dt.filter(|dt| *dt > 0.0).unwrap_or(duration);
        let mut done = 0.0;
        while done < duration {
            let step = chunk.min(duration - done);
            let before = DensityMatrix::from_matrix(rho).excitation();
            model.evolve(stage, &mut rho, t, step)?;
            done += step;
            t += step;
            let dm = DensityMatrix::from_matrix(rho);
            dm.check(t, true)?;
            if stage == Stage::Delay && dm.excitation() > before + TRACE_TOLERANCE {
                return Err(Error::InvariantViolation {
                    gt: t,
                    message: "excitation grew during delay".into(),
                });
            }
            if let Some(tl) = timeline.as_mut() {
                tl.push(sample(&rho, &target, t));
            }
            if step == 0.0 {
                break;
            }
        }
        if stage == Stage::Step1 && schedule.measure_after_step1 {
            // keep the branch where the sender is found in |g⟩
            let mut projector = Matrix4::<C>::identity();
            projector[(SENDER_EXCITED, SENDER_EXCITED)] = C::default();
            let kept = projector * rho * projector;
            success = kept.trace().re;
            if success <= 0.0 {
                return Err(Error::InvariantViolation {
                    gt: t,
                    message: "measurement branch has zero probability".into(),
                });
            }
            rho = kept / C::new(success, 0.0);
        }
    }
    Ok(Branch {
        rho,
        success,
        timeline,
    })
}

/// Result of averaging over the six axis states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageOutcome {
    /// Average fidelity; with measurement, weighted by the success
    /// probability of each input.
    pub avg_fidelity: f64,
    /// Mean success probability over the Bloch sphere.
    pub success_probability: f64,
}

/// Bloch average from the six axis inputs, which is exact because the
/// fidelity is quadratic in the input state.
pub fn average_outcome_with(model: &OpenModel, schedule: &ProtocolSchedule) -> Result<AverageOutcome> {
    let opts = RunOptions::default();
    let mut weighted = 0.0;
    let mut success = 0.0;
    for state in BlochState::axis_states() {
        let branch = run_branch(model, schedule, &state, &opts)?;
        let fid = DensityMatrix::from_matrix(branch.rho).expectation(&target_state(&state));
        weighted += branch.success * fid;
        success += branch.success;
    }
    Ok(AverageOutcome {
        avg_fidelity: weighted / success,
        success_probability: success / 6.0,
    })
}

pub fn average_outcome(params: &ChainParams, schedule: &ProtocolSchedule) -> Result<AverageOutcome> {
    average_outcome_with(&OpenModel::new(params)?, schedule)
}

pub fn average_fidelity(params: &ChainParams, schedule: &ProtocolSchedule) -> Result<f64> {
    average_outcome(params, schedule).map(|o| o.avg_fidelity)
}

pub fn run_protocol(
    params: &ChainParams,
    schedule: &ProtocolSchedule,
    initial: &BlochState,
) -> Result<DissipativeRunResult> {
    run_protocol_with(params, schedule, initial, &RunOptions::default())
}

pub fn run_protocol_with(
    params: &ChainParams,
    schedule: &ProtocolSchedule,
    initial: &BlochState,
    opts: &RunOptions,
) -> Result<DissipativeRunResult> {
    let model = OpenModel::new(params)?;
    let branch = run_branch(&model, schedule, initial, opts)?;
    let rho_final = DensityMatrix::from_matrix(branch.rho);
    let fidelity = rho_final.expectation(&target_state(initial));
    let avg = average_outcome_with(&model, schedule)?;
    Ok(DissipativeRunResult {
        rho_final,
        fidelity,
        avg_fidelity: avg.avg_fidelity,
        success_probability: branch.success,
        timeline: branch.timeline,
    })
}

/// Uniform Bloch average of F(θ,φ) by Gauss–Legendre quadrature in cos θ and
/// the trapezoid rule in φ. Slow; used to validate the six-state shortcut.
pub fn quadrature_average_fidelity(
    params: &ChainParams,
    schedule: &ProtocolSchedule,
    theta_nodes: usize,
    phi_nodes: usize,
) -> Result<f64> {
    let model = OpenModel::new(params)?;
    let (xs, ws) = gauss_legendre(theta_nodes);
    let opts = RunOptions::default();
    let mut total = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let theta = x.acos();
        for j in 0..phi_nodes {
            let phi = 2.0 * PI * j as f64 / phi_nodes as f64;
            let st = BlochState { theta, phi };
            let branch = run_branch(&model, schedule, &st, &opts)?;
            let fid = DensityMatrix::from_matrix(branch.rho).expectation(&target_state(&st));
            total += w * fid / phi_nodes as f64;
        }
    }
    // weights integrate d(cos θ) over [−1, 1]
    Ok(total / 2.0)
}

/// Nodes and weights of n-point Gauss–Legendre quadrature on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Search ranges for the two step durations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub gt1: (f64, f64),
    pub gt2: (f64, f64),
}

impl SearchWindow {
    /// Window of relative half-width `rel` around a schedule.
    pub fn around(schedule: &ProtocolSchedule, rel: f64) -> Self {
        SearchWindow {
            gt1: (schedule.gt1 * (1.0 - rel), schedule.gt1 * (1.0 + rel)),
            gt2: (schedule.gt2 * (1.0 - rel), schedule.gt2 * (1.0 + rel)),
        }
    }

    fn brackets(&self, schedule: &ProtocolSchedule) -> Result<()> {
        for (name, (lo, hi), x) in [("gt1", self.gt1, schedule.gt1), ("gt2", self.gt2, schedule.gt2)] {
            if !(lo >= 0.0 && lo < hi && lo <= x && x <= hi) {
                return Err(Error::NonBracketingWindow(format!(
                    "{name} window [{lo}, {hi}] does not contain {x}"
                )));
            }
        }
        Ok(())
    }
}

/// Coordinate-wise golden-section maximization of the average fidelity,
/// started from the ideal schedule. Fails if the optimum moves more than
/// [`OPTIMUM_PROXIMITY`] away from the ideal times.
pub fn max_average_fidelity(
    params: &ChainParams,
    window: &SearchWindow,
) -> Result<(ProtocolSchedule, f64)> {
    const TOL: f64 = 1e-4;
    let model = OpenModel::new(params)?;
    let basis = ModeBasis::new(params.n_cavities)?;
    let ideal = perfect_schedule(&basis, params.sender, params.receiver, params.resonant_mode)?;
    window.brackets(&ideal)?;

    let eval = |gt1: f64, gt2: f64| -> Result<f64> {
        average_outcome_with(&model, &ProtocolSchedule::new(gt1, gt2)).map(|o| o.avg_fidelity)
    };
    let ideal_value = eval(ideal.gt1, ideal.gt2)?;
    let (mut gt1, mut gt2, mut best) = (ideal.gt1, ideal.gt2, ideal_value);
    for _ in 0..50 {
        let (x1, f1) = golden_section_max(|x| eval(x, gt2), window.gt1.0, window.gt1.1, TOL)?;
        let moved1 = if f1 > best { (x1 - gt1).abs() } else { 0.0 };
        if f1 > best {
            gt1 = x1;
            best = f1;
        }
        let (x2, f2) = golden_section_max(|x| eval(gt1, x), window.gt2.0, window.gt2.1, TOL)?;
        let moved2 = if f2 > best { (x2 - gt2).abs() } else { 0.0 };
        if f2 > best {
            gt2 = x2;
            best = f2;
        }
        if moved1 < TOL && moved2 < TOL {
            break;
        }
    }
    if best <= ideal_value {
        return Ok((ideal, ideal_value));
    }
    let drift = ((gt1 - ideal.gt1) / ideal.gt1)
        .abs()
        .max(((gt2 - ideal.gt2) / ideal.gt2).abs());
    if drift > OPTIMUM_PROXIMITY {
        return Err(Error::OptimumDrift {
            gt1,
            gt2,
            drift,
            limit: OPTIMUM_PROXIMITY,
        });
    }
    Ok((ProtocolSchedule::new(gt1, gt2), best))
}
