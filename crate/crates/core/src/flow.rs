//! Explicit time integration of the gradient flow.
//!
//! The direct flow is `∂ₜ(A, φ) = −(τ₁, τ₂)` with `φ` re-projected onto the
//! fiber after every update. The DeTurck flow adds `−d d*ā` to the
//! connection equation, which makes it strictly parabolic, and integrates
//! the gauge angle alongside; [`reconstruct`] maps it back to a solution of
//! the direct flow.

use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{
    MonitorConfig, SingularEvent, SingularityTracker, TimeSeriesRow, TrackerOutcome,
};
use crate::energy::{energy, tension, EnergyBreakdown, TensionPair};
use crate::error::{Error, Result};
use crate::fiber::{self, Vec3};
use crate::fields::{apply_gauge, FlowState, GaugeField, GaugeTransform, SectionField};
use crate::gauge::coulomb_fix;
use crate::grid::{divergence, gradient, GridSpec, OneFormGrid, ScalarGrid};

/// Smallest step the adaptive controller will try.
pub const MIN_DT: f64 = 1e-12;
/// Halvings allowed for one step before it is rejected for good.
pub const MAX_HALVINGS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ExplicitEuler,
    Rk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ExplicitEuler => "euler",
            Scheme::Rk4 => "rk4",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" | "expliciteuler" | "explicit-euler" => Ok(Scheme::ExplicitEuler),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(Error::BadConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub max_time: f64,
    pub cfl_safety: f64,
    /// Halve `dt` and retry whenever a step raises the energy.
    pub adapt: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            scheme: Scheme::ExplicitEuler,
            max_time: 1.0,
            cfl_safety: 0.9,
            adapt: false,
        }
    }
}

impl IntegratorConfig {
    /// Largest stable step `cfl_safety · h² / 4`.
    pub fn stable_dt(&self, spec: &GridSpec) -> f64 {
        self.cfl_safety * spec.cell_area() / 4.0
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::BadConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::BadConfig(format!(
                "cfl_safety = {} must lie in (0, 1]",
                self.cfl_safety
            )));
        }
        if !(self.max_time >= 0.0 && self.max_time.is_finite()) {
            return Err(Error::BadConfig(format!("max_time = {} must be >= 0", self.max_time)));
        }
        if !self.adapt && self.dt > self.stable_dt(spec) {
            return Err(Error::BadConfig(format!(
                "dt = {} exceeds cfl_safety*h^2/4 = {}",
                self.dt,
                self.stable_dt(spec)
            )));
        }
        Ok(())
    }
}

/// Time derivative of `(A, φ)`.
#[derive(Clone, Debug)]
struct Velocity {
    a: OneFormGrid,
    phi: Vec<Vec3>,
}

fn direct_velocity(state: &FlowState) -> (Velocity, TensionPair) {
    let t = tension(state);
    let v = Velocity {
        a: t.tau1.scaled(-1.0),
        phi: t.tau2.iter().map(|p| fiber::scale(-1.0, p)).collect(),
    };
    (v, t)
}

fn displaced(state: &FlowState, dt: f64, v: &Velocity) -> Result<FlowState> {
    let model = *state.model();
    let points = state
        .section
        .points()
        .iter()
        .zip(&v.phi)
        .map(|(p, d)| model.project(&fiber::axpy(p, dt, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowState {
        gauge: GaugeField {
            form: state.gauge.form.axpy(dt, &v.a),
        },
        section: SectionField::from_projected(*state.spec(), model, points),
        time: state.time + dt,
    })
}

fn combine(parts: &[(f64, &Velocity)]) -> Velocity {
    let (w0, v0) = parts[0];
    let mut a = v0.a.scaled(w0);
    let mut phi: Vec<Vec3> = v0.phi.iter().map(|p| fiber::scale(w0, p)).collect();
    for &(w, v) in &parts[1..] {
        a = a.axpy(w, &v.a);
        for (acc, d) in phi.iter_mut().zip(&v.phi) {
            *acc = fiber::axpy(acc, w, d);
        }
    }
    Velocity { a, phi }
}

/// One step of `scheme` with a fixed `dt`, no acceptance test. Also returns
/// the tension at the starting state.
pub fn advance_direct(state: &FlowState, dt: f64, scheme: Scheme) -> Result<(FlowState, TensionPair)> {
    let (k1, t) = direct_velocity(state);
    let next = match scheme {
        Scheme::ExplicitEuler => displaced(state, dt, &k1)?,
        Scheme::Rk4 => {
            let (k2, _) = direct_velocity(&displaced(state, 0.5 * dt, &k1)?);
            let (k3, _) = direct_velocity(&displaced(state, 0.5 * dt, &k2)?);
            let (k4, _) = direct_velocity(&displaced(state, dt, &k3)?);
            let k = combine(&[(1.0 / 6.0, &k1), (2.0 / 6.0, &k2), (2.0 / 6.0, &k3), (1.0 / 6.0, &k4)]);
            displaced(state, dt, &k)?
        }
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteField("flow state"));
    }
    Ok((next, t))
}

/// Result of an accepted step.
#[derive(Clone, Debug)]
pub struct Step {
    pub state: FlowState,
    /// Tension at the start of the step.
    pub tension: TensionPair,
    pub dt: f64,
    pub halvings: usize,
}

fn energy_tolerance(e: f64) -> f64 {
    1e-10 * e.abs().max(1.0)
}

/// One accepted step of the direct flow starting from `dt`.
///
/// In adaptive mode a step that raises the energy by more than
/// `1e-10·max(1, ℰ)` is retried with half the step, at most
/// [`MAX_HALVINGS`] times and never below [`MIN_DT`].
pub fn step_direct_from(state: &FlowState, cfg: &IntegratorConfig, dt: f64) -> Result<Step> {
    if !cfg.adapt {
        let (next, t) = advance_direct(state, dt, cfg.scheme)?;
        return Ok(Step {
            state: next,
            tension: t,
            dt,
            halvings: 0,
        });
    }
    let e0 = energy(state).total;
    let mut dt = dt;
    for halvings in 0..=MAX_HALVINGS {
        match advance_direct(state, dt, cfg.scheme) {
            Ok((next, t)) if energy(&next).total <= e0 + energy_tolerance(e0) => {
                return Ok(Step {
                    state: next,
                    tension: t,
                    dt,
                    halvings,
                });
            }
            Ok(_) | Err(Error::DegeneratePoint { .. }) => {}
            Err(e) => return Err(e),
        }
        if dt * 0.5 < MIN_DT {
            return Err(Error::StepRejected {
                attempts: halvings + 1,
                dt,
            });
        }
        dt *= 0.5;
    }
    Err(Error::StepRejected {
        attempts: MAX_HALVINGS + 1,
        dt,
    })
}

/// One step of the direct flow with `cfg.dt`.
pub fn step_direct(state: &FlowState, cfg: &IntegratorConfig) -> Result<FlowState> {
    step_direct_from(state, cfg, cfg.dt).map(|s| s.state)
}

/// State of the DeTurck-gauged flow: `(ā, φ̄)` plus the accumulated gauge
/// angle `θ` with `θ(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeTurckState {
    pub abar: GaugeField,
    pub phibar: SectionField,
    pub theta: GaugeTransform,
    pub time: f64,
}

impl DeTurckState {
    /// Starts the gauged flow at `state` with the identity gauge.
    pub fn from_state(state: &FlowState) -> Self {
        Self {
            abar: state.gauge.clone(),
            phibar: state.section.clone(),
            theta: GaugeTransform::identity(*state.spec()),
            time: state.time,
        }
    }

    fn as_flow_state(&self) -> FlowState {
        FlowState {
            gauge: self.abar.clone(),
            section: self.phibar.clone(),
            time: self.time,
        }
    }
}

#[derive(Clone, Debug)]
struct DeTurckVelocity {
    base: Velocity,
    theta: ScalarGrid,
}

/// `ξ = d*ā = −div ā`:
/// `∂ₜā = −τ₁ − dξ`, `∂ₜφ̄ = −τ₂ + ξ·X(φ̄)`, `∂ₜθ = ξ`.
fn deturck_velocity(state: &DeTurckState) -> DeTurckVelocity {
    let fs = state.as_flow_state();
    let model = *fs.model();
    let t = tension(&fs);
    let xi = divergence(&state.abar.form).map(|v| -v);
    let dxi = gradient(&xi);
    let a = t.tau1.scaled(-1.0).axpy(-1.0, &dxi);
    let phi = t
        .tau2
        .iter()
        .zip(state.phibar.points())
        .zip(xi.values())
        .map(|((tau, p), &x)| fiber::axpy(&fiber::scale(-1.0, tau), x, &model.action_field(p)))
        .collect();
    DeTurckVelocity {
        base: Velocity { a, phi },
        theta: xi,
    }
}

fn deturck_displaced(state: &DeTurckState, dt: f64, v: &DeTurckVelocity) -> Result<DeTurckState> {
    let moved = displaced(&state.as_flow_state(), dt, &v.base)?;
    Ok(DeTurckState {
        abar: moved.gauge,
        phibar: moved.section,
        theta: GaugeTransform::with_winding(
            state.theta.angle.zip_map(&v.theta, |a, b| a + dt * b),
            state.theta.winding,
        ),
        time: moved.time,
    })
}

fn deturck_combine(parts: &[(f64, &DeTurckVelocity)]) -> DeTurckVelocity {
    let base: Vec<(f64, &Velocity)> = parts.iter().map(|(w, v)| (*w, &v.base)).collect();
    let (w0, v0) = parts[0];
    let mut theta = v0.theta.map(|x| w0 * x);
    for &(w, v) in &parts[1..] {
        theta = theta.zip_map(&v.theta, |a, b| a + w * b);
    }
    DeTurckVelocity {
        base: combine(&base),
        theta,
    }
}

/// One step of the gauged system and its gauge ODE with `cfg.dt`.
pub fn step_deturck(state: &DeTurckState, cfg: &IntegratorConfig) -> Result<DeTurckState> {
    let dt = cfg.dt;
    let k1 = deturck_velocity(state);
    let next = match cfg.scheme {
        Scheme::ExplicitEuler => deturck_displaced(state, dt, &k1)?,
        Scheme::Rk4 => {
            let k2 = deturck_velocity(&deturck_displaced(state, 0.5 * dt, &k1)?);
            let k3 = deturck_velocity(&deturck_displaced(state, 0.5 * dt, &k2)?);
            let k4 = deturck_velocity(&deturck_displaced(state, dt, &k3)?);
            let k = deturck_combine(&[(1.0 / 6.0, &k1), (2.0 / 6.0, &k2), (2.0 / 6.0, &k3), (1.0 / 6.0, &k4)]);
            deturck_displaced(state, dt, &k)?
        }
    };
    if !(next.abar.is_finite() && next.phibar.is_finite() && next.theta.is_finite()) {
        return Err(Error::NonFiniteField("DeTurck state"));
    }
    Ok(next)
}

/// `(A, φ) = s(t)*(ā, φ̄)`: `A = ā + dθ`, `φ = exp(−θJ)φ̄`.
pub fn reconstruct(state: &DeTurckState) -> FlowState {
    apply_gauge(&state.theta, &state.as_flow_state())
        .expect("DeTurck state components share one grid")
}

/// Observer called after every accepted step with the previous and current
/// states and the tension at the previous state.
pub trait Monitor {
    fn observe(&mut self, prev: &FlowState, current: &FlowState, dt: f64, tension: &TensionPair);
}

/// Output of [`run`].
#[derive(Clone, Debug)]
pub struct RunReport {
    pub series: Vec<TimeSeriesRow>,
    pub events: Vec<SingularEvent>,
    pub initial_energy: EnergyBreakdown,
    pub final_energy: EnergyBreakdown,
    pub final_state: FlowState,
    /// `Σ 2·dt·‖τ‖²` over accepted steps outside singular windows.
    pub dissipated: f64,
    pub steps: usize,
    /// `‖τ₁‖ + ‖τ₂‖` at the final state.
    pub final_tension: f64,
}

/// Integrates from `initial` to `cfg.max_time`, declaring singular events
/// and restarting past them.
///
/// After a declared event the state is moved into the Coulomb gauge and
/// integration resumes with `cfg.dt`.
pub fn run(
    initial: &FlowState,
    cfg: &IntegratorConfig,
    mcfg: &MonitorConfig,
    monitors: &mut [&mut dyn Monitor],
) -> Result<RunReport> {
    cfg.validate(initial.spec())?;
    mcfg.validate(initial.spec())?;
    if !initial.is_finite() {
        return Err(Error::NonFiniteField("initial state"));
    }
    let initial_energy = energy(initial);
    let mut tracker = SingularityTracker::new(mcfg.clone(), *initial.spec());
    let mut series = Vec::new();
    let mut state = initial.clone();
    let mut dissipated = 0.0;
    // dissipation inside an open window, settled when it closes
    let mut pending = 0.0;
    let mut steps = 0usize;
    let mut dt = cfg.dt;
    let t_end = cfg.max_time;
    let check_every = mcfg.check_every.max(1);
    let need_prev = !monitors.is_empty();

    let mut last_tension = tension(&state);
    series.push(TimeSeriesRow::compute(&state, None, &last_tension, 0.0));

    while state.time < t_end * (1.0 - 1e-14) {
        let step_dt = dt.min(t_end - state.time);
        let keep_prev = need_prev || (steps + 1) % check_every == 0;
        let prev = if keep_prev { Some(state.clone()) } else { None };
        let step = match step_direct_from(&state, cfg, step_dt) {
            Ok(s) => s,
            Err(Error::StepRejected { .. }) => {
                // persistent rejection at the smallest step: declare a
                // singular time if the ε-regularity trigger agrees
                match tracker.force_declare(&state)? {
                    TrackerOutcome::Event => {
                        pending = 0.0;
                        state = restart(&state)?;
                        dt = cfg.dt;
                        continue;
                    }
                    TrackerOutcome::Discarded | TrackerOutcome::Quiet => {}
                }
                return Err(Error::StepRejected {
                    attempts: MAX_HALVINGS + 1,
                    dt: step_dt,
                });
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        if !step.state.is_finite() || !step.tension.is_finite() {
            return Err(Error::NonFiniteField("flow state"));
        }
        let step_dissipation = 2.0 * step.dt * step.tension.norm_sq();
        if tracker.is_open() {
            pending += step_dissipation;
        } else {
            dissipated += step_dissipation;
        }
        if let Some(prev) = prev.as_ref().filter(|_| need_prev) {
            for m in monitors.iter_mut() {
                m.observe(prev, &step.state, step.dt, &step.tension);
            }
        }
        state = step.state;
        dt = if cfg.adapt { (step.dt * 2.0).min(cfg.dt) } else { cfg.dt };

        let outcome = tracker.after_step(&state, steps)?;
        match outcome {
            TrackerOutcome::Event => pending = 0.0,
            TrackerOutcome::Discarded => dissipated += std::mem::take(&mut pending),
            TrackerOutcome::Quiet => {}
        }
        let closed = outcome == TrackerOutcome::Event;
        if steps % check_every == 0 || closed {
            last_tension = tension(&state);
            let rate = 2.0 * last_tension.norm_sq();
            series.push(TimeSeriesRow::compute(&state, prev.as_ref(), &last_tension, rate));
        }
        if closed {
            state = restart(&state)?;
        }
    }
    let (events, outcome) = tracker.finish(&state);
    if outcome == TrackerOutcome::Discarded {
        dissipated += pending;
    }
    let final_energy = energy(&state);
    let t = tension(&state);
    let final_tension = t.norm1() + t.norm2();
    if series.last().map_or(true, |r| r.time != state.time) {
        series.push(TimeSeriesRow::compute(&state, None, &t, 2.0 * t.norm_sq()));
    }
    Ok(RunReport {
        series,
        events,
        initial_energy,
        final_energy,
        final_state: state,
        dissipated,
        steps,
        final_tension,
    })
}

/// Restart data after a singular time: the same fields in Coulomb gauge.
fn restart(state: &FlowState) -> Result<FlowState> {
    let fix = coulomb_fix(&state.gauge)?;
    apply_gauge(&fix.transform, state)
}
