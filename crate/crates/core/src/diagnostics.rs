//! Monitors for the flow: dissipation, local energy, Bochner ratio,
//! ε-regularity detection and bubble-energy accounting.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::energy::{
    ball_sum, check_radius, concentration_density, covariant_derivative, curvature, density_field,
    energy, local_energy, TensionPair,
};
use crate::error::{Error, Result};
use crate::fiber::{FiberModel, Vec3};
use crate::fields::{FlowState, GaugeField, SectionField};
use crate::flow::Monitor;
use crate::grid::{curl, discrete_laplacian, GridSpec, ScalarGrid};

/// Energy of a degree-one harmonic map `S² → S²` with the `∫|∇u|²`
/// convention.
pub const SPHERE_BUBBLE_ENERGY: f64 = 8.0 * PI;

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorConfig {
    /// Threshold on `∫_{B_R} |F| + |D_Aφ|²`.
    pub epsilon0: f64,
    /// Detection radii; sorted ascending on validation.
    pub ball_radii: Vec<f64>,
    /// Bubble quantum `α(M)`.
    pub alpha_m: f64,
    pub check_every: usize,
    /// A concentration window counts as a singular time once one cell
    /// carries this fraction of `α(M)` in `|F| + |D_Aφ|²`.
    pub cell_fraction: f64,
}

impl MonitorConfig {
    pub fn new(spec: &GridSpec) -> Self {
        let h = spec.spacing();
        Self {
            epsilon0: 1.0,
            ball_radii: vec![2.0 * h, 4.0 * h, 8.0 * h],
            alpha_m: SPHERE_BUBBLE_ENERGY,
            check_every: 10,
            cell_fraction: DEFAULT_CELL_FRACTION,
        }
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        if !(self.epsilon0 > 0.0) {
            return Err(Error::BadConfig(format!("epsilon0 = {} must be > 0", self.epsilon0)));
        }
        if self.ball_radii.is_empty() {
            return Err(Error::BadConfig("ball_radii must not be empty".into()));
        }
        for &r in &self.ball_radii {
            check_radius(spec, r).map_err(|_| {
                Error::BadConfig(format!("ball radius {r} outside (0, L/2]"))
            })?;
        }
        if !(self.alpha_m > 0.0) {
            return Err(Error::BadConfig(format!("alpha_M = {} must be > 0", self.alpha_m)));
        }
        if !(self.cell_fraction > 0.0) {
            return Err(Error::BadConfig("cell_fraction must be > 0".into()));
        }
        Ok(())
    }

    fn sorted_radii(&self) -> Vec<f64> {
        let mut r = self.ball_radii.clone();
        r.sort_by(f64::total_cmp);
        r
    }

    pub fn min_radius(&self) -> f64 {
        self.ball_radii.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub const DEFAULT_CELL_FRACTION: f64 = 0.08;

/// A detected singular time and the energy that left with the bubble(s).
#[derive(Clone, Debug, PartialEq)]
pub struct SingularEvent {
    /// Time at which the concentration was released and the flow restarted.
    pub time: f64,
    /// Time at which the concentration window opened.
    pub onset: f64,
    pub location: (usize, usize),
    /// Detection radius at onset.
    pub scale: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub bubble_energy: f64,
    pub quanta: f64,
    /// Distinct concentration points that collapsed in this event.
    pub sites: Vec<(usize, usize)>,
}

/// One line of `series.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSeriesRow {
    pub time: f64,
    pub total_energy: f64,
    pub curvature_term: f64,
    pub kinetic_term: f64,
    pub potential_term: f64,
    pub max_density: f64,
    pub tension_norm1: f64,
    pub tension_norm2: f64,
    pub dissipation_rate: f64,
    pub bochner_ratio: f64,
}

impl TimeSeriesRow {
    pub const HEADER: &'static str = "time,total_energy,curvature_term,kinetic_term,potential_term,max_density,tension_norm1,tension_norm2,dissipation_rate,bochner_ratio";

    /// Row for `state`; the Bochner ratio needs the previous accepted state
    /// and is 0 without it.
    pub fn compute(
        state: &FlowState,
        prev: Option<&FlowState>,
        tension: &TensionPair,
        dissipation_rate: f64,
    ) -> Self {
        let e = energy(state);
        let (_, max_density) = density_field(state).min_max();
        let bochner = prev.map_or(0.0, |p| bochner_ratio(state, p));
        Self {
            time: state.time,
            total_energy: e.total,
            curvature_term: e.curvature_term,
            kinetic_term: e.kinetic_term,
            potential_term: e.potential_term,
            max_density,
            tension_norm1: tension.norm1(),
            tension_norm2: tension.norm2(),
            dissipation_rate,
            bochner_ratio: bochner,
        }
    }

    /// CSV line, every value with 17 significant digits.
    pub fn to_csv(&self) -> String {
        [
            self.time,
            self.total_energy,
            self.curvature_term,
            self.kinetic_term,
            self.potential_term,
            self.max_density,
            self.tension_norm1,
            self.tension_norm2,
            self.dissipation_rate,
            self.bochner_ratio,
        ]
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Summary of [`check_dissipation`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DissipationReport {
    pub steps: usize,
    /// Per step: `|Δℰ + 2·dt·‖∂ₜ‖²| / (2·dt·‖∂ₜ‖²)`, zero for stationary
    /// steps.
    pub relative_defects: Vec<f64>,
    pub max_relative_defect: f64,
    /// `Σ |Δℰ + 2·dt·‖∂ₜ‖²|`.
    pub total_defect: f64,
    pub total_dissipation: f64,
}

/// Checks monotone decay along consecutive accepted explicit Euler steps
/// and measures the defect of `Δℰ = −2·dt·‖∂ₜ(A, φ)‖²`.
///
/// `history` holds the states; consecutive times give the step sizes.
pub fn check_dissipation(history: &[FlowState]) -> Result<DissipationReport> {
    if history.len() < 2 {
        return Err(Error::BadConfig("need at least two states".into()));
    }
    let energies: Vec<f64> = history.iter().map(|s| energy(s).total).collect();
    let scale = energies[0].abs().max(1.0);
    let mut report = DissipationReport::default();
    for (k, pair) in history.windows(2).enumerate() {
        let (e0, e1) = (energies[k], energies[k + 1]);
        if e1 > e0 + 1e-10 * scale {
            return Err(Error::MonotonicityViolation { before: e0, after: e1 });
        }
        let dt = pair[1].time - pair[0].time;
        let t = crate::energy::tension(&pair[0]);
        let predicted = 2.0 * dt * t.norm_sq();
        let defect = (e1 - e0) + predicted;
        report.total_defect += defect.abs();
        report.total_dissipation += predicted;
        let rel = if predicted > 0.0 { defect.abs() / predicted } else { 0.0 };
        report.relative_defects.push(rel);
        report.max_relative_defect = report.max_relative_defect.max(rel);
        report.steps += 1;
    }
    Ok(report)
}

/// Ball masses of `field` at radius `r` around every node.
fn ball_masses(field: &ScalarGrid, radius: f64) -> Vec<f64> {
    let spec = *field.spec();
    crate::parallel::map_nodes(spec.len(), |k| ball_sum(field, spec.coords(k), radius))
}

/// First radius (smallest first) at which some ball carries
/// `∫(|F| + |D_Aφ|²) ≥ ε₀`, with the centre of the heaviest such ball.
pub fn detect_concentration(state: &FlowState, cfg: &MonitorConfig) -> Option<((usize, usize), f64)> {
    detect_in_field(&concentration_density(state), cfg)
}

fn detect_in_field(field: &ScalarGrid, cfg: &MonitorConfig) -> Option<((usize, usize), f64)> {
    // a ball never holds more than the whole torus
    if field.integral() < cfg.epsilon0 {
        return None;
    }
    let radii = cfg.sorted_radii();
    // ball mass grows with the radius: nothing fires unless the largest does
    heavy_ball(field, *radii.last()?, cfg.epsilon0)?;
    let spec = *field.spec();
    radii
        .into_iter()
        .find_map(|r| heavy_ball(field, r, cfg.epsilon0).map(|(k, _)| (spec.coords(k), r)))
}

/// Grid offsets inside a ball of radius `r`, same rule as [`ball_sum`].
fn ball_offsets(spec: &GridSpec, radius: f64) -> Vec<(isize, isize)> {
    let h = spec.spacing();
    let reach = (radius / h).ceil() as isize;
    let r2 = (radius / h) * (radius / h);
    let mut out = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            if ((di * di + dj * dj) as f64) < r2 {
                out.push((di, dj));
            }
        }
    }
    out
}

/// Heaviest ball of radius `r` if its mass reaches `threshold`.
///
/// `field` must be nonnegative. A ball of mass `≥ threshold` contains a
/// node of density `≥ threshold / (nodes·h²)`, so only balls around such
/// nodes are summed.
fn heavy_ball(field: &ScalarGrid, radius: f64, threshold: f64) -> Option<(usize, f64)> {
    let spec = *field.spec();
    let n = spec.n() as isize;
    let offsets = ball_offsets(&spec, radius);
    let floor = threshold / (offsets.len() as f64 * spec.cell_area());
    let mut candidate = vec![false; spec.len()];
    let mut any = false;
    for (k, &v) in field.values().iter().enumerate() {
        if v < floor {
            continue;
        }
        any = true;
        let (i, j) = spec.coords(k);
        // the ball is symmetric: centres within r of a heavy node
        for &(di, dj) in &offsets {
            let ii = (i as isize + di).rem_euclid(n) as usize;
            let jj = (j as isize + dj).rem_euclid(n) as usize;
            candidate[spec.idx(ii, jj)] = true;
        }
    }
    if !any {
        return None;
    }
    let (k, m) = candidate
        .iter()
        .enumerate()
        .filter(|(_, &c)| c)
        .map(|(k, _)| (k, ball_sum(field, spec.coords(k), radius)))
        .fold((0, f64::NEG_INFINITY), |(bk, bm), (k, m)| if m > bm { (k, m) } else { (bk, bm) });
    (m >= threshold).then_some((k, m))
}

/// Per-event line of [`BubbleAccount`].
#[derive(Clone, Debug, PartialEq)]
pub struct EventAccount {
    pub time: f64,
    pub bubble_energy: f64,
    pub quanta: i64,
    /// `|bubble_energy − quanta·α(M)| / α(M)`.
    pub quantization_defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BubbleAccount {
    pub events: Vec<EventAccount>,
    pub initial_energy: f64,
    pub limit_energy: f64,
    pub dissipated: f64,
    pub bubble_total: f64,
    /// `ℰ(0) − dissipated − Σ bubbles − ℰ(∞)`.
    pub residual: f64,
    pub relative_defect: f64,
    pub total_quanta: i64,
    /// `⌊ℰ(0)/α(M)⌋`.
    pub quanta_bound: i64,
}

impl BubbleAccount {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "events: {}", self.events.len());
        for (k, e) in self.events.iter().enumerate() {
            let _ = writeln!(
                s,
                "  [{k}] time={:.16e} bubble_energy={:.16e} quanta={} defect={:.16e}",
                e.time, e.bubble_energy, e.quanta, e.quantization_defect
            );
        }
        let _ = writeln!(s, "initial_energy={:.16e}", self.initial_energy);
        let _ = writeln!(s, "limit_energy={:.16e}", self.limit_energy);
        let _ = writeln!(s, "dissipated={:.16e}", self.dissipated);
        let _ = writeln!(s, "bubble_total={:.16e}", self.bubble_total);
        let _ = writeln!(s, "residual={:.16e}", self.residual);
        let _ = writeln!(s, "relative_defect={:.16e}", self.relative_defect);
        let _ = writeln!(s, "quanta={} bound={}", self.total_quanta, self.quanta_bound);
        s
    }
}

/// Energy accounting `ℰ(0) = ℰ(∞) + dissipated + Σ bubbles`.
pub fn bubble_account(
    events: &[SingularEvent],
    initial_energy: f64,
    limit_energy: f64,
    dissipated: f64,
    alpha_m: f64,
) -> BubbleAccount {
    let accounts: Vec<EventAccount> = events
        .iter()
        .map(|e| {
            let quanta = (e.bubble_energy / alpha_m).round() as i64;
            EventAccount {
                time: e.time,
                bubble_energy: e.bubble_energy,
                quanta,
                quantization_defect: (e.bubble_energy - quanta as f64 * alpha_m).abs() / alpha_m,
            }
        })
        .collect();
    let bubble_total = events.iter().fold(0.0, |acc, e| acc + e.bubble_energy);
    let residual = initial_energy - dissipated - bubble_total - limit_energy;
    BubbleAccount {
        total_quanta: accounts.iter().map(|a| a.quanta).sum(),
        events: accounts,
        initial_energy,
        limit_energy,
        dissipated,
        bubble_total,
        residual,
        relative_defect: if initial_energy > 0.0 { residual.abs() / initial_energy } else { residual.abs() },
        quanta_bound: (initial_energy / alpha_m).floor() as i64,
    }
}

/// `ê₁ = √(1 + |F|²) + |D_Aφ|²` per node.
pub fn e_hat(state: &FlowState) -> ScalarGrid {
    let spec = *state.spec();
    let f = curvature(&state.gauge);
    let d = covariant_derivative(state).norm_sq_field(spec);
    f.zip_map(&d, |f, d| (1.0 + f * f).sqrt() + d)
}

/// Empirical constant of the Bochner inequality between two consecutive
/// accepted states: `max (∂ₜ − Δ)ê₁ / ((1 + |F| + |D_Aφ|²)·ê₁)`, with a
/// backward difference in time and the five-point Laplacian.
pub fn bochner_ratio(state: &FlowState, prev: &FlowState) -> f64 {
    let dt = state.time - prev.time;
    if !(dt > 0.0) {
        return 0.0;
    }
    let spec = *state.spec();
    let e1 = e_hat(state);
    let e0 = e_hat(prev);
    let lap = discrete_laplacian(&e1);
    let f = curvature(&state.gauge);
    let d = covariant_derivative(state).norm_sq_field(spec);
    (0..spec.len())
        .map(|k| {
            let lhs = (e1.values()[k] - e0.values()[k]) / dt - lap.values()[k];
            let weight = (1.0 + f.values()[k].abs() + d.values()[k]) * e1.values()[k];
            lhs / weight
        })
        .fold(0.0, f64::max)
}

/// Degree-one bubble of scale `λ` centred at `center` on the sphere fiber,
/// `A = 0`.
///
/// In the stereographic coordinate `w` seen from the north pole the profile
/// is `w = λ·f(r)/z` with `f = (1 − r²/R²)²`, `R = 8λ`: the
/// inverse-stereographic bubble, damped to the north pole at radius `R`.
pub fn make_bubble_fixture(spec: GridSpec, scale: f64, center: (f64, f64)) -> Result<FlowState> {
    make_bubbles(spec, scale, &[center])
}

/// Several disjoint bubbles; each must fit inside its own cap.
pub fn make_bubbles(spec: GridSpec, scale: f64, centers: &[(f64, f64)]) -> Result<FlowState> {
    let h = spec.spacing();
    let l = spec.length();
    let (min, max) = (4.0 * h, l / 32.0);
    if !(scale >= min * (1.0 - 1e-12) && scale <= max * (1.0 + 1e-12)) {
        return Err(Error::BadScale { scale, min, max });
    }
    let model = FiberModel::sphere();
    let cap = 8.0 * scale;
    let wrap = |d: f64| (d + 0.5 * l).rem_euclid(l) - 0.5 * l;
    let section = SectionField::from_fn(spec, model, |x, y| {
        for &(cx, cy) in centers {
            let (dx, dy) = (wrap(x - cx), wrap(y - cy));
            let r = dx.hypot(dy);
            if r < cap {
                return bubble_point(dx, dy, r, scale, cap);
            }
        }
        [0.0, 0.0, 1.0]
    })?;
    FlowState::new(GaugeField::zeros(spec), section, 0.0)
}

fn bubble_point(dx: f64, dy: f64, r: f64, scale: f64, cap: f64) -> Vec3 {
    if r == 0.0 {
        return [0.0, 0.0, -1.0];
    }
    let f = (1.0 - (r / cap).powi(2)).max(0.0).powi(2);
    if f == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    // t = 1/|w|
    let t = r / (scale * f);
    let d = 1.0 + t * t;
    [2.0 * t * dx / r / d, 2.0 * t * dy / r / d, (t * t - 1.0) / d]
}

/// What [`SingularityTracker::after_step`] saw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackerOutcome {
    /// Nothing changed, or a window is still open.
    Quiet,
    /// A confirmed window closed and produced an event; restart the flow.
    Event,
    /// A window closed without reaching the lattice scale. Steps taken
    /// inside it are ordinary dissipation.
    Discarded,
}

/// Turns concentration into [`SingularEvent`]s during a run.
///
/// A window is a maximal stretch of steps on which
/// [`detect_concentration`] fires, i.e. the ε-regularity hypothesis fails
/// at some detection radius. The window is a singular time only if,
/// while it is open, a single cell carries at least
/// `cell_fraction·α(M)` of `|F| + |D_Aφ|²`, i.e. the concentration scale
/// has reached the lattice. The energy lost across a confirmed window is
/// the bubble energy.
#[derive(Clone, Debug)]
pub struct SingularityTracker {
    cfg: MonitorConfig,
    spec: GridSpec,
    open: Option<Window>,
    events: Vec<SingularEvent>,
}

#[derive(Clone, Debug)]
struct Window {
    onset: f64,
    location: (usize, usize),
    energy_before: f64,
    confirmed: bool,
    sites: Vec<(usize, usize)>,
}

/// Concentration found at the smallest radius.
struct Scan {
    /// Detected centre, if any ball reaches `ε₀`.
    hit: Option<(usize, usize)>,
    /// Cell-scale concentration points.
    lattice_sites: Vec<(usize, usize)>,
}

impl SingularityTracker {
    pub fn new(cfg: MonitorConfig, spec: GridSpec) -> Self {
        Self {
            cfg,
            spec,
            open: None,
            events: Vec::new(),
        }
    }

    /// True while a window is open; steps inside it are not counted as
    /// dissipation until the window is discarded.
    pub fn is_open(&self) -> bool {
        self.open.is_some()
    }

    pub fn events(&self) -> &[SingularEvent] {
        &self.events
    }

    fn scan(&self, state: &FlowState) -> Scan {
        let field = concentration_density(state);
        let hit = detect_in_field(&field, &self.cfg).map(|(c, _)| c);
        if hit.is_none() {
            return Scan {
                hit,
                lattice_sites: Vec::new(),
            };
        }
        let r = self.cfg.min_radius();
        let thr = self.cfg.cell_fraction * self.cfg.alpha_m / self.spec.cell_area();
        let mut sites: Vec<((usize, usize), f64)> = Vec::new();
        for (k, &v) in field.values().iter().enumerate() {
            if v < thr {
                continue;
            }
            let c = self.spec.coords(k);
            if ball_sum(&field, c, r) < self.cfg.epsilon0 {
                continue;
            }
            // one representative per cluster: the densest node
            match sites.iter_mut().find(|(s, _)| self.spec.distance(*s, c) < 4.0 * r) {
                Some(entry) if v > entry.1 => *entry = (c, v),
                Some(_) => {}
                None => sites.push((c, v)),
            }
        }
        Scan {
            hit,
            lattice_sites: sites.into_iter().map(|(c, _)| c).collect(),
        }
    }

    /// Updates the tracker after an accepted step.
    ///
    /// Checks run every `check_every` steps, and at every step once a
    /// window is confirmed so that its end is located exactly.
    pub fn after_step(&mut self, state: &FlowState, steps: usize) -> Result<TrackerOutcome> {
        let every = self.cfg.check_every.max(1);
        let confirmed = self.open.as_ref().is_some_and(|w| w.confirmed);
        if !confirmed && steps % every != 0 {
            return Ok(TrackerOutcome::Quiet);
        }
        let scan = self.scan(state);
        let r = self.cfg.min_radius();
        match (self.open.as_mut(), scan.hit) {
            (None, None) => Ok(TrackerOutcome::Quiet),
            (None, Some(site)) => {
                self.open = Some(Window {
                    onset: state.time,
                    location: site,
                    energy_before: energy(state).total,
                    confirmed: !scan.lattice_sites.is_empty(),
                    sites: scan.lattice_sites,
                });
                Ok(TrackerOutcome::Quiet)
            }
            (Some(w), Some(_)) => {
                for s in scan.lattice_sites {
                    w.confirmed = true;
                    if !w.sites.iter().any(|o| self.spec.distance(*o, s) < 4.0 * r) {
                        w.sites.push(s);
                    }
                }
                Ok(TrackerOutcome::Quiet)
            }
            (Some(_), None) => Ok(self.close(state)),
        }
    }

    fn close(&mut self, state: &FlowState) -> TrackerOutcome {
        let Some(w) = self.open.take() else {
            return TrackerOutcome::Quiet;
        };
        let energy_after = energy(state).total;
        let bubble_energy = w.energy_before - energy_after;
        if !w.confirmed || bubble_energy <= 0.0 {
            return TrackerOutcome::Discarded;
        }
        let location = w.sites.first().copied().unwrap_or(w.location);
        self.events.push(SingularEvent {
            time: state.time,
            onset: w.onset,
            location,
            scale: self.cfg.min_radius(),
            energy_before: w.energy_before,
            energy_after,
            bubble_energy,
            quanta: bubble_energy / self.cfg.alpha_m,
            sites: w.sites,
        });
        TrackerOutcome::Event
    }

    /// Declares a singular time on persistent step rejection, provided
    /// [`detect_concentration`] fires. An open window
    /// closes against `state`; otherwise the event records no drop yet and
    /// is dropped.
    pub fn force_declare(&mut self, state: &FlowState) -> Result<TrackerOutcome> {
        let scan = self.scan(state);
        let Some(site) = scan.hit else {
            return Ok(TrackerOutcome::Quiet);
        };
        let w = self.open.get_or_insert_with(|| Window {
            onset: state.time,
            location: site,
            energy_before: energy(state).total,
            confirmed: true,
            sites: vec![site],
        });
        w.confirmed = true;
        Ok(self.close(state))
    }

    /// Ends tracking. A confirmed window still open is closed against the
    /// final state; an unconfirmed one is discarded.
    pub fn finish(mut self, state: &FlowState) -> (Vec<SingularEvent>, TrackerOutcome) {
        let outcome = self.close(state);
        (self.events, outcome)
    }
}

/// Per-step dissipation check for use during [`crate::flow::run`].
#[derive(Clone, Debug, Default)]
pub struct DissipationMonitor {
    pub violations: usize,
    pub max_increase: f64,
    pub max_relative_defect: f64,
    pub total_defect: f64,
    pub total_dissipation: f64,
    pub steps: usize,
    last_energy: Option<f64>,
    scale: f64,
}

impl Monitor for DissipationMonitor {
    fn observe(&mut self, prev: &FlowState, current: &FlowState, dt: f64, tension: &TensionPair) {
        let e0 = self.last_energy.unwrap_or_else(|| energy(prev).total);
        if self.last_energy.is_none() {
            self.scale = e0.abs().max(1.0);
        }
        let e1 = energy(current).total;
        if e1 > e0 + 1e-10 * self.scale {
            self.violations += 1;
            self.max_increase = self.max_increase.max(e1 - e0);
        }
        let predicted = 2.0 * dt * tension.norm_sq();
        let defect = (e1 - e0) + predicted;
        self.total_defect += defect.abs();
        self.total_dissipation += predicted;
        if predicted > 0.0 {
            self.max_relative_defect = self.max_relative_defect.max(defect.abs() / predicted);
        }
        self.steps += 1;
        self.last_energy = Some(e1);
    }
}

/// Tracks `max |F(A_{n+1}) − F(A_n) − curl(A_{n+1} − A_n)|` over a run.
#[derive(Clone, Debug, Default)]
pub struct CurvatureResidualMonitor {
    pub max_residual: f64,
    pub steps: usize,
}

impl Monitor for CurvatureResidualMonitor {
    fn observe(&mut self, prev: &FlowState, current: &FlowState, _dt: f64, _t: &TensionPair) {
        let f0 = curl(&prev.gauge.form);
        let f1 = curl(&current.gauge.form);
        let dd = curl(&current.gauge.form.axpy(-1.0, &prev.gauge.form));
        let scale = f0.max_abs().max(f1.max_abs()).max(1.0);
        let r = (0..f0.values().len())
            .map(|k| (f1.values()[k] - f0.values()[k] - dd.values()[k]).abs())
            .fold(0.0, f64::max)
            / scale;
        self.max_residual = self.max_residual.max(r);
        self.steps += 1;
    }
}

/// Smallest `C` for which
/// `ℰ(t, B_R(x)) ≤ ℰ(0, B_{2R}(x)) + C·t·ℰ(0)/R²` has held so far.
#[derive(Clone, Debug)]
pub struct LocalEnergyMonitor {
    radii: Vec<f64>,
    every: usize,
    initial_2r: Vec<Vec<f64>>,
    initial_energy: f64,
    t0: f64,
    pub fitted_c: f64,
    count: usize,
}

impl LocalEnergyMonitor {
    /// `radii` must satisfy `2R ≤ L/2`.
    pub fn new(initial: &FlowState, radii: &[f64], every: usize) -> Result<Self> {
        let density = density_field(initial);
        let initial_2r = radii
            .iter()
            .map(|&r| {
                check_radius(initial.spec(), 2.0 * r)?;
                Ok(ball_masses(&density, 2.0 * r))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            radii: radii.to_vec(),
            every: every.max(1),
            initial_2r,
            initial_energy: density.integral(),
            t0: initial.time,
            fitted_c: 0.0,
            count: 0,
        })
    }

    pub fn check(&mut self, state: &FlowState) {
        let t = state.time - self.t0;
        if !(t > 0.0) || self.initial_energy <= 0.0 {
            return;
        }
        let density = density_field(state);
        for (r, init) in self.radii.iter().zip(&self.initial_2r) {
            let now = ball_masses(&density, *r);
            for (m, m0) in now.iter().zip(init) {
                let c = (m - m0) * r * r / (t * self.initial_energy);
                self.fitted_c = self.fitted_c.max(c);
            }
        }
    }
}

impl Monitor for LocalEnergyMonitor {
    fn observe(&mut self, _prev: &FlowState, current: &FlowState, _dt: f64, _t: &TensionPair) {
        self.count += 1;
        if self.count % self.every == 0 {
            self.check(current);
        }
    }
}

/// Records the Bochner ratio at every observed step.
#[derive(Clone, Debug, Default)]
pub struct BochnerMonitor {
    pub ratios: Vec<f64>,
    pub every: usize,
    count: usize,
}

impl BochnerMonitor {
    pub fn new(every: usize) -> Self {
        Self {
            ratios: Vec::new(),
            every: every.max(1),
            count: 0,
        }
    }

    pub fn max(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

impl Monitor for BochnerMonitor {
    fn observe(&mut self, prev: &FlowState, current: &FlowState, _dt: f64, _t: &TensionPair) {
        self.count += 1;
        if self.count % self.every == 0 {
            self.ratios.push(bochner_ratio(current, prev));
        }
    }
}

/// Energy in every ball of radius `r` around every node; exposed for
/// reports and tests.
pub fn local_energy_map(state: &FlowState, radius: f64) -> Result<Vec<f64>> {
    check_radius(state.spec(), radius)?;
    Ok(ball_masses(&density_field(state), radius))
}

/// Convenience: [`local_energy`] re-exported next to the other monitors.
pub fn local_energy_at(state: &FlowState, center: (usize, usize), radius: f64) -> Result<f64> {
    local_energy(state, center, radius)
}
