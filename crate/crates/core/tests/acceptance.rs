//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; numeric arguments
//! restrict the run to those criteria, e.g. `-- 1 3 7`.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ymh::cli::{self, presets, snapshot};
use ymh::diagnostics::{
    bubble_account, detect_concentration, make_bubble_fixture, make_bubbles, MonitorConfig,
    SingularEvent, SPHERE_BUBBLE_ENERGY,
};
use ymh::energy::{covariant_derivative, curvature, density_field, energy, tension, TensionPair};
use ymh::fiber::{self, FiberKind, FiberModel, Vec3};
use ymh::fields::{apply_gauge, holonomy, FlowState, GaugeField, GaugeTransform, SectionField};
use ymh::flow::{advance_direct, reconstruct, run, step_deturck, DeTurckState, IntegratorConfig, Monitor, Scheme};
use ymh::gauge::{coulomb_fix, is_pure_gauge};
use ymh::grid::{curl, discrete_laplacian, gradient, Axis, GridSpec, OneFormGrid, ScalarGrid};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Runs that enter the count-bound check of criterion 9.
#[derive(Default)]
struct Ledger {
    runs: Vec<(String, f64, Vec<SingularEvent>)>,
}

impl Ledger {
    fn record(&mut self, name: &str, e0: f64, events: &[SingularEvent]) {
        self.runs.push((name.to_string(), e0, events.to_vec()));
    }
}

fn spec(n: usize) -> GridSpec {
    GridSpec::new(n, TAU).unwrap()
}

fn random_state(n: usize, kind: FiberKind, seed: u64, amplitude: f64) -> FlowState {
    let model = FiberModel::new(kind, kind.default_central_element());
    presets::random_smooth(spec(n), model, seed, amplitude, 3).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn max_abs_diff(a: &ScalarGrid, b: &ScalarGrid) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn euler(dt: f64, max_time: f64) -> IntegratorConfig {
    IntegratorConfig {
        dt,
        scheme: Scheme::ExplicitEuler,
        max_time,
        cfl_safety: 0.9,
        adapt: false,
    }
}

// 1 ----------------------------------------------------------------------

/// `ℰ` along `A + ηδA`, `φ ↦ exp_φ(ηv)`.
fn perturbed(state: &FlowState, da: &OneFormGrid, v: &[Vec3], eta: f64) -> FlowState {
    let model = *state.model();
    let pts: Vec<Vec3> = state
        .section
        .points()
        .iter()
        .zip(v)
        .map(|(p, d)| model.exp_map(p, &fiber::scale(eta, d)))
        .collect();
    FlowState::new(
        GaugeField { form: state.gauge.form.axpy(eta, da) },
        SectionField::new(*state.spec(), model, pts).unwrap(),
        state.time,
    )
    .unwrap()
}

fn criterion_1(_: &mut Ledger) -> Outcome {
    let eta = 1e-5;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for k in 0..20u64 {
        let kind = if k % 2 == 0 { FiberKind::Sphere } else { FiberKind::Plane };
        let st = random_state(16, kind, 1000 + k, 0.8);
        let sp = *st.spec();
        let model = *st.model();
        let mut noise = || ScalarGrid::zeros(sp).map(|_| rng.gen_range(-1.0..1.0));
        let da = OneFormGrid { comp1: noise(), comp2: noise() };
        let (r0, r1, r2) = (noise(), noise(), noise());
        let raw: Vec<Vec3> = (0..sp.len()).map(|k| [r0.values()[k], r1.values()[k], r2.values()[k]]).collect();
        let v: Vec<Vec3> = st
            .section
            .points()
            .iter()
            .zip(&raw)
            .map(|(p, r)| model.tangent_project(p, r))
            .collect();
        let fd = (energy(&perturbed(&st, &da, &v, eta)).total - energy(&perturbed(&st, &da, &v, -eta)).total)
            / (2.0 * eta);
        let t = tension(&st);
        let pairing: f64 = t.tau1.comp1.values().iter().zip(da.comp1.values()).map(|(a, b)| a * b).sum::<f64>()
            + t.tau1.comp2.values().iter().zip(da.comp2.values()).map(|(a, b)| a * b).sum::<f64>()
            + t.tau2.iter().zip(&v).map(|(a, b)| fiber::dot(a, b)).sum::<f64>();
        let predicted = 2.0 * sp.cell_area() * pairing;
        worst = worst.max(rel(fd, predicted));
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.3e} over 20 states (tol 1e-6)"))
}

// 2 ----------------------------------------------------------------------

fn fixture_suite(n: usize) -> Vec<(&'static str, FlowState)> {
    let sp = spec(n);
    let mut p = std::collections::BTreeMap::new();
    p.insert("tilt".to_string(), 0.2);
    vec![
        ("equator", presets::build("equator", &p, sp, FiberModel::sphere(), 0).unwrap()),
        ("random sphere", random_state(n, FiberKind::Sphere, 7, 1.0)),
        ("random plane", random_state(n, FiberKind::Plane, 8, 0.5)),
        ("vortex", presets::build("vortex", &Default::default(), sp, FiberModel::plane(), 0).unwrap()),
    ]
}

/// Relative identity defect of one Euler step.
fn one_step_defect(st: &FlowState, dt: f64) -> f64 {
    let (next, t) = advance_direct(st, dt, Scheme::ExplicitEuler).unwrap();
    let predicted = 2.0 * dt * t.norm_sq();
    (energy(&next).total - energy(st).total + predicted).abs() / predicted
}

fn criterion_2(_: &mut Ledger) -> Outcome {
    let n = 64;
    let cfg = euler(0.9 * spec(n).cell_area() / 4.0, 0.0);
    let mut violations = 0;
    let mut steps = 0;
    for (_, st) in fixture_suite(n) {
        let mut s = st;
        let mut e = energy(&s).total;
        let tol = 1e-10 * e.abs().max(1.0);
        for _ in 0..300 {
            s = advance_direct(&s, cfg.dt, cfg.scheme).unwrap().0;
            let e1 = energy(&s).total;
            if e1 > e + tol {
                violations += 1;
            }
            e = e1;
            steps += 1;
        }
    }
    let mut worst_order = f64::INFINITY;
    for (_, st) in fixture_suite(n) {
        let d: Vec<f64> = [1e-4, 5e-5, 2.5e-5, 1.25e-5].iter().map(|&dt| one_step_defect(&st, dt)).collect();
        for w in d.windows(2) {
            let order = (w[0] / w[1]).log2();
            worst_order = worst_order.min(order);
        }
    }
    outcome(
        violations == 0 && worst_order >= 0.9,
        format!("{violations} increases in {steps} steps; min observed order {worst_order:.3} (tol 0.9)"),
    )
}

// 3 ----------------------------------------------------------------------

fn random_transform(sp: GridSpec, rng: &mut ChaCha8Rng) -> GaugeTransform {
    let angle = ScalarGrid::zeros(sp).map(|_| rng.gen_range(-PI..PI) * 3.0);
    GaugeTransform::with_winding(angle, (rng.gen_range(-2..=2), rng.gen_range(-2..=2)))
}

fn wrapped_diff(a: f64, b: f64) -> f64 {
    ((a - b + PI).rem_euclid(TAU) - PI).abs()
}

fn criterion_3(_: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut states = vec![
        random_state(32, FiberKind::Sphere, 31, 1.0),
        random_state(32, FiberKind::Plane, 32, 0.7),
    ];
    states.push(make_bubble_fixture(spec(128), TAU / 32.0, (2.0, 3.0)).unwrap());
    let mut worst: f64 = 0.0;
    for st in &states {
        let sp = *st.spec();
        let e0 = energy(st);
        let f0 = curvature(&st.gauge);
        let h0 = holonomy(&st.gauge);
        let t0 = tension(st);
        for _ in 0..10 {
            let s = random_transform(sp, &mut rng);
            let g = apply_gauge(&s, st).unwrap();
            let e = energy(&g);
            let f = curvature(&g.gauge);
            let h = holonomy(&g.gauge);
            let t = tension(&g);
            let fscale = f0.max_abs().max(1.0);
            worst = worst
                .max(rel(e.total, e0.total))
                .max(rel(e.kinetic_term, e0.kinetic_term))
                .max(rel(e.potential_term, e0.potential_term))
                .max(max_abs_diff(&f, &f0) / fscale)
                .max(wrapped_diff(h.0, h0.0) / PI)
                .max(wrapped_diff(h.1, h0.1) / PI)
                .max(rel(t.norm1(), t0.norm1()))
                .max(rel(t.norm2(), t0.norm2()));
        }
    }
    outcome(worst <= 1e-10, format!("max relative deviation {worst:.3e} over 30 transforms (tol 1e-10)"))
}

// 4 ----------------------------------------------------------------------

/// Supercurrent `j_α = ⟨D_αφ, X(R(hA_α)φ(x + e_α))⟩`, written out here
/// from the link-transport form of `D_Aφ`.
fn supercurrent(st: &FlowState) -> (ScalarGrid, ScalarGrid) {
    let sp = *st.spec();
    let h = sp.spacing();
    let d = covariant_derivative(st);
    let mut out = Vec::new();
    for (axis, a, dd) in [(Axis::X, st.gauge.a1(), &d.d1), (Axis::Y, st.gauge.a2(), &d.d2)] {
        let v = (0..sp.len())
            .map(|k| {
                let q = st.section.points()[sp.forward(k, axis)];
                let (s, c) = (h * a.values()[k]).sin_cos();
                let rotated = [c * q[0] - s * q[1], s * q[0] + c * q[1], q[2]];
                let x = [-rotated[1], rotated[0], 0.0];
                fiber::dot(&dd[k], &x)
            })
            .collect();
        out.push(ScalarGrid::from_vec(sp, v).unwrap());
    }
    let j2 = out.pop().unwrap();
    (out.pop().unwrap(), j2)
}

struct CurvatureEquation {
    worst: f64,
}

impl Monitor for CurvatureEquation {
    fn observe(&mut self, prev: &FlowState, current: &FlowState, dt: f64, _t: &TensionPair) {
        // ∂ₜF = ΔF − curl j for the explicit Euler update
        let f0 = curvature(&prev.gauge);
        let f1 = curvature(&current.gauge);
        let (j1, j2) = supercurrent(prev);
        let rhs = discrete_laplacian(&f0).zip_map(&curl(&OneFormGrid { comp1: j1, comp2: j2 }), |a, b| a - b);
        let scale = f0.max_abs().max(dt * rhs.max_abs()).max(1.0);
        let r = (0..f0.values().len())
            .map(|k| (f1.values()[k] - f0.values()[k] - dt * rhs.values()[k]).abs())
            .fold(0.0, f64::max);
        self.worst = self.worst.max(r / scale);
    }
}

fn criterion_4(_: &mut Ledger) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut linear: f64 = 0.0;
    for (_, st) in fixture_suite(32) {
        let cfg = euler(0.9 * st.spec().cell_area() / 4.0, 0.05);
        let mut eq = CurvatureEquation { worst: 0.0 };
        let mut lin = ymh::diagnostics::CurvatureResidualMonitor::default();
        run(&st, &cfg, &MonitorConfig::new(st.spec()), &mut [&mut eq, &mut lin]).unwrap();
        worst = worst.max(eq.worst);
        linear = linear.max(lin.max_residual);
    }
    let worst = worst.max(linear);
    outcome(worst <= 1e-12, format!("max per-step residual {worst:.3e} (tol 1e-12)"))
}

// 5 ----------------------------------------------------------------------

fn deturck_error(st: &FlowState, dt: f64, t_end: f64) -> f64 {
    let cfg = euler(dt, t_end);
    let steps = (t_end / dt).round() as usize;
    let mut direct = st.clone();
    let mut dtk = DeTurckState::from_state(st);
    for _ in 0..steps {
        direct = advance_direct(&direct, dt, Scheme::ExplicitEuler).unwrap().0;
        dtk = step_deturck(&dtk, &cfg).unwrap();
    }
    let e_direct = density_field(&direct);
    let e_dt = density_field(&reconstruct(&dtk));
    e_direct.zip_map(&e_dt, |a, b| a - b).norm() / e_direct.norm()
}

fn criterion_5(_: &mut Ledger) -> Outcome {
    let mut worst_at_1e5: f64 = 0.0;
    let mut monotone = true;
    let mut seq = Vec::new();
    for (kind, seed, amp) in [(FiberKind::Sphere, 51, 1.0), (FiberKind::Plane, 52, 0.5)] {
        let st = random_state(32, kind, seed, amp);
        let errs: Vec<f64> = [1e-5, 5e-6, 2.5e-6].iter().map(|&dt| deturck_error(&st, dt, 0.05)).collect();
        worst_at_1e5 = worst_at_1e5.max(errs[0]);
        monotone &= errs.windows(2).all(|w| w[1] < w[0]);
        seq.push(format!("{kind}: {:.2e} {:.2e} {:.2e}", errs[0], errs[1], errs[2]));
    }
    outcome(
        worst_at_1e5 <= 1e-3 && monotone,
        format!("relative L2 density error at dt=1e-5 {worst_at_1e5:.3e} (tol 1e-3); dt-halving sequence [{}]", seq.join("; ")),
    )
}

// 6 ----------------------------------------------------------------------

fn criterion_6(_: &mut Ledger) -> Outcome {
    let sp = spec(128);
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut smooth = |amp: f64| {
        let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        ScalarGrid::from_fn(sp, move |x, y| amp * ((x + 2.0 * a).sin() * (2.0 * y + b).cos() + 0.3 * (3.0 * x - y + c).sin()))
    };
    let psi = smooth(1.0);
    let exact = GaugeField { form: gradient(&psi) };
    let general = GaugeField::from_components(
        smooth(0.7).map(|v| v + 0.2),
        smooth(0.4).map(|v| v - 0.1),
    )
    .unwrap();
    let general = GaugeField { form: general.form.axpy(1.0, &gradient(&smooth(1.3))) };

    let mut residual: f64 = 0.0;
    let mut curv: f64 = 0.0;
    let mut idem: f64 = 0.0;
    for a in [&exact, &general] {
        let r = coulomb_fix(a).unwrap();
        residual = residual.max(r.residual);
        let f = curvature(a);
        curv = curv.max(max_abs_diff(&curvature(&r.fixed), &f));
        let again = coulomb_fix(&r.fixed).unwrap();
        idem = idem
            .max(max_abs_diff(&again.fixed.form.comp1, &r.fixed.form.comp1))
            .max(max_abs_diff(&again.fixed.form.comp2, &r.fixed.form.comp2));
    }
    let exact_left = coulomb_fix(&exact).unwrap().fixed.form.norm();
    outcome(
        residual <= 1e-10 && curv <= 1e-12 && exact_left <= 1e-9 && idem <= 1e-10,
        format!(
            "residual {residual:.2e} (1e-10), curvature change {curv:.2e} (1e-12), exact form left {exact_left:.2e} (1e-9), idempotence {idem:.2e} (1e-10)"
        ),
    )
}

// 7 ----------------------------------------------------------------------

fn criterion_7(_: &mut Ledger) -> Outcome {
    let sp = spec(64);
    let l = sp.length();
    let half = is_pure_gauge(&GaugeField::constant(sp, PI / l, 0.0), 1e-9).unwrap();
    let full = is_pure_gauge(&GaugeField::constant(sp, TAU / l, 0.0), 1e-9).unwrap();
    outcome(
        !half.pure && full.pure && full.winding == (1, 0),
        format!(
            "(pi/L,0): pure={} holonomy={:.6}; (2pi/L,0): pure={} winding={:?}",
            half.pure, half.holonomy.0, full.pure, full.winding
        ),
    )
}

// 8 ----------------------------------------------------------------------

/// `∫|∇u|²` of the unit-scale inverse-stereographic bubble by quadrature:
/// `r = tan(πs/2)`, Simpson in `s`, the periodic trapezoid rule in the
/// angle, and central differences of the map itself.
fn quadrature_bubble_energy() -> f64 {
    let u = |x: f64, y: f64| -> Vec3 {
        let r2 = x * x + y * y;
        [2.0 * x / (1.0 + r2), 2.0 * y / (1.0 + r2), (r2 - 1.0) / (1.0 + r2)]
    };
    let grad_sq = |x: f64, y: f64| {
        let d = 1e-5;
        let gx = fiber::sub(&u(x + d, y), &u(x - d, y));
        let gy = fiber::sub(&u(x, y + d), &u(x, y - d));
        (fiber::norm_sq(&gx) + fiber::norm_sq(&gy)) / (4.0 * d * d)
    };
    let (ns, nt) = (2000, 64);
    let mut total = 0.0;
    for is in 0..=ns {
        let s = is as f64 / ns as f64;
        if is == ns {
            continue; // integrand vanishes at r = ∞
        }
        let r = (0.5 * PI * s).tan();
        let drds = 0.5 * PI / (0.5 * PI * s).cos().powi(2);
        let ring: f64 = (0..nt)
            .map(|it| {
                let th = TAU * it as f64 / nt as f64;
                grad_sq(r * th.cos(), r * th.sin())
            })
            .sum::<f64>()
            * TAU
            / nt as f64;
        let w = if is == 0 { 1.0 } else if is % 2 == 1 { 4.0 } else { 2.0 };
        total += w * ring * r * drds;
    }
    total / (3.0 * ns as f64)
}

fn bubble_run(state: &FlowState) -> ymh::flow::RunReport {
    let sp = *state.spec();
    let cfg = euler(0.9 * sp.cell_area() / 4.0, 0.8);
    run(state, &cfg, &MonitorConfig::new(&sp), &mut []).unwrap()
}

fn criterion_8(ledger: &mut Ledger) -> Outcome {
    let quad = quadrature_bubble_energy();
    let quad_ok = rel(quad, SPHERE_BUBBLE_ENERGY) <= 5e-3;

    let sp = spec(256);
    let l = sp.length();
    let one = make_bubble_fixture(sp, l / 32.0, (0.5 * l, 0.5 * l)).unwrap();
    let r1 = bubble_run(&one);
    ledger.record("bubble", r1.initial_energy.total, &r1.events);
    let e1 = r1.events.first().map_or(0.0, |e| e.bubble_energy);
    let one_ok = r1.events.len() == 1 && rel(e1, 8.0 * PI) <= 0.05;

    let two = make_bubbles(sp, l / 32.0, &[(0.25 * l, 0.5 * l), (0.75 * l, 0.5 * l)]).unwrap();
    let r2 = bubble_run(&two);
    ledger.record("two bubbles", r2.initial_energy.total, &r2.events);
    let acc = bubble_account(&r2.events, r2.initial_energy.total, r2.final_energy.total, r2.dissipated, SPHERE_BUBBLE_ENERGY);
    let shape_ok = r2.events.len() == 2 || (r2.events.len() == 1 && acc.total_quanta == 2);
    let two_ok = shape_ok && rel(acc.bubble_total, 16.0 * PI) <= 0.05;

    outcome(
        quad_ok && one_ok && two_ok,
        format!(
            "quadrature {quad:.6} vs 8pi (rel {:.1e}, tol 5e-3); one bubble: {} event(s), energy/8pi = {:.4}; two bubbles: {} event(s), total/16pi = {:.4} (tol 5%)",
            rel(quad, SPHERE_BUBBLE_ENERGY),
            r1.events.len(),
            e1 / (8.0 * PI),
            r2.events.len(),
            acc.bubble_total / (16.0 * PI)
        ),
    )
}

// 9 ----------------------------------------------------------------------

struct DetectorWatch {
    cfg: MonitorConfig,
    fired: usize,
    checks: usize,
}

impl Monitor for DetectorWatch {
    fn observe(&mut self, _p: &FlowState, current: &FlowState, _dt: f64, _t: &TensionPair) {
        self.checks += 1;
        if detect_concentration(current, &self.cfg).is_some() {
            self.fired += 1;
        }
    }
}

fn criterion_9(ledger: &mut Ledger) -> Outcome {
    let mut false_positives = 0;
    let mut checks = 0;
    let mut runs = 0;
    for (k, kind) in [FiberKind::Sphere, FiberKind::Plane, FiberKind::Sphere, FiberKind::Plane].into_iter().enumerate() {
        // shrink the amplitude until the total energy is below ε₀
        let mut amp = 0.5;
        let mut st = random_state(32, kind, 90 + k as u64, amp);
        while energy(&st).total >= 0.9 {
            amp *= 0.7;
            st = random_state(32, kind, 90 + k as u64, amp);
        }
        let sp = *st.spec();
        let mcfg = MonitorConfig::new(&sp);
        let mut watch = DetectorWatch { cfg: mcfg.clone(), fired: 0, checks: 0 };
        let rep = run(&st, &euler(0.9 * sp.cell_area() / 4.0, 0.5), &mcfg, &mut [&mut watch]).unwrap();
        ledger.record("smooth", rep.initial_energy.total, &rep.events);
        false_positives += watch.fired + rep.events.len();
        checks += watch.checks;
        runs += 1;
    }
    // synthetic nonnegative fields with total mass below ε₀
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for _ in 0..50 {
        let sp = spec(32);
        let cfg = MonitorConfig::new(&sp);
        let raw = ScalarGrid::zeros(sp).map(|_| rng.gen::<f64>().powi(8));
        let total = rng.gen_range(0.0..0.999) * cfg.epsilon0;
        let field = raw.map(|v| v * total / raw.integral());
        for r in &cfg.ball_radii {
            let heaviest = (0..sp.len())
                .map(|k| ymh::energy::ball_sum(&field, sp.coords(k), *r))
                .fold(0.0, f64::max);
            if heaviest >= cfg.epsilon0 {
                false_positives += 1;
            }
        }
        checks += 1;
    }
    let mut bound_violations = Vec::new();
    for (name, e0, events) in &ledger.runs {
        let acc = bubble_account(events, *e0, 0.0, 0.0, SPHERE_BUBBLE_ENERGY);
        if acc.total_quanta > acc.quanta_bound {
            bound_violations.push(name.clone());
        }
    }
    outcome(
        false_positives == 0 && bound_violations.is_empty(),
        format!(
            "{false_positives} false positives over {runs} smooth runs and {checks} checks; count bound checked on {} runs, violations: {:?}",
            ledger.runs.len(),
            bound_violations
        ),
    )
}

// 10 ---------------------------------------------------------------------

fn criterion_10(ledger: &mut Ledger) -> Outcome {
    let st = random_state(64, FiberKind::Plane, 1010, 0.5);
    let sp = *st.spec();
    let rep = run(&st, &euler(0.9 * sp.cell_area() / 4.0, 50.0), &MonitorConfig::new(&sp), &mut []).unwrap();
    ledger.record("plane convergence", rep.initial_energy.total, &rep.events);
    let acc = bubble_account(
        &rep.events,
        rep.initial_energy.total,
        rep.final_energy.total,
        rep.dissipated,
        SPHERE_BUBBLE_ENERGY,
    );
    outcome(
        rep.final_tension <= 1e-8 && acc.relative_defect <= 0.05,
        format!(
            "final |tau1|+|tau2| = {:.3e} (tol 1e-8); accounting defect {:.3e} (tol 5e-2)",
            rep.final_tension, acc.relative_defect
        ),
    )
}

// 11 ---------------------------------------------------------------------

fn criterion_11(_: &mut Ledger) -> Outcome {
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let config = "\
seed = 1111
output_dir = out
snapshot_every = 50

[grid]
n = 32

[integrator]
max_time = 0.05

[initial]
preset = random-smooth
amplitude = 0.8
";
    let mut outputs = Vec::new();
    for d in &dirs {
        let path = d.path().join("run.cfg");
        std::fs::write(&path, config).unwrap();
        cli::cmd_run(&path).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(d.path().join("out"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    let identical = outputs[0] == outputs[1] && outputs[0].len() >= 4;

    let mut round_trip = true;
    let states = [
        random_state(16, FiberKind::Sphere, 1, 1.0),
        random_state(16, FiberKind::Plane, 2, 0.5),
        make_bubble_fixture(spec(128), TAU / 32.0, (1.0, 2.0)).unwrap(),
    ];
    for s in &states {
        let bytes = snapshot::encode(s);
        let back = snapshot::decode(&bytes).unwrap();
        round_trip &= back == *s && snapshot::encode(&back) == bytes;
    }
    outcome(
        identical && round_trip,
        format!(
            "reruns byte-identical over {} files: {identical}; snapshot round trips bitwise: {round_trip}",
            outputs[0].len()
        ),
    )
}

// ------------------------------------------------------------------------

type Criterion = fn(&mut Ledger) -> Outcome;

fn main() {
    ymh::parallel::init_threads(1);
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, Option<Duration>, Criterion); 11] = [
        (1, "gradient exactness", Some(Duration::from_secs(10)), criterion_1),
        (2, "energy dissipation", Some(Duration::from_secs(60)), criterion_2),
        (3, "gauge invariance", None, criterion_3),
        (4, "curvature evolution", None, criterion_4),
        (5, "DeTurck equivalence", None, criterion_5),
        (6, "Coulomb fixing", Some(Duration::from_secs(5)), criterion_6),
        (7, "holonomy obstruction", None, criterion_7),
        (8, "bubble energy quantization", Some(Duration::from_secs(600)), criterion_8),
        // 9 reads the runs recorded by 8 and 10, so it goes last
        (10, "convergence to critical points", None, criterion_10),
        (9, "detector soundness", None, criterion_9),
        (11, "determinism and serialization", None, criterion_11),
    ];
    let mut ledger = Ledger::default();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, budget, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let mut o = f(&mut ledger);
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > b {
                o.pass = false;
                o.detail.push_str(&format!("; over the {}s budget", b.as_secs()));
            }
        }
        ran += 1;
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
