//! Closed-form initial data.
//!
//! Positions are `(x, y) ∈ [0, L)²`; differences use the nearest periodic
//! image. Unless stated otherwise `A = 0`.
//!
//! * `ground`: `φ ≡` the fiber's ground point (zero energy).
//! * `south-pole` (sphere): `φ ≡ (0, 0, −1)`.
//! * `equator` (sphere): `φ = (cos θ, sin θ, tilt·cos(2πy/L))` projected,
//!   with `θ = 2π·winding·x/L` (defaults `winding = 1`, `tilt = 0`).
//! * `bubble` (sphere): degree-one bubble of scale `scale` (default `L/32`)
//!   at `(center_x, center_y)` (default the middle of the torus).
//! * `two-bubbles` (sphere): two such bubbles at `(L/4, L/2)` and
//!   `(3L/4, L/2)`.
//! * `random-smooth`: trigonometric sums `g_k = Σ (a cos + b sin)(2π m·x/L)`
//!   over `0 < |m|_∞ ≤ cutoff` with coefficients uniform in `[−1, 1]`,
//!   divided by `Σ(|a| + |b|)` so `|g_k| ≤ 1`. Then
//!   `A = amplitude·(g₁, g₂)`; on the sphere `φ` has polar angle
//!   `amplitude·g₃` and azimuth `π·g₄`; on the plane
//!   `φ = (1 + amplitude·g₃, amplitude·g₄)`. Defaults `amplitude = 0.5`,
//!   `cutoff = 3`.
//! * `vortex` (plane): with `s = (L/2π)·(sin(2π dx/L), sin(2π dy/L))`
//!   measured from `c = (L/4 + h/2, L/4 + h/2)`,
//!   `φ = tanh(|s|/core)·(cos nψ, sin nψ)` where `ψ = arg s` and
//!   `n = winding`. `s` vanishes at `c + {0, L/2}²`, giving vortices of
//!   winding `n, −n, −n, n` in a checkerboard, total winding zero.
//!   Defaults `winding = 1`, `core = L/16`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{make_bubble_fixture, make_bubbles};
use crate::error::{Error, Result};
use crate::fiber::{FiberKind, FiberModel, Vec3};
use crate::fields::{FlowState, GaugeField, SectionField};
use crate::grid::{GridSpec, ScalarGrid};

/// Builds preset `name`; `seed` only affects `random-smooth`.
pub fn build(
    name: &str,
    params: &BTreeMap<String, f64>,
    spec: GridSpec,
    model: FiberModel,
    seed: u64,
) -> Result<FlowState> {
    let l = spec.length();
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    let sphere_only = |what: &str| -> Result<()> {
        if model.kind == FiberKind::Sphere {
            Ok(())
        } else {
            Err(Error::BadConfig(format!("preset `{what}` needs the sphere fiber")))
        }
    };
    let with_a0 = |section: SectionField| FlowState::new(GaugeField::zeros(spec), section, 0.0);
    match name {
        "ground" => with_a0(SectionField::constant(spec, model, model.ground_point())?),
        "south-pole" => {
            sphere_only(name)?;
            with_a0(SectionField::constant(spec, model, [0.0, 0.0, -1.0])?)
        }
        "equator" => {
            sphere_only(name)?;
            let w = get("winding", 1.0);
            let tilt = get("tilt", 0.0);
            with_a0(SectionField::from_fn(spec, model, |x, y| {
                let th = TAU * w * x / l;
                [th.cos(), th.sin(), tilt * (TAU * y / l).cos()]
            })?)
        }
        "bubble" => {
            sphere_only(name)?;
            let c = (get("center_x", 0.5 * l), get("center_y", 0.5 * l));
            with_model(make_bubble_fixture(spec, get("scale", l / 32.0), c)?, model)
        }
        "two-bubbles" => {
            sphere_only(name)?;
            let centers = [(0.25 * l, 0.5 * l), (0.75 * l, 0.5 * l)];
            with_model(make_bubbles(spec, get("scale", l / 32.0), &centers)?, model)
        }
        "random-smooth" => {
            let amplitude = get("amplitude", 0.5);
            let cutoff = get("cutoff", 3.0);
            if !(cutoff >= 1.0) || cutoff.fract() != 0.0 {
                return Err(Error::BadConfig(format!("cutoff = {cutoff} must be a positive integer")));
            }
            random_smooth(spec, model, seed, amplitude, cutoff as usize)
        }
        "vortex" => {
            if model.kind != FiberKind::Plane {
                return Err(Error::BadConfig("preset `vortex` needs the plane fiber".into()));
            }
            let n = get("winding", 1.0);
            if n.fract() != 0.0 {
                return Err(Error::BadConfig(format!("winding = {n} must be an integer")));
            }
            let core = get("core", l / 16.0);
            if !(core > 0.0) {
                return Err(Error::BadConfig(format!("core = {core} must be positive")));
            }
            let c = 0.25 * l + 0.5 * spec.spacing();
            with_a0(SectionField::from_fn(spec, model, |x, y| {
                let s = (
                    l / TAU * (TAU * (x - c) / l).sin(),
                    l / TAU * (TAU * (y - c) / l).sin(),
                );
                let rho = (s.0.hypot(s.1) / core).tanh();
                let psi = n * s.1.atan2(s.0);
                [rho * psi.cos(), rho * psi.sin(), 0.0]
            })?)
        }
        other => Err(Error::BadConfig(format!("unknown preset `{other}`"))),
    }
}

/// Rebuilds a sphere fixture with the configured central element.
fn with_model(state: FlowState, model: FiberModel) -> Result<FlowState> {
    let section = SectionField::new(*state.spec(), model, state.section.points().to_vec())?;
    FlowState::new(state.gauge, section, state.time)
}

/// Normalized random trigonometric sum, `|g| ≤ 1`.
fn random_sum(spec: GridSpec, rng: &mut ChaCha8Rng, cutoff: usize) -> ScalarGrid {
    let l = spec.length();
    let c = cutoff as i64;
    let mut terms = Vec::new();
    for m2 in -c..=c {
        for m1 in -c..=c {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let a: f64 = rng.gen_range(-1.0..=1.0);
            let b: f64 = rng.gen_range(-1.0..=1.0);
            terms.push((m1 as f64, m2 as f64, a, b));
        }
    }
    let norm: f64 = terms.iter().map(|t| t.2.abs() + t.3.abs()).sum();
    ScalarGrid::from_fn(spec, |x, y| {
        terms
            .iter()
            .map(|&(m1, m2, a, b)| {
                let arg = TAU * (m1 * x + m2 * y) / l;
                a * arg.cos() + b * arg.sin()
            })
            .sum::<f64>()
            / norm
    })
}

pub fn random_smooth(
    spec: GridSpec,
    model: FiberModel,
    seed: u64,
    amplitude: f64,
    cutoff: usize,
) -> Result<FlowState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<ScalarGrid> = (0..4).map(|_| random_sum(spec, &mut rng, cutoff)).collect();
    let gauge = GaugeField::from_components(g[0].map(|v| amplitude * v), g[1].map(|v| amplitude * v))?;
    let points: Vec<Vec3> = g[2]
        .values()
        .iter()
        .zip(g[3].values())
        .map(|(&u, &v)| match model.kind {
            FiberKind::Sphere => {
                let (polar, az) = (amplitude * u, PI * v);
                [polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()]
            }
            FiberKind::Plane => [1.0 + amplitude * u, amplitude * v, 0.0],
        })
        .collect();
    FlowState::new(gauge, SectionField::new(spec, model, points)?, 0.0)
}
