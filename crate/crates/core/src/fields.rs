//! Gauge fields, sections, gauge transformations and their action.
//!
//! The bundle is trivial and the reference connection is zero, so a
//! connection is a real 1-form `A` and a section is a fiber-valued function
//! `φ`. A gauge transformation `s = exp(iθ)` acts by
//!
//! ```text
//! A ↦ A + dθ,    φ ↦ exp(−θJ)·φ
//! ```
//!
//! which is the pairing that leaves `D_Aφ = dφ + A·X(φ)` covariant.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fiber::{rotate, FiberModel, Vec3};
use crate::grid::{forward_diff, Axis, GridSpec, OneFormGrid, ScalarGrid};

/// Connection 1-form on the trivial U(1) bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeField {
    pub form: OneFormGrid,
}

impl GaugeField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            form: OneFormGrid::zeros(spec),
        }
    }

    pub fn constant(spec: GridSpec, a1: f64, a2: f64) -> Self {
        Self {
            form: OneFormGrid::constant(spec, a1, a2),
        }
    }

    pub fn from_components(a1: ScalarGrid, a2: ScalarGrid) -> Result<Self> {
        Ok(Self {
            form: OneFormGrid::new(a1, a2)?,
        })
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.form.spec()
    }

    #[inline]
    pub fn a1(&self) -> &ScalarGrid {
        &self.form.comp1
    }

    #[inline]
    pub fn a2(&self) -> &ScalarGrid {
        &self.form.comp2
    }

    #[inline]
    pub fn component(&self, axis: Axis) -> &ScalarGrid {
        self.form.component(axis)
    }

    pub fn is_finite(&self) -> bool {
        self.form.is_finite()
    }
}

/// A section `φ`, one fiber point per node.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionField {
    spec: GridSpec,
    model: FiberModel,
    points: Vec<Vec3>,
}

impl SectionField {
    /// Builds a section, projecting every point onto the fiber.
    pub fn new(spec: GridSpec, model: FiberModel, points: Vec<Vec3>) -> Result<Self> {
        if points.len() != spec.len() {
            return Err(Error::ShapeMismatch {
                expected: spec.len(),
                found: points.len(),
            });
        }
        let points = points
            .iter()
            .map(|p| {
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteField("section"));
                }
                model.project(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            model,
            points,
        })
    }

    /// Wraps points that already satisfy the fiber constraint.
    pub(crate) fn from_projected(spec: GridSpec, model: FiberModel, points: Vec<Vec3>) -> Self {
        debug_assert_eq!(points.len(), spec.len());
        Self {
            spec,
            model,
            points,
        }
    }

    pub fn constant(spec: GridSpec, model: FiberModel, p: Vec3) -> Result<Self> {
        Self::new(spec, model, vec![p; spec.len()])
    }

    pub fn from_fn(spec: GridSpec, model: FiberModel, f: impl Fn(f64, f64) -> Vec3) -> Result<Self> {
        let points = (0..spec.len())
            .map(|k| {
                let (i, j) = spec.coords(k);
                let (x, y) = spec.position(i, j);
                f(x, y)
            })
            .collect();
        Self::new(spec, model, points)
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn model(&self) -> &FiberModel {
        &self.model
    }

    #[inline]
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Vec3 {
        self.points[self.spec.idx(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Row-major array of one ambient coordinate.
    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[c]).collect()
    }
}

/// Pointwise gauge transformation `s = exp(iθ)`.
///
/// The angle is stored as an unwrapped periodic representative plus an
/// integer winding pair; the full angle is
/// `θ(x, y) = angle(x, y) + 2π(w₁x + w₂y)/L`, whose derivative is taken on
/// the smooth branch.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform {
    pub angle: ScalarGrid,
    pub winding: (i64, i64),
}

impl GaugeTransform {
    pub fn identity(spec: GridSpec) -> Self {
        Self {
            angle: ScalarGrid::zeros(spec),
            winding: (0, 0),
        }
    }

    pub fn from_angle(angle: ScalarGrid) -> Self {
        Self {
            angle,
            winding: (0, 0),
        }
    }

    pub fn with_winding(angle: ScalarGrid, winding: (i64, i64)) -> Self {
        Self { angle, winding }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.angle.spec()
    }

    /// Full angle at node `(i, j)`, winding included.
    #[inline]
    pub fn full_angle(&self, i: usize, j: usize) -> f64 {
        let n = self.spec().n() as f64;
        self.angle.get(i, j)
            + TAU * (self.winding.0 as f64 * i as f64 + self.winding.1 as f64 * j as f64) / n
    }

    /// `dθ` on the smooth branch.
    pub fn differential(&self) -> OneFormGrid {
        let l = self.spec().length();
        let w1 = TAU * self.winding.0 as f64 / l;
        let w2 = TAU * self.winding.1 as f64 / l;
        OneFormGrid {
            comp1: forward_diff(&self.angle, Axis::X).map(|v| v + w1),
            comp2: forward_diff(&self.angle, Axis::Y).map(|v| v + w2),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            angle: self.angle.map(|v| -v),
            winding: (-self.winding.0, -self.winding.1),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.angle.is_finite()
    }
}

/// The pair `(A, φ)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub gauge: GaugeField,
    pub section: SectionField,
    pub time: f64,
}

impl FlowState {
    pub fn new(gauge: GaugeField, section: SectionField, time: f64) -> Result<Self> {
        if gauge.spec() != section.spec() {
            return Err(Error::ShapeMismatch {
                expected: section.spec().len(),
                found: gauge.spec().len(),
            });
        }
        Ok(Self {
            gauge,
            section,
            time,
        })
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.section.spec()
    }

    #[inline]
    pub fn model(&self) -> &FiberModel {
        self.section.model()
    }

    pub fn is_finite(&self) -> bool {
        self.gauge.is_finite() && self.section.is_finite() && self.time.is_finite()
    }
}

/// Rotates every point of `φ` by `−θ(x)`.
pub fn rotate_section(s: &GaugeTransform, section: &SectionField) -> Result<SectionField> {
    let spec = *section.spec();
    if s.spec() != &spec {
        return Err(Error::ShapeMismatch {
            expected: spec.len(),
            found: s.spec().len(),
        });
    }
    let points = (0..spec.len())
        .map(|k| {
            let (i, j) = spec.coords(k);
            rotate(&section.points[k], -s.full_angle(i, j))
        })
        .collect();
    Ok(SectionField::from_projected(spec, *section.model(), points))
}

/// Pulls `(A, φ)` back by `s`: `A ↦ A + dθ`, `φ ↦ exp(−θJ)φ`. Time is
/// unchanged.
pub fn apply_gauge(s: &GaugeTransform, state: &FlowState) -> Result<FlowState> {
    if s.spec() != state.spec() {
        return Err(Error::ShapeMismatch {
            expected: state.spec().len(),
            found: s.spec().len(),
        });
    }
    let form = state.gauge.form.axpy(1.0, &s.differential());
    Ok(FlowState {
        gauge: GaugeField { form },
        section: rotate_section(s, &state.section)?,
        time: state.time,
    })
}

/// Group product: angles and windings add.
pub fn compose_gauge(s1: &GaugeTransform, s2: &GaugeTransform) -> Result<GaugeTransform> {
    if s1.spec() != s2.spec() {
        return Err(Error::ShapeMismatch {
            expected: s1.spec().len(),
            found: s2.spec().len(),
        });
    }
    Ok(GaugeTransform {
        angle: s1.angle.zip_map(&s2.angle, |a, b| a + b),
        winding: (s1.winding.0 + s2.winding.0, s1.winding.1 + s2.winding.1),
    })
}

/// Reduces an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Period integrals `(∮A₁dx, ∮A₂dy)` averaged over all rows and columns,
/// without reduction.
pub fn holonomy_raw(a: &GaugeField) -> (f64, f64) {
    let spec = a.spec();
    let n = spec.n() as f64;
    let h = spec.spacing();
    (h * a.a1().sum() / n, h * a.a2().sum() / n)
}

/// Holonomy around the two torus generators, reduced mod 2π to `(−π, π]`.
pub fn holonomy(a: &GaugeField) -> (f64, f64) {
    let (h1, h2) = holonomy_raw(a);
    (wrap_angle(h1), wrap_angle(h2))
}
