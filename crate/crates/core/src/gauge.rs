//! Coulomb gauge fixing and flat-connection analysis on the torus.
//!
//! On the flat torus every connection splits orthogonally as
//! `A = dψ + h + β`, with `h` constant (harmonic) and `β` co-exact. Fixing
//! the Coulomb gauge removes `dψ` by one periodic Poisson solve. The
//! harmonic part is reported but never removed: only its `2π/L` lattice is
//! reachable by (large) gauge transformations.

use std::f64::consts::TAU;

use crate::error::Result;
use crate::fields::{holonomy, holonomy_raw, wrap_angle, GaugeField, GaugeTransform};
use crate::grid::{
    backward_diff_adjoint, curl, divergence, gradient, Axis, OneFormGrid, PoissonSolver,
};

/// Output of [`coulomb_fix`].
#[derive(Clone, Debug)]
pub struct CoulombResult {
    /// `s` with `fixed = A + dθ`.
    pub transform: GaugeTransform,
    pub fixed: GaugeField,
    /// Mean of each component of `fixed`.
    pub harmonic_part: (f64, f64),
    /// `‖div(fixed)‖₂`.
    pub residual: f64,
}

impl CoulombResult {
    /// Reported constant `‖β‖_{H¹} / (‖F‖ + ‖d*F‖)` for the co-exact part
    /// `β = fixed − harmonic_part`; zero when the curvature vanishes.
    pub fn h1_constant(&self) -> f64 {
        let spec = *self.fixed.spec();
        let (m1, m2) = self.harmonic_part;
        let beta = OneFormGrid {
            comp1: self.fixed.a1().map(|v| v - m1),
            comp2: self.fixed.a2().map(|v| v - m2),
        };
        let mut h1_sq = beta.norm().powi(2);
        for comp in [&beta.comp1, &beta.comp2] {
            for axis in Axis::BOTH {
                h1_sq += crate::grid::forward_diff(comp, axis).norm().powi(2);
            }
        }
        let f = curl(&self.fixed.form);
        let dstar_f = OneFormGrid {
            comp1: backward_diff_adjoint(&f, Axis::Y),
            comp2: backward_diff_adjoint(&f, Axis::X).map(|v| -v),
        };
        let denom = f.norm() + dstar_f.norm();
        if denom == 0.0 || spec.len() == 0 {
            0.0
        } else {
            h1_sq.sqrt() / denom
        }
    }
}

/// Moves `A` into the Coulomb slice `div A = 0`.
pub fn coulomb_fix(a: &GaugeField) -> Result<CoulombResult> {
    coulomb_fix_with(&PoissonSolver::new(*a.spec()), a)
}

/// [`coulomb_fix`] with a prebuilt solver.
pub fn coulomb_fix_with(solver: &PoissonSolver, a: &GaugeField) -> Result<CoulombResult> {
    let rhs = divergence(&a.form).map(|v| -v);
    // telescoping: the mean is zero up to rounding; remove it exactly
    let m = rhs.mean();
    let rhs = rhs.map(|v| v - m);
    let theta = solver.solve(&rhs)?;
    let fixed = GaugeField {
        form: a.form.axpy(1.0, &gradient(&theta)),
    };
    let residual = divergence(&fixed.form).norm();
    let harmonic_part = (fixed.a1().mean(), fixed.a2().mean());
    Ok(CoulombResult {
        transform: GaugeTransform::from_angle(theta),
        fixed,
        harmonic_part,
        residual,
    })
}

/// Outcome of [`is_pure_gauge`].
#[derive(Clone, Debug)]
pub struct PureGaugeReport {
    pub pure: bool,
    /// `s` with `A = 0 + dθ` (up to `tol`) when `pure`; the Coulomb
    /// transform otherwise.
    pub witness: GaugeTransform,
    pub curvature_norm: f64,
    /// Holonomy reduced to `(−π, π]`.
    pub holonomy: (f64, f64),
    pub winding: (i64, i64),
}

/// Decides whether `A` is gauge equivalent to zero: `F = 0` and both
/// holonomies lie in `2πℤ`, each to within `tol`.
pub fn is_pure_gauge(a: &GaugeField, tol: f64) -> Result<PureGaugeReport> {
    let curvature_norm = curl(&a.form).norm();
    let hol = holonomy(a);
    let raw = holonomy_raw(a);
    let winding = ((raw.0 / TAU).round() as i64, (raw.1 / TAU).round() as i64);
    let pure = curvature_norm <= tol && hol.0.abs() <= tol && hol.1.abs() <= tol;
    let fix = coulomb_fix(a)?;
    let witness = if pure {
        // A = −dθ_c + fixed, and fixed ≈ 2π·winding/L
        GaugeTransform::with_winding(fix.transform.inverse().angle, winding)
    } else {
        fix.transform
    };
    Ok(PureGaugeReport {
        pure,
        witness,
        curvature_norm,
        holonomy: hol,
        winding,
    })
}

/// Distance of an angle from `2πℤ`.
pub fn distance_to_lattice(angle: f64) -> f64 {
    wrap_angle(angle).abs()
}
