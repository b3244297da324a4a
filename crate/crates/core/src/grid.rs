//! Periodic N×N lattice on the flat torus `[0, L)²`.
//!
//! Scalars and both components of a 1-form live on the nodes. Node `(i, j)`
//! sits at `(i·h, j·h)`; axis 1 runs along `i`, axis 2 along `j`, and arrays
//! are stored row-major with `j` as the row index (`idx = j·n + i`).
//!
//! Every difference operator is built from [`forward_diff`] and its exact
//! negative adjoint [`backward_diff_adjoint`], so that the discrete
//! Laplacian, divergence and curl used throughout the crate satisfy
//! summation by parts with no boundary terms.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Lattice geometry shared by every field on the torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
    spacing: f64,
}

impl GridSpec {
    /// Builds an `n × n` grid of side `length`.
    ///
    /// `n` must be even and at least 8. The stored length is recomputed as
    /// `spacing · n` so the two always agree exactly.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::BadGrid(format!("n = {n} must be even and >= 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::BadGrid(format!("length = {length} must be positive")));
        }
        let spacing = length / n as f64;
        Ok(Self {
            n,
            length: spacing * n as f64,
            spacing,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing `h = L / n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Area of one cell, `h²`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    /// Physical position of node `(i, j)`.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.spacing, j as f64 * self.spacing)
    }

    /// Index of the neighbour one step forward along `axis`.
    #[inline]
    pub fn forward(&self, idx: usize, axis: Axis) -> usize {
        let (i, j) = self.coords(idx);
        match axis {
            Axis::X => self.idx((i + 1) % self.n, j),
            Axis::Y => self.idx(i, (j + 1) % self.n),
        }
    }

    /// Index of the neighbour one step backward along `axis`.
    #[inline]
    pub fn backward(&self, idx: usize, axis: Axis) -> usize {
        let (i, j) = self.coords(idx);
        match axis {
            Axis::X => self.idx((i + self.n - 1) % self.n, j),
            Axis::Y => self.idx(i, (j + self.n - 1) % self.n),
        }
    }

    /// Shortest periodic displacement from `a` to `b` along one axis, in
    /// lattice units.
    #[inline]
    pub fn wrap_offset(&self, a: usize, b: usize) -> isize {
        let n = self.n as isize;
        let mut d = b as isize - a as isize;
        if d > n / 2 {
            d -= n;
        } else if d < -n / 2 {
            d += n;
        }
        d
    }

    /// Periodic (geodesic) distance between two nodes.
    pub fn distance(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let di = self.wrap_offset(a.0, b.0) as f64;
        let dj = self.wrap_offset(a.1, b.1) as f64;
        (di * di + dj * dj).sqrt() * self.spacing
    }
}

/// Coordinate direction on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    /// 1-based axis number as used in configuration and reports.
    pub fn number(self) -> u8 {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
        }
    }
}

/// Real scalar field on the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    /// Wraps a row-major buffer. Fails if the length is wrong or any entry
    /// is not finite.
    pub fn from_vec(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch {
                expected: spec.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField("scalar grid"));
        }
        Ok(Self { spec, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..spec.len())
            .map(|k| {
                let (i, j) = spec.coords(k);
                let (x, y) = spec.position(i, j);
                f(x, y)
            })
            .collect();
        Self { spec, values }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.spec.idx(i, j);
        self.values[k] = v;
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    /// `h² Σ f`, the discrete integral over the torus.
    pub fn integral(&self) -> f64 {
        self.spec.cell_area() * self.sum()
    }

    /// `‖f‖₂ = (h² Σ f²)^½`.
    pub fn norm(&self) -> f64 {
        inner(self, self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Periodic translation by `(di, dj)` nodes: `out[i + di, j + dj] = self[i, j]`.
    pub fn shifted(&self, di: usize, dj: usize) -> Self {
        let n = self.spec.n;
        let mut out = Self::zeros(self.spec);
        for j in 0..n {
            for i in 0..n {
                out.set((i + di) % n, (j + dj) % n, self.get(i, j));
            }
        }
        out
    }
}

/// Real 1-form `(comp1, comp2)` with both components on the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct OneFormGrid {
    pub comp1: ScalarGrid,
    pub comp2: ScalarGrid,
}

impl OneFormGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            comp1: ScalarGrid::zeros(spec),
            comp2: ScalarGrid::zeros(spec),
        }
    }

    pub fn new(comp1: ScalarGrid, comp2: ScalarGrid) -> Result<Self> {
        if comp1.spec() != comp2.spec() {
            return Err(Error::ShapeMismatch {
                expected: comp1.spec().len(),
                found: comp2.spec().len(),
            });
        }
        Ok(Self { comp1, comp2 })
    }

    pub fn constant(spec: GridSpec, a1: f64, a2: f64) -> Self {
        Self {
            comp1: ScalarGrid::constant(spec, a1),
            comp2: ScalarGrid::constant(spec, a2),
        }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.comp1.spec()
    }

    #[inline]
    pub fn component(&self, axis: Axis) -> &ScalarGrid {
        match axis {
            Axis::X => &self.comp1,
            Axis::Y => &self.comp2,
        }
    }

    #[inline]
    pub fn component_mut(&mut self, axis: Axis) -> &mut ScalarGrid {
        match axis {
            Axis::X => &mut self.comp1,
            Axis::Y => &mut self.comp2,
        }
    }

    pub fn norm(&self) -> f64 {
        one_form_inner(self, self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.comp1.is_finite() && self.comp2.is_finite()
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self {
            comp1: self.comp1.zip_map(&other.comp1, |a, b| a + s * b),
            comp2: self.comp2.zip_map(&other.comp2, |a, b| a + s * b),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            comp1: self.comp1.map(|a| s * a),
            comp2: self.comp2.map(|a| s * a),
        }
    }
}

/// `⟨u, v⟩ = h² Σ u·v`.
pub fn inner(u: &ScalarGrid, v: &ScalarGrid) -> f64 {
    debug_assert_eq!(u.spec, v.spec);
    u.spec.cell_area() * u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>()
}

/// h²-weighted inner product of two 1-forms.
pub fn one_form_inner(u: &OneFormGrid, v: &OneFormGrid) -> f64 {
    inner(&u.comp1, &v.comp1) + inner(&u.comp2, &v.comp2)
}

/// `(f[x + e_axis] − f[x]) / h` with periodic wraparound.
pub fn forward_diff(f: &ScalarGrid, axis: Axis) -> ScalarGrid {
    let spec = f.spec;
    let inv_h = 1.0 / spec.spacing;
    let values = (0..spec.len())
        .map(|k| (f.values[spec.forward(k, axis)] - f.values[k]) * inv_h)
        .collect();
    ScalarGrid { spec, values }
}

/// Backward difference `(f[x] − f[x − e_axis]) / h`.
///
/// This is the exact negative adjoint of [`forward_diff`] under the
/// h²-weighted inner product: `⟨D u, v⟩ = −⟨u, D* v⟩`.
pub fn backward_diff_adjoint(f: &ScalarGrid, axis: Axis) -> ScalarGrid {
    let spec = f.spec;
    let inv_h = 1.0 / spec.spacing;
    let values = (0..spec.len())
        .map(|k| (f.values[k] - f.values[spec.backward(k, axis)]) * inv_h)
        .collect();
    ScalarGrid { spec, values }
}

/// Discrete exterior derivative of a scalar: `(D₁f, D₂f)`.
pub fn gradient(f: &ScalarGrid) -> OneFormGrid {
    OneFormGrid {
        comp1: forward_diff(f, Axis::X),
        comp2: forward_diff(f, Axis::Y),
    }
}

/// Divergence `B₁a₁ + B₂a₂`; equals `−d*a` for the true adjoint `d*`.
pub fn divergence(a: &OneFormGrid) -> ScalarGrid {
    let b1 = backward_diff_adjoint(&a.comp1, Axis::X);
    let b2 = backward_diff_adjoint(&a.comp2, Axis::Y);
    b1.zip_map(&b2, |x, y| x + y)
}

/// Scalar curl `D₁a₂ − D₂a₁`.
pub fn curl(a: &OneFormGrid) -> ScalarGrid {
    let d1 = forward_diff(&a.comp2, Axis::X);
    let d2 = forward_diff(&a.comp1, Axis::Y);
    d1.zip_map(&d2, |x, y| x - y)
}

/// Five-point Laplacian `Σ_axis B_axis D_axis f`.
pub fn discrete_laplacian(f: &ScalarGrid) -> ScalarGrid {
    divergence(&gradient(f))
}

/// Periodic Poisson solver for the five-point Laplacian, diagonalised by
/// the 2-D DFT.
pub struct PoissonSolver {
    spec: GridSpec,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Symbol of the Laplacian, indexed like the grid.
    symbol: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.n;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let h2 = spec.cell_area();
        let s: Vec<f64> = (0..n)
            .map(|k| (PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        let mut symbol = vec![0.0; spec.len()];
        for j in 0..n {
            for i in 0..n {
                symbol[spec.idx(i, j)] = -4.0 * (s[i] + s[j]) / h2;
            }
        }
        Self {
            spec,
            fft,
            ifft,
            symbol,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Solves `discrete_laplacian(θ) = rhs` with `mean(θ) = 0`.
    ///
    /// The right side must have zero mean (to `1e-10·‖rhs‖`), the
    /// solvability condition on the torus.
    pub fn solve(&self, rhs: &ScalarGrid) -> Result<ScalarGrid> {
        if rhs.spec != self.spec {
            return Err(Error::ShapeMismatch {
                expected: self.spec.len(),
                found: rhs.spec.len(),
            });
        }
        let mean = rhs.mean();
        // ‖mean‖₂ over the torus is |mean|·L
        if mean.abs() * self.spec.length() > 1e-10 * rhs.norm() {
            return Err(Error::NonZeroMean { mean });
        }
        let n = self.spec.n;
        let mut buf: Vec<Complex64> = rhs.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_2d(&mut buf, &self.fft);
        for (c, &lam) in buf.iter_mut().zip(&self.symbol) {
            *c = if lam == 0.0 { Complex64::new(0.0, 0.0) } else { *c / lam };
        }
        self.transform_2d(&mut buf, &self.ifft);
        let norm = 1.0 / (n * n) as f64;
        let mut out = ScalarGrid {
            spec: self.spec,
            values: buf.iter().map(|c| c.re * norm).collect(),
        };
        let m = out.mean();
        out.values.iter_mut().for_each(|v| *v -= m);
        Ok(out)
    }

    fn transform_2d(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.spec.n;
        // rows are contiguous
        fft.process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = buf[j * n + i];
            }
            fft.process(&mut col);
            for j in 0..n {
                buf[j * n + i] = col[j];
            }
        }
    }
}

/// One-shot convenience wrapper around [`PoissonSolver`].
pub fn solve_periodic_poisson(rhs: &ScalarGrid) -> Result<ScalarGrid> {
    PoissonSolver::new(rhs.spec).solve(rhs)
}
