//! Target fibers with a Hamiltonian circle action.
//!
//! Two models are provided. `Sphere` is the unit sphere in ℝ³ rotated about
//! the third axis, with moment map the height `p₃`. `Plane` is ℝ² ≅ ℂ with
//! the rotation action and moment map `½|p|²`. Both store points as
//! `[f64; 3]`; plane points keep their third coordinate at zero.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ambient coordinates of a fiber point or tangent vector.
pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq(a: &Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(s: f64, a: &Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

/// `a + s·b`
#[inline]
pub fn axpy(a: &Vec3, s: f64, b: &Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Rotation by `angle` in the (1,2)-plane, i.e. the flow of the action
/// field for time `angle`.
#[inline]
pub fn rotate(p: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

/// The infinitesimal generator `J p = (−p₂, p₁, 0)`.
#[inline]
pub fn generator(p: &Vec3) -> Vec3 {
    [-p[1], p[0], 0.0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FiberKind {
    Sphere,
    Plane,
}

impl FiberKind {
    pub fn ambient_dim(self) -> usize {
        match self {
            FiberKind::Sphere => 3,
            FiberKind::Plane => 2,
        }
    }

    /// Default central element `c` of the potential `(μ − c)²`.
    pub fn default_central_element(self) -> f64 {
        match self {
            FiberKind::Sphere => 1.0,
            FiberKind::Plane => 0.5,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            FiberKind::Sphere => 0,
            FiberKind::Plane => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(FiberKind::Sphere),
            1 => Some(FiberKind::Plane),
            _ => None,
        }
    }
}

impl fmt::Display for FiberKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FiberKind::Sphere => "sphere",
            FiberKind::Plane => "plane",
        })
    }
}

impl FromStr for FiberKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(FiberKind::Sphere),
            "plane" => Ok(FiberKind::Plane),
            other => Err(Error::BadConfig(format!("unknown fiber `{other}`"))),
        }
    }
}

/// Fiber `(M, ω)` together with its moment map and central element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberModel {
    pub kind: FiberKind,
    pub central_element: f64,
}

impl FiberModel {
    pub fn new(kind: FiberKind, central_element: f64) -> Self {
        Self {
            kind,
            central_element,
        }
    }

    pub fn sphere() -> Self {
        Self::new(FiberKind::Sphere, FiberKind::Sphere.default_central_element())
    }

    pub fn plane() -> Self {
        Self::new(FiberKind::Plane, FiberKind::Plane.default_central_element())
    }

    pub fn ambient_dim(&self) -> usize {
        self.kind.ambient_dim()
    }

    /// Nearest point of the fiber. The sphere refuses points within `1e-8`
    /// of the origin.
    pub fn project(&self, p: &Vec3) -> Result<Vec3> {
        match self.kind {
            FiberKind::Sphere => {
                let r = norm_sq(p).sqrt();
                if !(r >= 1e-8) {
                    return Err(Error::DegeneratePoint { norm: r });
                }
                Ok(scale(1.0 / r, p))
            }
            FiberKind::Plane => Ok([p[0], p[1], 0.0]),
        }
    }

    /// Orthogonal projection of an ambient vector onto `T_p M`.
    #[inline]
    pub fn tangent_project(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        match self.kind {
            FiberKind::Sphere => axpy(v, -dot(v, p), p),
            FiberKind::Plane => [v[0], v[1], 0.0],
        }
    }

    /// Action field `X_ξ(p)` for the generator `ξ = 1`.
    #[inline]
    pub fn action_field(&self, p: &Vec3) -> Vec3 {
        generator(p)
    }

    #[inline]
    pub fn moment(&self, p: &Vec3) -> f64 {
        match self.kind {
            FiberKind::Sphere => p[2],
            FiberKind::Plane => 0.5 * (p[0] * p[0] + p[1] * p[1]),
        }
    }

    /// Gradient of `μ` in the ambient space, before tangent projection.
    #[inline]
    pub fn ambient_moment_gradient(&self, p: &Vec3) -> Vec3 {
        match self.kind {
            FiberKind::Sphere => [0.0, 0.0, 1.0],
            FiberKind::Plane => [p[0], p[1], 0.0],
        }
    }

    /// Riemannian gradient `∇μ(p)`.
    #[inline]
    pub fn moment_gradient(&self, p: &Vec3) -> Vec3 {
        self.tangent_project(p, &self.ambient_moment_gradient(p))
    }

    /// Geodesic step `exp_p(v)` for a tangent vector `v`.
    pub fn exp_map(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        match self.kind {
            FiberKind::Sphere => {
                let t = norm_sq(v).sqrt();
                if t == 0.0 {
                    return *p;
                }
                let (s, c) = t.sin_cos();
                axpy(&scale(c, p), s / t, v)
            }
            FiberKind::Plane => [p[0] + v[0], p[1] + v[1], 0.0],
        }
    }

    /// Symplectic form `ω_p(u, v)`: induced area form on the sphere
    /// (`⟨p, u × v⟩`), `dx ∧ dy` on the plane.
    pub fn symplectic_form(&self, p: &Vec3, u: &Vec3, v: &Vec3) -> f64 {
        match self.kind {
            FiberKind::Sphere => {
                let cross = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                dot(p, &cross)
            }
            FiberKind::Plane => u[1] * v[0] - u[0] * v[1],
        }
    }

    /// Whether `p` lies on the fiber to within `tol`.
    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        match self.kind {
            FiberKind::Sphere => (norm_sq(p).sqrt() - 1.0).abs() <= tol,
            FiberKind::Plane => p[2] == 0.0,
        }
    }

    /// North pole for the sphere, the unit circle point `(1, 0)` for the
    /// plane: a zero of the potential for the default `c`.
    pub fn ground_point(&self) -> Vec3 {
        match self.kind {
            FiberKind::Sphere => [0.0, 0.0, 1.0],
            FiberKind::Plane => [(2.0 * self.central_element).max(0.0).sqrt(), 0.0, 0.0],
        }
    }
}
