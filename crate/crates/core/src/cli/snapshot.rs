//! Binary snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `YMH1` |
//! | 4 | version `u32` (= 1) |
//! | 8 | `n` as `u64` |
//! | 8 | `L` as `f64` |
//! | 4 | fiber `u32` (0 sphere, 1 plane) |
//! | 8 | central element `c` as `f64` |
//! | 8 | time `t` as `f64` |
//!
//! followed by `A₁`, `A₂` and then each ambient coordinate of `φ` (three for
//! the sphere, two for the plane) as `n²` row-major `f64` arrays.

use std::fmt;

use crate::fiber::{FiberKind, FiberModel, Vec3};
use crate::fields::{FlowState, GaugeField, SectionField};
use crate::grid::{GridSpec, ScalarGrid};

pub const MAGIC: &[u8; 4] = b"YMH1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 44;

/// Tolerance on `|φ|` when a sphere snapshot is read back.
const SPHERE_TOL: f64 = 1e-9;

/// Keeps `n²` and the byte count far from overflow.
const MAX_N: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotError(pub String);

impl fmt::Display for SnapshotError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bad snapshot: {}", self.0)
    }
}

impl std::error::Error for SnapshotError {}

fn bad(msg: impl Into<String>) -> SnapshotError {
    SnapshotError(msg.into())
}

pub fn encode(state: &FlowState) -> Vec<u8> {
    let spec = state.spec();
    let model = state.model();
    let dim = model.ambient_dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * spec.len() * (2 + dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.n() as u64).to_le_bytes());
    out.extend_from_slice(&spec.length().to_le_bytes());
    out.extend_from_slice(&model.kind.code().to_le_bytes());
    out.extend_from_slice(&model.central_element.to_le_bytes());
    out.extend_from_slice(&state.time.to_le_bytes());
    for v in state.gauge.a1().values().iter().chain(state.gauge.a2().values()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in 0..dim {
        for p in state.section.points() {
            out.extend_from_slice(&p[c].to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], SnapshotError> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| bad(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length N"))
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn array(&mut self, len: usize) -> Result<Vec<f64>, SnapshotError> {
        (0..len).map(|_| self.f64()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<FlowState, SnapshotError> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(bad("wrong magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("version {version}, expected {VERSION}")));
    }
    let n = r.u64()?;
    let length = r.f64()?;
    let code = r.u32()?;
    let kind = FiberKind::from_code(code).ok_or_else(|| bad(format!("unknown fiber code {code}")))?;
    let c = r.f64()?;
    let time = r.f64()?;
    if n > MAX_N {
        return Err(bad(format!("n = {n} too large")));
    }
    let n = n as usize;
    let spec = GridSpec::new(n, length).map_err(|e| bad(e.to_string()))?;
    let dim = kind.ambient_dim();
    let expected = HEADER_LEN + 8 * (2 + dim) * spec.len();
    if bytes.len() != expected {
        return Err(bad(format!("{} bytes, header implies {expected}", bytes.len())));
    }
    if !c.is_finite() || !time.is_finite() {
        return Err(bad("non-finite header value"));
    }
    let a1 = ScalarGrid::from_vec(spec, r.array(spec.len())?).map_err(|e| bad(e.to_string()))?;
    let a2 = ScalarGrid::from_vec(spec, r.array(spec.len())?).map_err(|e| bad(e.to_string()))?;
    let coords: Vec<Vec<f64>> = (0..dim).map(|_| r.array(spec.len())).collect::<Result<_, _>>()?;
    let model = FiberModel::new(kind, c);
    let points: Vec<Vec3> = (0..spec.len())
        .map(|k| match kind {
            FiberKind::Sphere => [coords[0][k], coords[1][k], coords[2][k]],
            FiberKind::Plane => [coords[0][k], coords[1][k], 0.0],
        })
        .collect();
    if !points.iter().flatten().all(|v| v.is_finite()) {
        return Err(bad("non-finite section value"));
    }
    if kind == FiberKind::Sphere {
        if let Some(p) = points.iter().find(|p| (crate::fiber::norm_sq(p).sqrt() - 1.0).abs() > SPHERE_TOL) {
            return Err(bad(format!("point {p:?} is off the unit sphere")));
        }
    }
    let gauge = GaugeField::from_components(a1, a2).map_err(|e| bad(e.to_string()))?;
    let section = SectionField::from_projected(spec, model, points);
    FlowState::new(gauge, section, time).map_err(|e| bad(e.to_string()))
}
