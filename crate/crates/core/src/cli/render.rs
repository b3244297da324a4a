//! Binary portable graymap (`P5`) output.

use std::str::FromStr;

use crate::energy::{curvature, density_field};
use crate::fields::FlowState;
use crate::grid::ScalarGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldSelector {
    /// Energy density `|F|² + |D_Aφ|² + (μ − c)²`.
    Density,
    Curvature,
    /// `μ(φ)`.
    Moment,
}

impl FromStr for FieldSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "density" => Ok(Self::Density),
            "curvature" => Ok(Self::Curvature),
            "moment" => Ok(Self::Moment),
            other => Err(format!("unknown field `{other}`; expected density, curvature or moment")),
        }
    }
}

pub fn select(state: &FlowState, field: FieldSelector) -> ScalarGrid {
    match field {
        FieldSelector::Density => density_field(state),
        FieldSelector::Curvature => curvature(&state.gauge),
        FieldSelector::Moment => {
            let model = *state.model();
            let v = state.section.points().iter().map(|p| model.moment(p)).collect();
            ScalarGrid::from_vec(*state.spec(), v).expect("one value per node")
        }
    }
}

/// `n×n` graymap, min-max normalized to `0..=255`, `y` pointing up. A
/// constant field renders black.
pub fn to_pgm(field: &ScalarGrid) -> Vec<u8> {
    let spec = field.spec();
    let n = spec.n();
    let (lo, hi) = field.min_max();
    let range = hi - lo;
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for row in 0..n {
        let j = n - 1 - row;
        for i in 0..n {
            let v = field.get(i, j);
            let g = if range > 0.0 { ((v - lo) / range * 255.0).round() } else { 0.0 };
            out.push(g.clamp(0.0, 255.0) as u8);
        }
    }
    out
}
