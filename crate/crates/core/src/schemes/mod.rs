//! Worst-case error evaluation and minimal sample counts for the sampling
//! schemes: sign, box (per component and joint), wedge and majority.

pub mod box_scheme;
pub mod majority;
pub mod search;
pub mod sign;
pub mod wedge;

use serde::Serialize;

use crate::numerics::Real;

pub use box_scheme::{
    box_breakpoints, box_joint_worst_error, box_min_n, box_success_set, box_worst_error, delta_of_eta, BoxCurve,
    BoxJointCurve, Delta,
};
pub use majority::{
    angle_from_counts, majority_bound_n, majority_error, majority_quantize, MajorityLabel, MajoritySet,
};
pub use search::{Curve, MinN, WorstCase};
pub use sign::{sign_bound_n, sign_error, sign_min_n, SignCurve};
pub use wedge::{wedge_critical_angles, wedge_min_n, wedge_success_set, wedge_worst_error, WedgeCurve, WedgeGeometry};

/// Which one-sided limit of a piecewise-constant success set is meant.
///
/// `Left` is the limit from below in the curve parameter (probability for the
/// box, angle for the angular schemes), `Right` the limit from above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Point,
    Left,
    Right,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Point => "point",
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Where a worst case was found.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Probability(Real),
    Angle(Real),
}

impl Witness {
    pub fn to_f64(&self) -> f64 {
        match self {
            Witness::Probability(x) | Witness::Angle(x) => x.to_f64(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SchemeResult {
    pub n: u32,
    pub worst_error: Real,
    pub witness: Witness,
    pub side: Side,
    /// Set when no convexity argument covers `n`, so the breakpoint search
    /// was supplemented by a grid scan.
    pub unverified_convexity: bool,
}

impl SchemeResult {
    fn better_of(self, other: SchemeResult) -> SchemeResult {
        if other.worst_error > self.worst_error {
            other
        } else {
            self
        }
    }
}

/// Picks the maximum over a list of evaluated candidates.
pub(crate) fn max_result(results: impl IntoIterator<Item = SchemeResult>) -> Option<SchemeResult> {
    results.into_iter().reduce(SchemeResult::better_of)
}

/// Relative window around the f64 maximum inside which candidates are
/// re-evaluated at full precision.
pub(crate) const REFINE_WINDOW: f64 = 1e-6;

pub(crate) fn refine_indices(values: &[f64]) -> Vec<usize> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let cut = max * (1.0 - REFINE_WINDOW);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= cut)
        .map(|(i, _)| i)
        .collect()
}
