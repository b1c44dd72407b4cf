use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_4, TAU};

use rug::{Float, Rational};

use super::search::{Curve, MinN, WorstCase};
use super::{max_result, refine_indices, SchemeResult, Side, Witness};
use crate::error::{domain, Result};
use crate::numerics::{fast, Bernoulli, PrecisionContext, RadAngle, Real, SuccessSet2D};

const TIE_F64: f64 = 1e-9;
const MERGE_F64: f64 = 1e-12;

/// Grid size and half-width of the acceptance wedge, centred at `(n/2, n/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WedgeGeometry {
    n: u32,
    eta: RadAngle,
}

impl WedgeGeometry {
    /// `0 < η ≤ π/2`.
    pub fn new(n: u32, eta: RadAngle) -> Result<Self> {
        if eta.cmp_pi_frac(0, 1) != Ordering::Greater || eta.cmp_pi_frac(1, 2) == Ordering::Greater {
            return domain(format!("wedge half-width {eta} outside (0, π/2]"));
        }
        Ok(WedgeGeometry { n, eta })
    }

    /// Set construction also accepts half-widths up to `π`.
    pub fn wide(n: u32, eta: RadAngle) -> Result<Self> {
        if eta.cmp_pi_frac(0, 1) != Ordering::Greater || eta.cmp_pi_frac(1, 1) == Ordering::Greater {
            return domain(format!("wedge half-width {eta} outside (0, π]"));
        }
        Ok(WedgeGeometry { n, eta })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn eta(&self) -> &RadAngle {
        &self.eta
    }

    pub fn center(&self) -> (f64, f64) {
        (self.n as f64 / 2.0, self.n as f64 / 2.0)
    }

    fn is_right_angle(&self) -> bool {
        self.eta.cmp_pi_frac(1, 2) == Ordering::Equal
    }

    fn is_wide(&self) -> bool {
        self.eta.cmp_pi_frac(1, 2) == Ordering::Greater
    }

    fn is_full(&self) -> bool {
        self.eta.cmp_pi_frac(1, 1) != Ordering::Less
    }
}

/// Edge directions of the wedge at one angle; `exact` carries the
/// full-precision copies used to settle near-ties.
struct Frame {
    lo: [f64; 2],
    hi: [f64; 2],
    exact: Option<([Real; 2], [Real; 2], PrecisionContext)>,
    wide: bool,
    full: bool,
    right_angle: bool,
}

impl Frame {
    fn from_f64(geom: &WedgeGeometry, alpha: f64) -> Self {
        let eta = geom.eta.to_f64();
        let unit = |a: f64| [a.cos(), a.sin()];
        Frame {
            lo: unit(alpha - eta),
            hi: unit(alpha + eta),
            exact: None,
            wide: geom.is_wide(),
            full: geom.is_full(),
            right_angle: geom.is_right_angle(),
        }
    }

    fn from_real(geom: &WedgeGeometry, alpha: &Real, ctx: PrecisionContext) -> Self {
        let eta = geom.eta.to_real(ctx);
        let unit = |a: Real| {
            let (s, c) = a.sin_cos(Float::new(ctx.bits()));
            [c, s]
        };
        let lo = unit(Float::with_val(ctx.bits(), alpha - &eta));
        let hi = unit(Float::with_val(ctx.bits(), alpha + &eta));
        let to_f = |u: &[Real; 2]| [u[0].to_f64(), u[1].to_f64()];
        Frame {
            lo: to_f(&lo),
            hi: to_f(&hi),
            exact: Some((lo, hi, ctx)),
            wide: geom.is_wide(),
            full: geom.is_full(),
            right_angle: geom.is_right_angle(),
        }
    }

    /// Sign of `cross(u, v)`, `Equal` meaning `v` lies on the line of `u`.
    fn cross_sign(&self, upper: bool, vx: i64, vy: i64) -> Ordering {
        let u = if upper { self.hi } else { self.lo };
        let c = u[0] * vy as f64 - u[1] * vx as f64;
        let norm = (vx as f64).hypot(vy as f64);
        if c.abs() > TIE_F64 * norm {
            return c.partial_cmp(&0.0).expect("finite");
        }
        match &self.exact {
            None => Ordering::Equal,
            Some((lo, hi, ctx)) => {
                let u = if upper { hi } else { lo };
                let c = Float::with_val(ctx.bits(), &u[0] * vy) - Float::with_val(ctx.bits(), &u[1] * vx);
                if Float::with_val(ctx.bits(), c.abs_ref()) <= ctx.tolerance() * norm {
                    Ordering::Equal
                } else {
                    c.partial_cmp(&0u32).expect("finite")
                }
            }
        }
    }

    fn member(&self, vx: i64, vy: i64, side: Side) -> bool {
        if vx == 0 && vy == 0 {
            return false;
        }
        if self.full {
            return true;
        }
        let dot = |u: [f64; 2]| u[0] * vx as f64 + u[1] * vy as f64;
        let c_lo = self.cross_sign(false, vx, vy);
        let c_hi = self.cross_sign(true, vx, vy).reverse();
        let on_lower = c_lo == Ordering::Equal && dot(self.lo) > 0.0;
        let on_upper = c_hi == Ordering::Equal && dot(self.hi) > 0.0;
        match (on_lower, on_upper) {
            (true, true) => true,
            (true, false) => side != Side::Right,
            (false, true) => side != Side::Left,
            (false, false) => {
                let (a, b) = (c_lo == Ordering::Greater, c_hi == Ordering::Greater);
                if self.wide {
                    a || b
                } else {
                    a && b
                }
            }
        }
    }

    /// Member rows `[lo, hi]` of column `vx ≠ 0` for a wedge of at most a
    /// half-plane, from the two edge constraints.
    fn column(&self, n: u32, vx: i64, side: Side) -> (i64, i64) {
        let (mut lo, mut hi) = (0i64, n as i64);
        let lower_incl = side != Side::Right;
        let upper_incl = side != Side::Left;
        let edges = [
            (self.lo, 1.0, lower_incl, self.right_angle && upper_incl),
            (self.hi, -1.0, upper_incl, self.right_angle && lower_incl),
        ];
        for (u, s, own, opposite) in edges {
            // s·(u0·(2ky − n) − u1·vx) ≥ 0
            if u[0].abs() < 1e-12 {
                if s * (-u[1] * vx as f64) <= 0.0 {
                    return (1, 0);
                }
                continue;
            }
            let t = (u[1] * vx as f64 / u[0] + n as f64) / 2.0;
            let m = t.round();
            let tie = (t - m).abs() <= TIE_F64 * t.abs().max(1.0) && m >= 0.0 && m <= n as f64;
            let incl = tie && {
                let vy = 2 * m as i64 - n as i64;
                if u[0] * vx as f64 + u[1] * vy as f64 > 0.0 {
                    own
                } else {
                    opposite
                }
            };
            if s * u[0] > 0.0 {
                let b = if tie {
                    m as i64 + (!incl) as i64
                } else {
                    t.ceil() as i64
                };
                lo = lo.max(b);
            } else {
                let b = if tie {
                    m as i64 - (!incl) as i64
                } else {
                    t.floor() as i64
                };
                hi = hi.min(b);
            }
        }
        (lo, hi)
    }
}

/// The wedge success set at angle `α`, closed at both edges.
pub fn wedge_success_set(geom: &WedgeGeometry, alpha: &RadAngle, ctx: PrecisionContext) -> SuccessSet2D {
    wedge_success_set_side(geom, &alpha.to_real(ctx), Side::Point, ctx)
}

/// One-sided limit of the wedge set: `Left` drops points on the upper edge,
/// `Right` those on the lower edge.
pub fn wedge_success_set_side(geom: &WedgeGeometry, alpha: &Real, side: Side, ctx: PrecisionContext) -> SuccessSet2D {
    let frame = Frame::from_real(geom, alpha, ctx);
    let n = geom.n as i64;
    SuccessSet2D::from_predicate(geom.n, |i, j| frame.member(2 * i as i64 - n, 2 * j as i64 - n, side))
}

/// Wedge error `1 − Pr(K)` at `α` (or its one-sided limit), exact
/// point-by-point membership.
pub fn wedge_error_at(geom: &WedgeGeometry, alpha: &Real, side: Side, ctx: PrecisionContext) -> Real {
    let frame = Frame::from_real(geom, alpha, ctx);
    let n = geom.n;
    let px = Bernoulli::from_cos(alpha).pmf(n);
    let py = Bernoulli::from_sin(alpha).pmf(n);
    let mut total = ctx.zero();
    for i in 0..=n {
        let vx = 2 * i as i64 - n as i64;
        let mut out = ctx.zero();
        for j in 0..=n {
            if !frame.member(vx, 2 * j as i64 - n as i64, side) {
                out += &py[j as usize];
            }
        }
        total += out * &px[i as usize];
    }
    total
}

/// `f64` wedge error by column intervals (half-width at most `π/2`).
pub fn wedge_error_at_f64(geom: &WedgeGeometry, alpha: f64, side: Side) -> f64 {
    let n = geom.n;
    let (px, qx) = fast::bernoulli_cos(alpha);
    let (py, qy) = fast::bernoulli_sin(alpha);
    let pmf_x = fast::pmf(n, px, qx);
    let pmf_y = fast::pmf(n, py, qy);
    let frame = Frame::from_f64(geom, alpha);
    column_error(&frame, n, &pmf_x, &pmf_y, &[side])[0]
}

fn column_error(frame: &Frame, n: u32, pmf_x: &[f64], pmf_y: &[f64], sides: &[Side]) -> Vec<f64> {
    let len = n as usize + 1;
    // below[i] = Σ_{k<i}, above[i] = Σ_{k>i}, both summed from the small end
    let mut below = vec![0.0; len + 1];
    for k in 0..len {
        below[k + 1] = below[k] + pmf_y[k];
    }
    let mut above = vec![0.0; len + 1];
    for k in (0..len).rev() {
        above[k] = above[k + 1] + if k + 1 < len { pmf_y[k + 1] } else { 0.0 };
    }
    sides
        .iter()
        .map(|&side| {
            let mut total = 0.0;
            for i in 0..=n {
                let vx = 2 * i as i64 - n as i64;
                let out = if vx == 0 {
                    (0..=n)
                        .filter(|&j| !frame.member(0, 2 * j as i64 - n as i64, side))
                        .map(|j| pmf_y[j as usize])
                        .sum()
                } else {
                    let (lo, hi) = frame.column(n, vx, side);
                    let (lo, hi) = (lo.max(0), hi.min(n as i64));
                    if lo > hi {
                        1.0
                    } else {
                        below[lo as usize] + above[hi as usize]
                    }
                };
                total += pmf_x[i as usize] * out;
            }
            total
        })
        .collect()
}

/// A critical angle of the wedge error in `[0, π/4]`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum WedgePoint {
    Zero,
    QuarterPi,
    /// `atan2(vy, vx) + sign·η`: the grid point `v` sits on an edge.
    Edge {
        vx: i32,
        vy: i32,
        sign: i8,
    },
}

impl WedgePoint {
    fn alpha_f64(self, eta: f64) -> f64 {
        match self {
            WedgePoint::Zero => 0.0,
            WedgePoint::QuarterPi => FRAC_PI_4,
            WedgePoint::Edge { vx, vy, sign } => (vy as f64).atan2(vx as f64) + sign as f64 * eta,
        }
    }

    fn alpha_real(self, eta: &RadAngle, ctx: PrecisionContext) -> Real {
        match self {
            WedgePoint::Zero => ctx.zero(),
            WedgePoint::QuarterPi => ctx.pi() / 4u32,
            WedgePoint::Edge { vx, vy, sign } => {
                let theta = ctx.from_int(vy as i64).atan2(&ctx.from_int(vx as i64));
                theta + eta.to_real(ctx) * sign as i32
            }
        }
    }
}

fn critical_points(geom: &WedgeGeometry) -> Vec<(f64, WedgePoint)> {
    let n = geom.n as i32;
    let eta = geom.eta.to_f64();
    let mut v = vec![(0.0, WedgePoint::Zero), (FRAC_PI_4, WedgePoint::QuarterPi)];
    for i in 0..=n {
        for j in 0..=n {
            let (vx, vy) = (2 * i - n, 2 * j - n);
            if vx == 0 && vy == 0 {
                continue;
            }
            for sign in [-1i8, 1] {
                let p = WedgePoint::Edge { vx, vy, sign };
                let a = p.alpha_f64(eta);
                if a > MERGE_F64 && a < FRAC_PI_4 - MERGE_F64 {
                    v.push((a, p));
                }
            }
        }
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v.dedup_by(|a, b| (a.0 - b.0).abs() <= MERGE_F64);
    v
}

/// Angles in `[0, 2π)` at which a grid point sits on a wedge edge.
pub fn wedge_critical_angles(geom: &WedgeGeometry) -> Vec<f64> {
    let n = geom.n as i32;
    let eta = geom.eta.to_f64();
    let mut v = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let (vx, vy) = (2 * i - n, 2 * j - n);
            if vx == 0 && vy == 0 {
                continue;
            }
            let theta = (vy as f64).atan2(vx as f64);
            v.extend([theta - eta, theta + eta].map(|a| a.rem_euclid(TAU)));
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= MERGE_F64);
    v
}

fn screen_all(geom: &WedgeGeometry) -> Vec<(WedgePoint, Side, f64)> {
    let n = geom.n;
    let mut out = Vec::new();
    for (alpha, point) in critical_points(geom) {
        let (px, qx) = fast::bernoulli_cos(alpha);
        let (py, qy) = fast::bernoulli_sin(alpha);
        let pmf_x = fast::pmf(n, px, qx);
        let pmf_y = fast::pmf(n, py, qy);
        let frame = Frame::from_f64(geom, alpha);
        let sides = [Side::Left, Side::Right];
        for (side, value) in sides.iter().zip(column_error(&frame, n, &pmf_x, &pmf_y, &sides)) {
            out.push((point, *side, value));
        }
    }
    out
}

fn exact_at(geom: &WedgeGeometry, point: WedgePoint, side: Side, ctx: PrecisionContext) -> SchemeResult {
    let alpha = point.alpha_real(&geom.eta, ctx);
    let worst_error = wedge_error_at(geom, &alpha, side, ctx);
    SchemeResult {
        n: geom.n,
        worst_error,
        witness: Witness::Angle(alpha),
        side,
        unverified_convexity: false,
    }
}

/// Maximum over all angles of the wedge error, from both one-sided limits at
/// every angle where an edge crosses a grid point. The eightfold symmetry of
/// the grid reduces the sweep to `[0, π/4]`.
pub fn wedge_worst_error(geom: &WedgeGeometry, ctx: PrecisionContext) -> SchemeResult {
    let all = screen_all(geom);
    let values: Vec<f64> = all.iter().map(|e| e.2).collect();
    let picked = refine_indices(&values)
        .into_iter()
        .map(|i| exact_at(geom, all[i].0, all[i].1, ctx));
    max_result(picked).expect("at least one candidate")
}

/// As [`wedge_worst_error`] with every candidate evaluated at full precision.
pub fn wedge_worst_error_exhaustive(geom: &WedgeGeometry, ctx: PrecisionContext) -> SchemeResult {
    let all = screen_all(geom);
    max_result(all.iter().map(|e| exact_at(geom, e.0, e.1, ctx))).expect("at least one candidate")
}

pub struct WedgeCurve {
    eta: RadAngle,
}

impl WedgeCurve {
    pub fn new(eta: RadAngle) -> Result<Self> {
        WedgeGeometry::new(1, eta.clone())?;
        Ok(WedgeCurve { eta })
    }

    fn geom(&self, n: u32) -> WedgeGeometry {
        WedgeGeometry {
            n,
            eta: self.eta.clone(),
        }
    }
}

impl WorstCase for WedgeCurve {
    fn scan_limit(&self, budget: f64) -> u32 {
        // the wedge contains both box sets for δ = sin(η)/√2
        let d = self.eta.to_f64().sin() / std::f64::consts::SQRT_2;
        let n = 2.0 * (4.0 / budget).ln() / (d * d);
        (n.max(1.0).ceil() as u32).saturating_add(2)
    }

    fn screen(&self, n: u32) -> f64 {
        screen_all(&self.geom(n)).iter().map(|e| e.2).fold(0.0, f64::max)
    }

    fn exact(&self, n: u32, ctx: PrecisionContext) -> SchemeResult {
        wedge_worst_error(&self.geom(n), ctx)
    }
}

/// Smallest `n` whose worst-case wedge error is at most `ε̄`.
pub fn wedge_min_n(eta: &RadAngle, eps: &Rational, ctx: PrecisionContext) -> Result<MinN> {
    Curve::new(WedgeCurve::new(eta.clone())?).min_n(eps, ctx)
}
