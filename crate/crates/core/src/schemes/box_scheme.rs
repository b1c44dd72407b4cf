use std::f64::consts::FRAC_PI_4;
use std::fmt;

use rug::float::Constant;
use rug::{Float, Rational};

use super::search::{Curve, MinN, WorstCase};
use super::{max_result, refine_indices, SchemeResult, Side, Witness};
use crate::error::{domain, Result};
use crate::numerics::{fast, Bernoulli, PrecisionContext, RadAngle, Real, SuccessSet1D};

/// Box half-width parameter: either an exact number or `sin(η)/√2`.
#[derive(Clone, Debug, PartialEq)]
pub enum Delta {
    Value(Rational),
    OfEta(RadAngle),
}

impl Delta {
    pub fn to_real(&self, ctx: PrecisionContext) -> Real {
        match self {
            Delta::Value(r) => ctx.from_rational(r),
            Delta::OfEta(eta) => eta.to_real(ctx).sin() / Float::with_val(ctx.bits(), 2).sqrt(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Delta::Value(r) => r.to_f64(),
            Delta::OfEta(eta) => eta.to_f64().sin() / std::f64::consts::SQRT_2,
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Value(r) => write!(f, "{r}"),
            Delta::OfEta(eta) => write!(f, "sin({eta})/sqrt2"),
        }
    }
}

/// `δ(η) = sin(η)/√2` for `η ∈ [0, π/2]`.
pub fn delta_of_eta(eta: &RadAngle, ctx: PrecisionContext) -> Result<Real> {
    use std::cmp::Ordering::*;
    if eta.cmp_pi_frac(0, 1) == Less || eta.cmp_pi_frac(1, 2) == Greater {
        return domain(format!("eta = {eta} outside [0, π/2]"));
    }
    Ok(Delta::OfEta(eta.clone()).to_real(ctx))
}

const SNAP_F64: f64 = 1e-9;
const MERGE_F64: f64 = 1e-12;

/// A probability at which the box success set may change.
#[derive(Clone, Copy, Debug, PartialEq)]
enum BoxPoint {
    Zero,
    One,
    /// `k/n + δ/2`, where the lower limit crosses `k`.
    Plus(u32),
    /// `k/n − δ/2`, where the upper limit crosses `k`.
    Minus(u32),
    Grid(f64),
}

impl BoxPoint {
    fn pq_f64(self, n: u32, d: f64) -> (f64, f64) {
        let nf = n as f64;
        let (p, q) = match self {
            BoxPoint::Zero => (0.0, 1.0),
            BoxPoint::One => (1.0, 0.0),
            BoxPoint::Plus(k) => (k as f64 / nf + d / 2.0, (n - k) as f64 / nf - d / 2.0),
            BoxPoint::Minus(k) => (k as f64 / nf - d / 2.0, (n - k) as f64 / nf + d / 2.0),
            BoxPoint::Grid(p) => (p, 1.0 - p),
        };
        (p.clamp(0.0, 1.0), q.clamp(0.0, 1.0))
    }

    fn pq_real(self, n: u32, d: &Real, ctx: PrecisionContext) -> (Real, Real) {
        let half = Float::with_val(ctx.bits(), d / 2u32);
        let frac = |k: u32| ctx.ratio(k as i64, n as i64);
        let (p, q) = match self {
            BoxPoint::Zero => (ctx.zero(), ctx.one()),
            BoxPoint::One => (ctx.one(), ctx.zero()),
            BoxPoint::Plus(k) => (frac(k) + &half, frac(n - k) - &half),
            BoxPoint::Minus(k) => (frac(k) - &half, frac(n - k) + &half),
            BoxPoint::Grid(p) => (ctx.from_f64(p), 1u32 - ctx.from_f64(p)),
        };
        let clamp = |x: Real| {
            if x < 0u32 {
                ctx.zero()
            } else if x > 1u32 {
                ctx.one()
            } else {
                x
            }
        };
        (clamp(p), clamp(q))
    }

    fn sides(self) -> &'static [Side] {
        match self {
            BoxPoint::Zero => &[Side::Right],
            BoxPoint::One => &[Side::Left],
            BoxPoint::Grid(_) => &[Side::Point],
            _ => &[Side::Left, Side::Right],
        }
    }
}

fn snap_f64(x: f64) -> Option<i64> {
    let m = x.round();
    ((x - m).abs() <= SNAP_F64 * x.abs().max(1.0)).then_some(m as i64)
}

fn snap_real(x: &Real, ctx: PrecisionContext) -> Option<i64> {
    let m = Float::with_val(ctx.bits(), x.round_ref());
    let diff = Float::with_val(ctx.bits(), x - &m).abs();
    let scale = Float::with_val(ctx.bits(), x.abs_ref()).max(&ctx.one());
    if diff <= ctx.tolerance() * scale {
        m.to_integer().and_then(|i| i.to_i64())
    } else {
        None
    }
}

fn lower_limit(snapped: Option<i64>, ceil: i64, side: Side) -> i64 {
    match snapped {
        Some(m) if side == Side::Right => m + 1,
        Some(m) => m,
        None => ceil,
    }
}

fn upper_limit(snapped: Option<i64>, floor: i64, side: Side) -> i64 {
    match snapped {
        Some(m) if side == Side::Left => m - 1,
        Some(m) => m,
        None => floor,
    }
}

/// Index limits `[lo, hi]` of the box set at `p` (or its one-sided limit).
fn limits_f64(n: u32, d: f64, p: f64, side: Side) -> (i64, i64) {
    let nf = n as f64;
    let x = (p - d / 2.0) * nf;
    let y = (p + d / 2.0) * nf;
    let lo = lower_limit(snap_f64(x), x.ceil() as i64, side);
    let hi = upper_limit(snap_f64(y), y.floor() as i64, side);
    (lo, hi)
}

fn limits_real(n: u32, d: &Real, p: &Real, side: Side, ctx: PrecisionContext) -> (i64, i64) {
    let half = Float::with_val(ctx.bits(), d / 2u32);
    let x = Float::with_val(ctx.bits(), p - &half) * n;
    let y = Float::with_val(ctx.bits(), p + &half) * n;
    let to_i = |v: Float| v.to_integer().and_then(|i| i.to_i64()).expect("finite limit");
    let lo = lower_limit(snap_real(&x, ctx), to_i(x.ceil()), side);
    let hi = upper_limit(snap_real(&y, ctx), to_i(y.floor()), side);
    (lo, hi)
}

/// `{k ∈ [0,n] : (p − δ/2)n ≤ k ≤ (p + δ/2)n}` (closed bounds).
pub fn box_success_set(n: u32, delta: &Real, p: &Real) -> SuccessSet1D {
    box_success_set_side(n, delta, p, Side::Point)
}

/// One-sided limit of the box set as `p` is approached from the given side.
pub fn box_success_set_side(n: u32, delta: &Real, p: &Real, side: Side) -> SuccessSet1D {
    let ctx = PrecisionContext::new(p.prec().max(delta.prec())).expect("valid precision");
    let (lo, hi) = limits_real(n, delta, p, side, ctx);
    SuccessSet1D::interval(n, lo, hi)
}

/// All distinct values `k/n ± δ/2` inside `[0, 1]`, sorted.
pub fn box_breakpoints(n: u32, delta: &Real) -> Vec<Real> {
    let ctx = PrecisionContext::new(delta.prec()).expect("valid precision");
    let tol = ctx.tolerance();
    let mut v: Vec<Real> = (0..=n)
        .flat_map(|k| [BoxPoint::Plus(k), BoxPoint::Minus(k)])
        .filter_map(|bp| {
            let half = Float::with_val(ctx.bits(), delta / 2u32);
            let f = ctx.ratio(k_of(bp) as i64, n.max(1) as i64);
            let x = match bp {
                BoxPoint::Plus(_) => f + half,
                _ => f - half,
            };
            let inside =
                Float::with_val(ctx.bits(), &x + &tol) >= 0u32 && Float::with_val(ctx.bits(), &x - &tol) <= 1u32;
            inside.then(|| {
                if x < 0u32 {
                    ctx.zero()
                } else if x > 1u32 {
                    ctx.one()
                } else {
                    x
                }
            })
        })
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.dedup_by(|a, b| Float::with_val(ctx.bits(), &*a - &*b).abs() <= tol);
    v
}

fn k_of(bp: BoxPoint) -> u32 {
    match bp {
        BoxPoint::Plus(k) | BoxPoint::Minus(k) => k,
        _ => 0,
    }
}

/// True when `n ≥ max(1 + 1/δ², 3)`, where the error is convex between
/// breakpoints and the breakpoint search is exact.
pub fn convexity_covered(n: u32, delta: &Delta) -> bool {
    let ctx = PrecisionContext::new(128).expect("valid precision");
    let d = delta.to_real(ctx);
    if n < 3 || d <= 0u32 {
        return n >= 3 && d > 0u32;
    }
    let threshold = 1u32 + Float::with_val(128, d.square_ref()).recip();
    let slack = ctx.tolerance() * &threshold;
    Float::with_val(128, n) >= threshold - slack
}

fn breakpoint_list(n: u32, d: f64) -> Vec<(f64, BoxPoint)> {
    let mut v = vec![(0.0, BoxPoint::Zero), (1.0, BoxPoint::One)];
    for k in 0..=n {
        for bp in [BoxPoint::Plus(k), BoxPoint::Minus(k)] {
            let (p, _) = bp.pq_f64(n, d);
            let raw = match bp {
                BoxPoint::Plus(k) => k as f64 / n as f64 + d / 2.0,
                _ => k as f64 / n as f64 - d / 2.0,
            };
            if raw > MERGE_F64 && raw < 1.0 - MERGE_F64 {
                v.push((p, bp));
            }
        }
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v.dedup_by(|a, b| (a.0 - b.0).abs() <= MERGE_F64);
    v
}

struct Evaluated {
    point: BoxPoint,
    side: Side,
    value: f64,
}

fn screen_all(n: u32, delta: &Delta) -> Vec<Evaluated> {
    let d = delta.to_f64();
    let bps = breakpoint_list(n, d);
    let mut points: Vec<BoxPoint> = bps.iter().map(|(_, bp)| *bp).collect();
    if !convexity_covered(n, delta) {
        let steps = 4 * n.max(1);
        for w in bps.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            for i in 1..steps {
                points.push(BoxPoint::Grid(a + (b - a) * i as f64 / steps as f64));
            }
        }
    }
    let mut out = Vec::with_capacity(points.len() * 2);
    for point in points {
        let (p, q) = point.pq_f64(n, d);
        let pmf = fast::pmf(n, p, q);
        for &side in point.sides() {
            let (lo, hi) = limits_f64(n, d, p, side);
            out.push(Evaluated {
                point,
                side,
                value: fast::outside_mass(&pmf, lo, hi),
            });
        }
    }
    out
}

fn exact_at(n: u32, d: &Real, point: BoxPoint, side: Side, ctx: PrecisionContext) -> SchemeResult {
    let (p, q) = point.pq_real(n, d, ctx);
    let (lo, hi) = limits_real(n, d, &p, side, ctx);
    let worst_error = Bernoulli { p: p.clone(), q }.outside_mass(n, lo, hi);
    SchemeResult {
        n,
        worst_error,
        witness: Witness::Probability(p),
        side,
        unverified_convexity: false,
    }
}

/// Error `1 − Pr(K)` of the box scheme at probability `p` (or its one-sided
/// limit).
pub fn box_error_at(n: u32, delta: &Delta, p: &Real, side: Side, ctx: PrecisionContext) -> Real {
    let d = delta.to_real(ctx);
    let (lo, hi) = limits_real(n, &d, p, side, ctx);
    Bernoulli::from_p(p).outside_mass(n, lo, hi)
}

/// `f64` counterpart of [`box_error_at`], used for curves.
pub fn box_error_at_f64(n: u32, d: f64, p: f64, side: Side) -> f64 {
    let (lo, hi) = limits_f64(n, d, p, side);
    fast::outside_mass(&fast::pmf(n, p, 1.0 - p), lo, hi)
}

/// Maximum over `p ∈ [0,1]` of the box error, from both one-sided limits at
/// every breakpoint. Candidates are screened in `f64` and the near-maximal
/// ones re-evaluated at context precision.
pub fn box_worst_error(n: u32, delta: &Delta, ctx: PrecisionContext) -> SchemeResult {
    let all = screen_all(n, delta);
    let values: Vec<f64> = all.iter().map(|e| e.value).collect();
    let d = delta.to_real(ctx);
    let picked = refine_indices(&values)
        .into_iter()
        .map(|i| exact_at(n, &d, all[i].point, all[i].side, ctx));
    finish(max_result(picked).expect("at least one candidate"), n, delta)
}

/// As [`box_worst_error`], evaluating every candidate at full precision.
pub fn box_worst_error_exhaustive(n: u32, delta: &Delta, ctx: PrecisionContext) -> SchemeResult {
    let d = delta.to_real(ctx);
    let all = screen_all(n, delta);
    let picked = all.iter().map(|e| exact_at(n, &d, e.point, e.side, ctx));
    finish(max_result(picked).expect("at least one candidate"), n, delta)
}

fn finish(mut r: SchemeResult, n: u32, delta: &Delta) -> SchemeResult {
    r.unverified_convexity = !convexity_covered(n, delta);
    r
}

pub struct BoxCurve {
    delta: Delta,
}

impl BoxCurve {
    pub fn new(delta: Delta) -> Result<Self> {
        if delta.to_f64().is_nan() || delta.to_f64() <= 0.0 {
            return domain("delta must be positive");
        }
        Ok(BoxCurve { delta })
    }

    pub fn delta(&self) -> &Delta {
        &self.delta
    }
}

fn hoeffding_limit(d: f64, budget: f64, components: f64) -> u32 {
    // each component fails with probability ≤ 2 exp(−n δ²/2)
    let n = 2.0 * (2.0 * components / budget).ln() / (d * d);
    (n.max(1.0).ceil() as u32).saturating_add(2)
}

impl WorstCase for BoxCurve {
    fn scan_limit(&self, budget: f64) -> u32 {
        hoeffding_limit(self.delta.to_f64(), budget, 1.0)
    }

    fn screen(&self, n: u32) -> f64 {
        screen_all(n, &self.delta).iter().map(|e| e.value).fold(0.0, f64::max)
    }

    fn exact(&self, n: u32, ctx: PrecisionContext) -> SchemeResult {
        box_worst_error(n, &self.delta, ctx)
    }
}

/// Smallest `n` whose worst-case box error is at most `ε̄`.
pub fn box_min_n(delta: &Delta, eps: &Rational, ctx: PrecisionContext) -> Result<MinN> {
    Curve::new(BoxCurve::new(delta.clone())?).min_n(eps, ctx)
}

// ---------------------------------------------------------------------------
// Joint evaluation of both components.

/// A critical angle of the joint box error in `[0, π/4]`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum JointPoint {
    Zero,
    QuarterPi,
    Cos(BoxPoint),
    Sin(BoxPoint),
}

/// `2·acos(√p)`, evaluated through whichever of `p`, `q` is smaller.
fn double_acos_sqrt_f64(p: f64, q: f64) -> f64 {
    if p > 0.5 {
        2.0 * q.sqrt().asin()
    } else {
        2.0 * p.sqrt().acos()
    }
}

fn double_acos_sqrt_real(p: &Real, q: &Real) -> Real {
    if *p > 0.5f64 {
        Float::with_val(p.prec(), q.sqrt_ref()).asin() * 2u32
    } else {
        Float::with_val(p.prec(), p.sqrt_ref()).acos() * 2u32
    }
}

impl JointPoint {
    fn alpha_f64(self, n: u32, d: f64) -> f64 {
        match self {
            JointPoint::Zero => 0.0,
            JointPoint::QuarterPi => FRAC_PI_4,
            JointPoint::Cos(bp) => {
                let (p, q) = bp.pq_f64(n, d);
                double_acos_sqrt_f64(p, q)
            }
            JointPoint::Sin(bp) => {
                let (p, q) = bp.pq_f64(n, d);
                std::f64::consts::FRAC_PI_2 - double_acos_sqrt_f64(p, q)
            }
        }
    }

    fn alpha_real(self, n: u32, d: &Real, ctx: PrecisionContext) -> Real {
        match self {
            JointPoint::Zero => ctx.zero(),
            JointPoint::QuarterPi => ctx.pi() / 4u32,
            JointPoint::Cos(bp) => {
                let (p, q) = bp.pq_real(n, d, ctx);
                double_acos_sqrt_real(&p, &q)
            }
            JointPoint::Sin(bp) => {
                let (p, q) = bp.pq_real(n, d, ctx);
                Float::with_val(ctx.bits(), Constant::Pi) / 2u32 - double_acos_sqrt_real(&p, &q)
            }
        }
    }
}

/// `p_x` decreases with the angle, so an angle limit from below is a
/// probability limit from above; at `α = 0` both limits approach `p_x = 1`
/// from below.
fn cos_side(at_zero: bool, side: Side) -> Side {
    match side {
        _ if at_zero && side != Side::Point => Side::Left,
        Side::Left => Side::Right,
        Side::Right => Side::Left,
        Side::Point => Side::Point,
    }
}

fn joint_points(n: u32, d: f64) -> Vec<(f64, JointPoint)> {
    let mut v = vec![(0.0, JointPoint::Zero), (FRAC_PI_4, JointPoint::QuarterPi)];
    for (_, bp) in breakpoint_list(n, d) {
        if matches!(bp, BoxPoint::Zero | BoxPoint::One) {
            continue;
        }
        for jp in [JointPoint::Cos(bp), JointPoint::Sin(bp)] {
            let a = jp.alpha_f64(n, d);
            if a > MERGE_F64 && a < FRAC_PI_4 - MERGE_F64 {
                v.push((a, jp));
            }
        }
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v.dedup_by(|a, b| (a.0 - b.0).abs() <= MERGE_F64);
    v
}

fn joint_failure(fx: &Real, fy: &Real) -> Real {
    let prec = fx.prec();
    let prod = Float::with_val(prec, fx * fy);
    Float::with_val(prec, fx + fy) - prod
}

/// Joint error `1 − Pr(K_x × K_y)` at angle `α` (or its one-sided limit).
pub fn box_joint_error_at(n: u32, delta: &Delta, alpha: &Real, side: Side, ctx: PrecisionContext) -> Real {
    let d = delta.to_real(ctx);
    let at_zero = Float::with_val(ctx.bits(), alpha.abs_ref()) <= ctx.tolerance();
    let bx = Bernoulli::from_cos(alpha);
    let by = Bernoulli::from_sin(alpha);
    let (xlo, xhi) = limits_real(n, &d, &bx.p, cos_side(at_zero, side), ctx);
    let (ylo, yhi) = limits_real(n, &d, &by.p, side, ctx);
    joint_failure(&bx.outside_mass(n, xlo, xhi), &by.outside_mass(n, ylo, yhi))
}

pub fn box_joint_error_at_f64(n: u32, d: f64, alpha: f64, side: Side) -> f64 {
    let at_zero = alpha.abs() <= MERGE_F64;
    let (px, qx) = fast::bernoulli_cos(alpha);
    let (py, qy) = fast::bernoulli_sin(alpha);
    let (xlo, xhi) = limits_f64(n, d, px, cos_side(at_zero, side));
    let (ylo, yhi) = limits_f64(n, d, py, side);
    let fx = fast::outside_mass(&fast::pmf(n, px, qx), xlo, xhi);
    let fy = fast::outside_mass(&fast::pmf(n, py, qy), ylo, yhi);
    fx + fy - fx * fy
}

fn joint_screen_all(n: u32, d: f64) -> Vec<(JointPoint, Side, f64)> {
    let mut out = Vec::new();
    for (alpha, jp) in joint_points(n, d) {
        let at_zero = jp == JointPoint::Zero;
        let (px, qx) = fast::bernoulli_cos(alpha);
        let (py, qy) = fast::bernoulli_sin(alpha);
        let pmf_x = fast::pmf(n, px, qx);
        let pmf_y = fast::pmf(n, py, qy);
        for side in [Side::Left, Side::Right] {
            let (xlo, xhi) = limits_f64(n, d, px, cos_side(at_zero, side));
            let (ylo, yhi) = limits_f64(n, d, py, side);
            let fx = fast::outside_mass(&pmf_x, xlo, xhi);
            let fy = fast::outside_mass(&pmf_y, ylo, yhi);
            out.push((jp, side, fx + fy - fx * fy));
        }
    }
    out
}

/// Maximum over all angles of the joint sine/cosine box error. By the
/// dihedral symmetry of the two components the sweep covers `[0, π/4]`.
pub fn box_joint_worst_error(n: u32, delta: &Delta, ctx: PrecisionContext) -> SchemeResult {
    let d = delta.to_f64();
    let all = joint_screen_all(n, d);
    let values: Vec<f64> = all.iter().map(|e| e.2).collect();
    let dr = delta.to_real(ctx);
    let picked = refine_indices(&values).into_iter().map(|i| {
        let (jp, side, _) = all[i];
        let alpha = jp.alpha_real(n, &dr, ctx);
        let worst_error = box_joint_error_at(n, delta, &alpha, side, ctx);
        SchemeResult {
            n,
            worst_error,
            witness: Witness::Angle(alpha),
            side,
            unverified_convexity: false,
        }
    });
    max_result(picked).expect("at least one candidate")
}

pub struct BoxJointCurve {
    delta: Delta,
}

impl BoxJointCurve {
    pub fn new(delta: Delta) -> Result<Self> {
        if delta.to_f64().is_nan() || delta.to_f64() <= 0.0 {
            return domain("delta must be positive");
        }
        Ok(BoxJointCurve { delta })
    }
}

impl WorstCase for BoxJointCurve {
    fn scan_limit(&self, budget: f64) -> u32 {
        hoeffding_limit(self.delta.to_f64(), budget, 2.0)
    }

    fn screen(&self, n: u32) -> f64 {
        joint_screen_all(n, self.delta.to_f64())
            .iter()
            .map(|e| e.2)
            .fold(0.0, f64::max)
    }

    fn exact(&self, n: u32, ctx: PrecisionContext) -> SchemeResult {
        box_joint_worst_error(n, &self.delta, ctx)
    }
}
