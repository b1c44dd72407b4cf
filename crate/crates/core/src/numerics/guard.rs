use rug::Float;

use super::{PrecisionContext, Real};

/// Outcome of a guarded `lhs ≤ rhs` decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub holds: bool,
    /// `(rhs − lhs) / max(|lhs|, |rhs|)`; positive when the inequality holds.
    pub margin: f64,
    /// Precision at which the decision was taken.
    pub bits: u32,
    /// True when the two sides stayed indistinguishable up to the maximum
    /// precision; the decision then treats them as equal.
    pub tie: bool,
}

/// Decides `lhs ≤ rhs` where `eval` computes both sides at a given precision.
///
/// When the sides agree to within `2^-(bits/2)` relative, both are recomputed
/// at doubled precision, up to [`PrecisionContext::MAX_BITS`].
pub fn compare_le<F>(ctx: PrecisionContext, mut eval: F) -> Comparison
where
    F: FnMut(PrecisionContext) -> (Real, Real),
{
    let mut ctx = ctx;
    loop {
        let (lhs, rhs) = eval(ctx);
        let prec = lhs.prec().max(rhs.prec());
        let diff = Float::with_val(prec, &rhs - &lhs);
        let scale = Float::with_val(prec, lhs.abs_ref()).max(&Float::with_val(prec, rhs.abs_ref()));
        if scale.is_zero() {
            return Comparison {
                holds: true,
                margin: 0.0,
                bits: ctx.bits(),
                tie: true,
            };
        }
        let rel = diff / &scale;
        if Float::with_val(prec, rel.abs_ref()) >= ctx.tolerance() {
            return Comparison {
                holds: rel > 0u32,
                margin: rel.to_f64(),
                bits: ctx.bits(),
                tie: false,
            };
        }
        if ctx.bits() * 2 > PrecisionContext::MAX_BITS {
            return Comparison {
                holds: true,
                margin: rel.to_f64(),
                bits: ctx.bits(),
                tie: true,
            };
        }
        ctx = ctx.doubled();
    }
}
