use rug::ops::Pow;
use rug::Float;

use super::Real;
use crate::error::{domain, Result};

/// `D(a ‖ p) = a ln(a/p) + (1−a) ln((1−a)/(1−p))`, natural log.
pub fn rel_entropy(a: &Real, p: &Real) -> Result<Real> {
    for (name, v) in [("a", a), ("p", p)] {
        if !(*v > 0u32 && *v < 1u32) {
            return domain(format!("{name} = {} must lie in (0, 1)", v.to_f64()));
        }
    }
    let prec = a.prec().max(p.prec());
    let a1 = Float::with_val(prec, 1 - a);
    let p1 = Float::with_val(prec, 1 - p);
    let t1 = Float::with_val(prec, a / p).ln() * a;
    let t2 = Float::with_val(prec, &a1 / &p1).ln() * &a1;
    Ok(t1 + t2)
}

/// A sample count together with a flag for the case where the formula is
/// non-positive (any count works, 0 is reported).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleBound {
    pub n: u64,
    pub degenerate: bool,
}

/// `⌈(2/δ²) ln(2/ε̄)⌉`.
pub fn chernoff_sample_bound(delta: &Real, eps: &Real) -> Result<SampleBound> {
    if *delta <= 0u32 || delta.is_nan() {
        return domain("delta must be positive");
    }
    if *eps <= 0u32 || eps.is_nan() {
        return domain("epsilon must be positive");
    }
    let prec = delta.prec().max(eps.prec());
    let log = Float::with_val(prec, 2u32 / eps).ln();
    let v = log * 2u32 / Float::with_val(prec, delta.square_ref());
    if v <= 0u32 {
        return Ok(SampleBound { n: 0, degenerate: true });
    }
    let n = v.ceil().to_integer().and_then(|i| i.to_u64());
    match n {
        Some(n) => Ok(SampleBound { n, degenerate: false }),
        None => domain("sample bound overflows u64"),
    }
}

/// `exp(−n D(k/n ‖ p))`, the Chernoff upper bound on `Pr(X ≤ k)`.
pub fn chernoff_tail_bound(n: u32, k: u32, p: &Real) -> Result<Real> {
    let prec = p.prec();
    let np = Float::with_val(prec, p * n);
    if np <= k || n == 0 {
        return domain(format!("k = {k} must be below n·p = {}", np.to_f64()));
    }
    if *p >= 1u32 {
        return domain("p must be below 1");
    }
    if k == 0 {
        // D(0 ‖ p) = −ln(1−p)
        let q = Float::with_val(prec, 1 - p);
        return Ok(q.pow(n));
    }
    let a = Float::with_val(prec, k) / n;
    let d = rel_entropy(&a, p)?;
    Ok((-(d * n)).exp())
}
