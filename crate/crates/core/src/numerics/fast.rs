//! `f64` mirrors of the binomial kernels, used to screen candidate points
//! before the authoritative arbitrary-precision evaluation.

use statrs::function::factorial::ln_factorial;

pub fn ln_choose(n: u32, k: u32) -> f64 {
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// Binomial pmf for `(p, q)` with `p + q = 1` supplied separately.
/// Built outward from the mode by the ratio recurrence.
pub fn pmf(n: u32, p: f64, q: f64) -> Vec<f64> {
    let len = n as usize + 1;
    let mut out = vec![0.0; len];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if q <= 0.0 {
        out[n as usize] = 1.0;
        return out;
    }
    let mode = (((n as f64 + 1.0) * p).floor() as usize).min(n as usize);
    let lm = ln_choose(n, mode as u32) + mode as f64 * p.ln() + (n as usize - mode) as f64 * q.ln();
    out[mode] = lm.exp();
    let up = p / q;
    for k in mode..n as usize {
        out[k + 1] = out[k] * ((n as usize - k) as f64 / (k + 1) as f64) * up;
    }
    let down = q / p;
    for k in (1..=mode).rev() {
        out[k - 1] = out[k] * (k as f64 / (n as usize - k + 1) as f64) * down;
    }
    out
}

/// `p = cos²(α/2)`, `q = sin²(α/2)`.
pub fn bernoulli_cos(alpha: f64) -> (f64, f64) {
    let (s, c) = (alpha / 2.0).sin_cos();
    (c * c, s * s)
}

/// `p = cos²(π/4 − α/2)`, `q = sin²(π/4 − α/2)`.
pub fn bernoulli_sin(alpha: f64) -> (f64, f64) {
    let (s, c) = (std::f64::consts::FRAC_PI_4 - alpha / 2.0).sin_cos();
    (c * c, s * s)
}

/// Mass outside `[lo, hi]`; 1 when the interval is empty.
pub fn outside_mass(pmf: &[f64], lo: i64, hi: i64) -> f64 {
    let n = pmf.len() as i64 - 1;
    let (lo, hi) = (lo.max(0), hi.min(n));
    if lo > hi {
        return 1.0;
    }
    let below: f64 = pmf[..lo as usize].iter().sum();
    let above: f64 = pmf[hi as usize + 1..].iter().sum();
    below + above
}

/// `Pr(X ≤ k)`.
pub fn tail_leq(n: u32, k: u32, p: f64, q: f64) -> f64 {
    pmf(n, p, q)[..=k as usize].iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Bernoulli, PrecisionContext};

    #[test]
    fn pmf_agrees_with_exact_kernel() {
        let ctx = PrecisionContext::default();
        for (n, num, den) in [
            (1u32, 1i64, 3i64),
            (17, 2, 7),
            (400, 99, 100),
            (1043, 1, 2),
            (60, 1, 1000),
        ] {
            let p = num as f64 / den as f64;
            let fast = pmf(n, p, 1.0 - p);
            let exact = Bernoulli::from_p(&ctx.ratio(num, den)).pmf(n);
            for (f, e) in fast.iter().zip(&exact) {
                let e = e.to_f64();
                if e > 1e-250 {
                    assert!(((f - e) / e).abs() < 1e-10, "n={n} {f} {e}");
                }
            }
        }
    }

    #[test]
    fn degenerate_probabilities() {
        assert_eq!(pmf(4, 0.0, 1.0), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(pmf(4, 1.0, 0.0), vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(outside_mass(&pmf(4, 0.5, 0.5), 3, 2), 1.0);
        assert!((tail_leq(3, 1, 0.5, 0.5) - 0.5).abs() < 1e-15);
    }
}
