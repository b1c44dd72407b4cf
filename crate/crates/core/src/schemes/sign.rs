use rug::{Float, Rational};

use super::search::{Curve, MinN, WorstCase};
use super::{SchemeResult, Side, Witness};
use crate::error::{domain, Result};
use crate::numerics::prob::binom_tail_leq_with;
use crate::numerics::{fast, Bernoulli, PrecisionContext, RadAngle, Real};

fn check_angle(alpha: &RadAngle, allow_zero: bool) -> Result<()> {
    use std::cmp::Ordering::*;
    let lo = alpha.cmp_pi_frac(0, 1);
    let ok_lo = if allow_zero { lo != Less } else { lo == Greater };
    if !alpha.is_finite() || !ok_lo || alpha.cmp_pi_frac(1, 2) != Less {
        let range = if allow_zero { "[0, π/2)" } else { "(0, π/2)" };
        return domain(format!("angle {alpha} outside {range}"));
    }
    Ok(())
}

/// Probability that a majority vote over `n` (odd) measurements at angle `α`
/// from the reference picks the wrong half-plane.
pub fn sign_error(n: u32, alpha: &RadAngle, ctx: PrecisionContext) -> Result<Real> {
    if n % 2 == 0 {
        return domain(format!("sign scheme needs odd n, got {n}"));
    }
    check_angle(alpha, true)?;
    let b = Bernoulli::from_cos(&alpha.to_real(ctx));
    binom_tail_leq_with(n, (n - 1) / 2, &b)
}

pub fn sign_error_f64(n: u32, alpha: f64) -> f64 {
    let (p, q) = fast::bernoulli_cos(alpha);
    fast::tail_leq(n, (n - 1) / 2, p, q)
}

/// `ln(1/ε̄) / ln(1/sin α)`, the sample count sufficient by the Chernoff bound.
pub fn sign_bound_n(alpha: &RadAngle, eps: &Rational, ctx: PrecisionContext) -> Result<Real> {
    check_angle(alpha, false)?;
    if *eps <= 0 || *eps >= 1 {
        return domain("budget must lie in (0, 1)");
    }
    let num = Float::with_val(ctx.bits(), ctx.from_rational(eps).recip().ln_ref());
    let den = -alpha.to_real(ctx).sin().ln();
    Ok(num / den)
}

pub struct SignCurve {
    alpha: RadAngle,
    alpha_f64: f64,
}

impl SignCurve {
    pub fn new(alpha: &RadAngle) -> Result<Self> {
        check_angle(alpha, false)?;
        Ok(SignCurve {
            alpha: alpha.clone(),
            alpha_f64: alpha.to_f64(),
        })
    }
}

impl WorstCase for SignCurve {
    fn step(&self) -> u32 {
        2
    }

    fn scan_limit(&self, budget: f64) -> u32 {
        // sign_error(n) ≤ sinⁿ α
        let n = (budget.ln() / self.alpha_f64.sin().ln()).ceil();
        (n.max(1.0) as u32).saturating_add(3)
    }

    fn screen(&self, n: u32) -> f64 {
        sign_error_f64(n, self.alpha_f64)
    }

    fn exact(&self, n: u32, ctx: PrecisionContext) -> SchemeResult {
        let worst_error = sign_error(n, &self.alpha, ctx).expect("validated angle");
        SchemeResult {
            n,
            worst_error,
            witness: Witness::Angle(self.alpha.to_real(ctx)),
            side: Side::Point,
            unverified_convexity: false,
        }
    }
}

/// Smallest odd `n` with `sign_error(n, α) ≤ ε̄`.
pub fn sign_min_n(alpha: &RadAngle, eps: &Rational, ctx: PrecisionContext) -> Result<MinN> {
    Curve::new(SignCurve::new(alpha)?).min_n(eps, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ten_pow_neg;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn single_measurement_error() {
        let a = RadAngle::pi_frac(1, 5);
        let e = sign_error(1, &a, ctx()).unwrap();
        let expected = (1u32 - a.to_real(ctx()).cos()) / 2u32;
        assert!((e - expected).abs() < 1e-70);
        assert_eq!(sign_error(9, &RadAngle::zero(), ctx()).unwrap(), 0);
        assert!(sign_error(4, &a, ctx()).is_err());
        assert!(sign_error(3, &RadAngle::pi_frac(1, 2), ctx()).is_err());
    }

    #[test]
    fn seven_samples_at_quarter_pi() {
        let e = sign_error(7, &RadAngle::pi_frac(1, 4), ctx()).unwrap().to_f64();
        assert!((e - 0.0111027).abs() < 1e-6, "{e}");
        assert!((sign_error_f64(7, std::f64::consts::FRAC_PI_4) - e).abs() < 1e-15);
    }

    #[test]
    fn minimal_counts() {
        let cases = [((7, 16), 1, 43), ((2, 16), 6, 13), ((1, 16), 3, 3)];
        for ((a, b), t, n) in cases {
            let r = sign_min_n(&RadAngle::pi_frac(a, b), &ten_pow_neg(t), ctx()).unwrap();
            assert_eq!(r.n, n, "{a}/{b}π, 1e-{t}");
            assert!(r.decision.holds);
        }
        let r = sign_min_n(&RadAngle::pi_frac(1, 4), &Rational::from((1, 20)), ctx()).unwrap();
        assert_eq!(r.n, 5);
        assert!(sign_min_n(&RadAngle::pi_frac(1, 2), &Rational::from((1, 20)), ctx()).is_err());
    }

    #[test]
    fn borderline_cells() {
        let e = sign_error(11, &RadAngle::pi_frac(1, 8), ctx()).unwrap();
        assert!(e > ten_pow_neg(6));
        assert!((e.to_f64() - 1.1895e-6).abs() < 1e-9);
        let e = sign_error(3, &RadAngle::pi_frac(1, 64), ctx()).unwrap();
        assert!(e > ten_pow_neg(6));
        assert!((e.to_f64() - 1.0875e-6).abs() < 1e-9);
    }

    #[test]
    fn chernoff_count_at_quarter_pi() {
        let b = sign_bound_n(&RadAngle::pi_frac(1, 4), &Rational::from((1, 100)), ctx()).unwrap();
        assert!((b.to_f64() - 2.0 * 100f64.log2()).abs() < 1e-12);
        assert!((b.to_f64() - 13.2877).abs() < 1e-4);
    }
}
