//! Arbitrary-precision kernel.
//!
//! Every quantity that feeds a published comparison is computed as a [`Real`]
//! (an MPFR float) at the precision of an explicit [`PrecisionContext`]. The
//! [`fast`] submodule mirrors the hot loops in `f64` for screening only.

pub mod angle;
pub mod binomial;
pub mod bounds;
pub mod fast;
pub mod guard;
pub mod prob;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};

pub use angle::{RadAngle, Turn};
pub use binomial::{binomial_coeff, binomial_row};
pub use bounds::{chernoff_sample_bound, chernoff_tail_bound, rel_entropy, SampleBound};
pub use guard::{compare_le, Comparison};
pub use prob::{
    binom_tail_leq, p_from_angle, success_prob_1d, success_prob_2d, Bernoulli, Component, SuccessSet1D, SuccessSet2D,
};

/// Arbitrary-precision real number.
pub type Real = Float;

/// Significand precision shared by every [`Real`] created for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    bits: u32,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext {
            bits: Self::DEFAULT_BITS,
        }
    }
}

impl PrecisionContext {
    pub const DEFAULT_BITS: u32 = 256;
    pub const MIN_BITS: u32 = 64;
    /// Upper limit for automatic escalation by the comparison guard.
    pub const MAX_BITS: u32 = 4096;

    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::Invalid(format!(
                "precision must be at least {} bits, got {bits}",
                Self::MIN_BITS
            )));
        }
        Ok(PrecisionContext { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn doubled(self) -> Self {
        PrecisionContext {
            bits: self.bits.saturating_mul(2),
        }
    }

    pub fn zero(self) -> Real {
        Float::new(self.bits)
    }

    pub fn one(self) -> Real {
        Float::with_val(self.bits, 1)
    }

    pub fn from_f64(self, x: f64) -> Real {
        Float::with_val(self.bits, x)
    }

    pub fn from_int(self, x: i64) -> Real {
        Float::with_val(self.bits, x)
    }

    pub fn from_rational(self, x: &Rational) -> Real {
        Float::with_val(self.bits, x)
    }

    /// `num / den`, correctly rounded.
    pub fn ratio(self, num: i64, den: i64) -> Real {
        Float::with_val(self.bits, Rational::from((num, den)))
    }

    pub fn pi(self) -> Real {
        Float::with_val(self.bits, Constant::Pi)
    }

    /// Relative tolerance `2^-(bits/2)` below which two values count as
    /// indistinguishable at this precision.
    pub fn tolerance(self) -> Real {
        let exp = -((self.bits / 2) as i32);
        Float::with_val(self.bits, Float::i_exp(1, exp))
    }
}

/// Parses a decimal (`0.025`, `1e-6`) or fraction (`1/60`) into an exact
/// rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Invalid(format!("cannot parse `{s}` as a number"));
    if t.contains('/') {
        return t.parse::<Rational>().map_err(|_| bad());
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let num: rug::Integer = all.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = rug::Integer::from(10);
    let mut r = Rational::from(num);
    if scale >= 0 {
        r *= Rational::from(ten.pow(scale as u32));
    } else {
        r /= Rational::from(ten.pow((-scale) as u32));
    }
    if neg {
        r = -r;
    }
    Ok(r)
}

/// `10^-t` as an exact rational.
pub fn ten_pow_neg(t: u32) -> Rational {
    Rational::from((1, rug::Integer::from(10).pow(t)))
}
