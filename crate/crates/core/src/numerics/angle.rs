use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use rug::{Float, Rational};

use super::{PrecisionContext, Real};
use crate::error::{Error, Result};

/// An angle in radians.
///
/// Angles that are rational multiples of pi are kept exact so that they can
/// be re-evaluated at any precision; anything else is stored as the exact
/// binary value of an `f64`.
#[derive(Clone, Debug, PartialEq)]
pub enum RadAngle {
    PiMultiple(Rational),
    Radians(f64),
}

impl RadAngle {
    /// `num/den · π`.
    pub fn pi_frac(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        RadAngle::PiMultiple(Rational::from((num, den)))
    }

    pub fn zero() -> Self {
        RadAngle::PiMultiple(Rational::new())
    }

    pub fn from_radians(x: f64) -> Self {
        RadAngle::Radians(x)
    }

    pub fn to_real(&self, ctx: PrecisionContext) -> Real {
        match self {
            RadAngle::PiMultiple(r) => ctx.pi() * r,
            RadAngle::Radians(x) => ctx.from_f64(*x),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RadAngle::PiMultiple(r) => std::f64::consts::PI * r.to_f64(),
            RadAngle::Radians(x) => *x,
        }
    }

    /// The coefficient of π when the angle is a rational multiple of it.
    pub fn pi_coefficient(&self) -> Option<&Rational> {
        match self {
            RadAngle::PiMultiple(r) => Some(r),
            RadAngle::Radians(_) => None,
        }
    }

    pub fn half(&self) -> Self {
        match self {
            RadAngle::PiMultiple(r) => RadAngle::PiMultiple(Rational::from(r / 2u32)),
            RadAngle::Radians(x) => RadAngle::Radians(x / 2.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            RadAngle::PiMultiple(_) => true,
            RadAngle::Radians(x) => x.is_finite(),
        }
    }

    /// Exact comparison against `num/den · π`.
    pub fn cmp_pi_frac(&self, num: i64, den: i64) -> std::cmp::Ordering {
        match self {
            RadAngle::PiMultiple(r) => r.cmp(&Rational::from((num, den))),
            RadAngle::Radians(x) => {
                let ctx = PrecisionContext::new(128).expect("valid precision");
                let rhs = ctx.pi() * Rational::from((num, den));
                Float::with_val(128, *x).partial_cmp(&rhs).expect("finite angle")
            }
        }
    }
}

impl Add for &RadAngle {
    type Output = RadAngle;
    fn add(self, rhs: &RadAngle) -> RadAngle {
        match (self, rhs) {
            (RadAngle::PiMultiple(a), RadAngle::PiMultiple(b)) => RadAngle::PiMultiple(Rational::from(a + b)),
            _ => RadAngle::Radians(self.to_f64() + rhs.to_f64()),
        }
    }
}

impl Sub for &RadAngle {
    type Output = RadAngle;
    fn sub(self, rhs: &RadAngle) -> RadAngle {
        self + &(-rhs.clone())
    }
}

impl Neg for RadAngle {
    type Output = RadAngle;
    fn neg(self) -> RadAngle {
        match self {
            RadAngle::PiMultiple(r) => RadAngle::PiMultiple(-r),
            RadAngle::Radians(x) => RadAngle::Radians(-x),
        }
    }
}

impl fmt::Display for RadAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadAngle::PiMultiple(r) => {
                if r.is_zero() {
                    write!(f, "0")
                } else if *r.denom() == 1 {
                    if *r.numer() == 1 {
                        write!(f, "pi")
                    } else {
                        write!(f, "{}pi", r.numer())
                    }
                } else {
                    write!(f, "{}/{}pi", r.numer(), r.denom())
                }
            }
            RadAngle::Radians(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for RadAngle {
    type Err = Error;

    /// Accepts `0`, `pi`, `7pi`, `7/16pi`, `7pi/16`, `pi/8`, `-pi/4` (and `π`).
    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::AngleParse(s.to_string());
        let t: String = s.trim().to_ascii_lowercase().replace('π', "pi").replace([' ', '*'], "");
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.as_str()),
        };
        if body == "0" {
            return Ok(RadAngle::zero());
        }
        let (before, after) = body.split_once("pi").ok_or_else(err)?;
        let parse_u = |x: &str| x.parse::<u64>().map_err(|_| err());
        let mut coef = if before.is_empty() {
            Rational::from(1)
        } else if let Some((a, b)) = before.split_once('/') {
            let (a, b) = (parse_u(a)?, parse_u(b)?);
            if b == 0 {
                return Err(err());
            }
            Rational::from((a, b))
        } else {
            Rational::from(parse_u(before)?)
        };
        if !after.is_empty() {
            let d = parse_u(after.strip_prefix('/').ok_or_else(err)?)?;
            if d == 0 {
                return Err(err());
            }
            coef /= Rational::from(d);
        }
        if neg {
            coef = -coef;
        }
        Ok(RadAngle::PiMultiple(coef))
    }
}

/// An angle in revolutions, reduced modulo 1 into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Turn(f64);

impl Turn {
    pub fn new(x: f64) -> Self {
        let mut r = x.rem_euclid(1.0);
        // rem_euclid can round up to exactly 1.0 for tiny negative inputs
        if r >= 1.0 {
            r = 0.0;
        }
        Turn(r)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_radians(self) -> f64 {
        std::f64::consts::TAU * self.0
    }

    pub fn from_radians(x: f64) -> Self {
        Turn::new(x / std::f64::consts::TAU)
    }
}

impl Add for Turn {
    type Output = Turn;
    fn add(self, rhs: Turn) -> Turn {
        Turn::new(self.0 + rhs.0)
    }
}

impl Sub for Turn {
    type Output = Turn;
    fn sub(self, rhs: Turn) -> Turn {
        Turn::new(self.0 - rhs.0)
    }
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
