use std::fmt;

use rug::Rational;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::numerics::{fast, Bernoulli, PrecisionContext, RadAngle, Real, SuccessSet2D, Turn};

/// Two-bit quantization `.b₁b₂` of an angle into quarter turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum MajorityLabel {
    B00,
    B01,
    B10,
    B11,
}

impl MajorityLabel {
    /// The quarter index `q` with label value `q/4` turns.
    pub fn quarter(self) -> u8 {
        match self {
            MajorityLabel::B00 => 0,
            MajorityLabel::B01 => 1,
            MajorityLabel::B10 => 2,
            MajorityLabel::B11 => 3,
        }
    }
}

impl fmt::Display for MajorityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = self.quarter();
        write!(f, ".{}{}", q >> 1, q & 1)
    }
}

/// Quantization of the count pair: the first matching case in the order
/// `.00`, `.01`, `.10`, otherwise `.11`.
pub fn majority_quantize(nx: u32, ny: u32, n: u32) -> Result<MajorityLabel> {
    if nx > n || ny > n {
        return domain(format!("counts ({nx}, {ny}) exceed n = {n}"));
    }
    let (nx, ny, n) = (nx as i64, ny as i64, n as i64);
    Ok(if nx >= ny.max(n - ny + 1) {
        MajorityLabel::B00
    } else if ny >= (nx + 1).max(n - nx) {
        MajorityLabel::B01
    } else if n - nx >= (ny + 1).max(n - ny) {
        MajorityLabel::B10
    } else {
        MajorityLabel::B11
    })
}

/// Success set used for the majority error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MajoritySet {
    /// `K_n = {(i, j) : i + j ≥ n + 1}`.
    Reduced,
    /// Every pair quantized to `.00` or `.01`.
    Full,
}

impl MajoritySet {
    pub fn contains(self, i: u32, j: u32, n: u32) -> bool {
        match self {
            MajoritySet::Reduced => i + j > n,
            MajoritySet::Full => matches!(
                majority_quantize(i, j, n).expect("in range"),
                MajorityLabel::B00 | MajorityLabel::B01
            ),
        }
    }

    pub fn to_set(self, n: u32) -> SuccessSet2D {
        SuccessSet2D::from_predicate(n, |i, j| self.contains(i, j, n))
    }
}

/// `1 − Pr(K | n, α)` for `α ∈ [0, π/2]`, summed over the complement.
pub fn majority_error(n: u32, alpha: &RadAngle, set: MajoritySet, ctx: PrecisionContext) -> Result<Real> {
    use std::cmp::Ordering::*;
    if alpha.cmp_pi_frac(0, 1) == Less || alpha.cmp_pi_frac(1, 2) == Greater {
        return domain(format!("angle {alpha} outside [0, π/2]"));
    }
    Ok(majority_error_real(n, &alpha.to_real(ctx), set, ctx))
}

pub fn majority_error_real(n: u32, alpha: &Real, set: MajoritySet, ctx: PrecisionContext) -> Real {
    let px = Bernoulli::from_cos(alpha).pmf(n);
    let py = Bernoulli::from_sin(alpha).pmf(n);
    let mut total = ctx.zero();
    for i in 0..=n {
        let mut out = ctx.zero();
        for j in 0..=n {
            if !set.contains(i, j, n) {
                out += &py[j as usize];
            }
        }
        total += out * &px[i as usize];
    }
    total
}

pub fn majority_error_f64(n: u32, alpha: f64, set: MajoritySet) -> f64 {
    let (px, qx) = fast::bernoulli_cos(alpha);
    let (py, qy) = fast::bernoulli_sin(alpha);
    let fx = fast::pmf(n, px, qx);
    let fy = fast::pmf(n, py, qy);
    let mut total = 0.0;
    for i in 0..=n {
        let out: f64 = (0..=n)
            .filter(|&j| !set.contains(i, j, n))
            .map(|j| fy[j as usize])
            .sum();
        total += fx[i as usize] * out;
    }
    total
}

/// `⌈log₂(2/ε̄)⌉`: the smallest `n ≥ 1` with `2/2ⁿ ≤ ε̄`, decided exactly.
pub fn majority_bound_n(eps: &Rational) -> Result<u32> {
    if *eps <= 0 {
        return domain("budget must be positive");
    }
    let target = 2u32 / eps.clone();
    let mut n = 1u32;
    while rug::Integer::from(1) << n < target {
        n += 1;
    }
    Ok(n)
}

/// Direction of `(2n_x/n − 1, 2n_y/n − 1)` in turns; the centre maps to 0 and
/// is flagged as degenerate.
pub fn angle_from_counts(nx: u32, ny: u32, n: u32) -> Result<(Turn, bool)> {
    if n == 0 || nx > n || ny > n {
        return domain(format!("invalid counts ({nx}, {ny}) of n = {n}"));
    }
    let vx = 2 * nx as i64 - n as i64;
    let vy = 2 * ny as i64 - n as i64;
    if vx == 0 && vy == 0 {
        return Ok((Turn::new(0.0), true));
    }
    Ok((Turn::from_radians((vy as f64).atan2(vx as f64)), false))
}
