//! Error-curve datasets: the error of one scheme as its parameter sweeps a
//! range, with both one-sided values at every discontinuity.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::numerics::PrecisionContext;
use crate::schemes::box_scheme::box_error_at_f64;
use crate::schemes::majority::majority_error_f64;
use crate::schemes::wedge::wedge_error_at_f64;
use crate::schemes::{box_breakpoints, wedge_critical_angles, Delta, MajoritySet, Side, WedgeGeometry};
use crate::tables::TableCsv;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u32,
    /// `p` for the box, the angle in radians otherwise.
    pub x: f64,
    pub side: Side,
    pub error: f64,
}

fn grid(lo: f64, hi: f64, resolution: u32) -> Result<Vec<f64>> {
    if resolution < 2 {
        return domain("resolution must be at least 2");
    }
    Ok((0..resolution)
        .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
        .collect())
}

fn sort(mut v: Vec<CurvePoint>) -> Vec<CurvePoint> {
    let rank = |s: Side| match s {
        Side::Left => 0,
        Side::Point => 1,
        Side::Right => 2,
    };
    v.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.x.total_cmp(&b.x))
            .then(rank(a.side).cmp(&rank(b.side)))
    });
    v
}

/// Box error over `p ∈ [0,1]`.
pub fn box_curve(n: u32, delta: &Delta, resolution: u32, ctx: PrecisionContext) -> Result<Vec<CurvePoint>> {
    let d = delta.to_f64();
    if d <= 0.0 || n == 0 {
        return domain("need n ≥ 1 and δ > 0");
    }
    let mut v: Vec<CurvePoint> = grid(0.0, 1.0, resolution)?
        .into_iter()
        .map(|p| CurvePoint {
            n,
            x: p,
            side: Side::Point,
            error: box_error_at_f64(n, d, p, Side::Point),
        })
        .collect();
    for bp in box_breakpoints(n, &delta.to_real(ctx)) {
        let p = bp.to_f64();
        if p > 0.0 && p < 1.0 {
            for side in [Side::Left, Side::Right] {
                v.push(CurvePoint {
                    n,
                    x: p,
                    side,
                    error: box_error_at_f64(n, d, p, side),
                });
            }
        }
    }
    Ok(sort(v))
}

/// Wedge error over `α ∈ [0, 2π)`.
pub fn wedge_curve(geom: &WedgeGeometry, resolution: u32) -> Result<Vec<CurvePoint>> {
    let n = geom.n();
    let mut xs = grid(0.0, TAU, resolution + 1)?;
    xs.pop();
    let mut v: Vec<CurvePoint> = xs
        .into_iter()
        .map(|a| CurvePoint {
            n,
            x: a,
            side: Side::Point,
            error: wedge_error_at_f64(geom, a, Side::Point),
        })
        .collect();
    for a in wedge_critical_angles(geom) {
        for side in [Side::Left, Side::Right] {
            v.push(CurvePoint {
                n,
                x: a,
                side,
                error: wedge_error_at_f64(geom, a, side),
            });
        }
    }
    Ok(sort(v))
}

/// Majority error over `α ∈ [0, π/2]` for each `n`.
pub fn majority_curve(ns: &[u32], set: MajoritySet, resolution: u32) -> Result<Vec<CurvePoint>> {
    if ns.contains(&0) {
        return domain("n must be positive");
    }
    let xs = grid(0.0, FRAC_PI_2, resolution)?;
    let v = ns
        .iter()
        .flat_map(|&n| {
            xs.iter().map(move |&a| CurvePoint {
                n,
                x: a,
                side: Side::Point,
                error: majority_error_f64(n, a, set),
            })
        })
        .collect();
    Ok(sort(v))
}

/// Number of parameter values carrying one-sided values that disagree with
/// each other or with the value at the point.
pub fn discontinuities(points: &[CurvePoint], tol: f64) -> usize {
    points
        .chunk_by(|a, b| a.n == b.n && a.x == b.x)
        .filter(|g| g.len() > 1)
        .filter(|g| {
            let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.error), hi.max(p.error))
            });
            hi - lo > tol
        })
        .count()
}

/// CSV layout `n,x,side,error[,scaled]`; `scaled` is `error · 2^n`.
pub fn to_table(points: &[CurvePoint], scaled: bool) -> TableCsv {
    let mut header = vec!["n", "x", "side", "error"];
    if scaled {
        header.push("scaled");
    }
    let rows = points
        .iter()
        .map(|p| {
            let mut r = vec![
                p.n.to_string(),
                p.x.to_string(),
                p.side.label().to_owned(),
                p.error.to_string(),
            ];
            if scaled {
                r.push((p.error * 2f64.powi(p.n as i32)).to_string());
            }
            r
        })
        .collect();
    TableCsv {
        header: header.into_iter().map(str::to_owned).collect(),
        rows,
    }
}
