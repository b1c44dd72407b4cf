use std::collections::HashMap;
use std::sync::Mutex;

use rug::Rational;

use super::SchemeResult;
use crate::error::{Error, Result};
use crate::numerics::{compare_le, Comparison, PrecisionContext};

/// Width of the window above a minimal `n` that is checked for failures.
pub const STABILITY_WINDOW: u32 = 16;

/// Relative distance from the budget within which an f64 screening value is
/// not trusted and the comparison is redone at full precision.
const DECIDE_WINDOW: f64 = 1e-6;

/// A worst-case error curve `n ↦ max error`, with a cheap f64 screening
/// evaluation and an authoritative arbitrary-precision one.
pub trait WorstCase: Sync {
    /// Smallest admissible `n`.
    fn first_n(&self) -> u32 {
        1
    }

    /// Distance between admissible `n`.
    fn step(&self) -> u32 {
        1
    }

    /// Largest `n` worth scanning for a budget; a value above which success
    /// is guaranteed by a tail bound.
    fn scan_limit(&self, budget: f64) -> u32;

    fn screen(&self, n: u32) -> f64;

    fn exact(&self, n: u32, ctx: PrecisionContext) -> SchemeResult;
}

/// Result of a minimal-`n` search.
#[derive(Clone, Debug)]
pub struct MinN {
    pub n: u32,
    pub budget: Rational,
    pub result: SchemeResult,
    /// Guarded comparison `worst_error ≤ budget` at `n`.
    pub decision: Comparison,
    /// Admissible `n` above the answer (within the stability window) whose
    /// worst error exceeds the budget again.
    pub unstable: Vec<u32>,
}

/// A [`WorstCase`] with memoized screening values, shared across budgets.
pub struct Curve<W> {
    inner: W,
    memo: Mutex<HashMap<u32, f64>>,
}

impl<W: WorstCase> Curve<W> {
    pub fn new(inner: W) -> Self {
        Curve {
            inner,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &W {
        &self.inner
    }

    pub fn screen(&self, n: u32) -> f64 {
        if let Some(v) = self.memo.lock().expect("memo").get(&n) {
            return *v;
        }
        let v = self.inner.screen(n);
        self.memo.lock().expect("memo").insert(n, v);
        v
    }

    pub fn exact(&self, n: u32, ctx: PrecisionContext) -> SchemeResult {
        self.inner.exact(n, ctx)
    }

    /// Guarded `exact(n) ≤ budget`.
    pub fn decide_exact(&self, n: u32, budget: &Rational, ctx: PrecisionContext) -> Comparison {
        compare_le(ctx, |c| (self.inner.exact(n, c).worst_error, c.from_rational(budget)))
    }

    /// `worst_error(n) ≤ budget`, from the screening value unless it is too
    /// close to call.
    pub fn passes(&self, n: u32, budget: &Rational, ctx: PrecisionContext) -> bool {
        let v = self.screen(n);
        let b = budget.to_f64();
        if v <= b * (1.0 - DECIDE_WINDOW) {
            true
        } else if v >= b * (1.0 + DECIDE_WINDOW) {
            false
        } else {
            self.decide_exact(n, budget, ctx).holds
        }
    }

    /// Smallest admissible `n` with `worst_error(n) ≤ budget`, scanning upward.
    pub fn min_n(&self, budget: &Rational, ctx: PrecisionContext) -> Result<MinN> {
        if *budget <= 0 {
            return Err(Error::Domain("budget must be positive".into()));
        }
        let step = self.inner.step();
        let limit = self.inner.scan_limit(budget.to_f64());
        let mut n = self.inner.first_n();
        while n <= limit {
            if self.passes(n, budget, ctx) {
                let decision = self.decide_exact(n, budget, ctx);
                if decision.holds {
                    let unstable = (1..=STABILITY_WINDOW / step)
                        .map(|i| n + i * step)
                        .filter(|&m| !self.passes(m, budget, ctx))
                        .collect();
                    let result = self.inner.exact(n, ctx);
                    return Ok(MinN {
                        n,
                        budget: budget.clone(),
                        result,
                        decision,
                        unstable,
                    });
                }
            }
            n += step;
        }
        Err(Error::Domain(format!("no n ≤ {limit} meets the budget")))
    }
}
