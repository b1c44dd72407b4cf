//! Iteration planning for the phase-shifted algorithm: how many iterations
//! need more than one measurement (`k_ε`), the total `N_ε` they cost, and
//! the per-`m` schedules used when every iteration shares the budget.

use std::fmt;

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::numerics::{compare_le, PrecisionContext, RadAngle, Real};
use crate::pipelines::{evaluate, majority_sign_plan, triple_sign_plan, CurveCache, StepScheme};

/// Scheme used for the first iteration, which fixes three bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FirstStage {
    TripleSign,
    Majority,
}

impl fmt::Display for FirstStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FirstStage::TripleSign => "triple_sign",
            FirstStage::Majority => "majority",
        })
    }
}

/// Budget assignment over the iterations of a schedule with `m` sized
/// iterations. The first iteration's budget is halved internally between
/// its two sub-steps.
#[derive(Clone, Debug, PartialEq)]
pub enum BudgetPolicy {
    /// `ε/m` for every iteration, the first included.
    Table3,
    /// `ε` for the first iteration, `ε/m` for the rest.
    Table4Sign,
    /// `ε/m` for every iteration.
    Table4Majority,
    /// Explicit fractions of `ε` for the first and for each later iteration.
    Custom { first: Rational, rest: Rational },
}

impl BudgetPolicy {
    pub fn id(&self) -> &'static str {
        match self {
            BudgetPolicy::Table3 => "table3",
            BudgetPolicy::Table4Sign => "table4_sign",
            BudgetPolicy::Table4Majority => "table4_majority",
            BudgetPolicy::Custom { .. } => "custom",
        }
    }

    /// Policy behind the per-`m` table for a first stage.
    pub fn table4(first: FirstStage) -> Self {
        match first {
            FirstStage::TripleSign => BudgetPolicy::Table4Sign,
            FirstStage::Majority => BudgetPolicy::Table4Majority,
        }
    }

    /// `(first iteration budget, later iteration budget)`.
    pub fn budgets(&self, eps: &Rational, m: u32) -> Result<(Rational, Rational)> {
        if m == 0 {
            return domain("at least one iteration is required");
        }
        let per = Rational::from(eps / m);
        Ok(match self {
            BudgetPolicy::Table3 | BudgetPolicy::Table4Majority => (per.clone(), per),
            BudgetPolicy::Table4Sign => (eps.clone(), per),
            BudgetPolicy::Custom { first, rest } => {
                if *first <= 0 || *rest <= 0 {
                    return domain("custom budget fractions must be positive");
                }
                (Rational::from(eps * first), Rational::from(eps * rest))
            }
        })
    }
}

impl std::str::FromStr for BudgetPolicy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table3" => Ok(BudgetPolicy::Table3),
            "table4_sign" => Ok(BudgetPolicy::Table4Sign),
            "table4_majority" => Ok(BudgetPolicy::Table4Majority),
            _ => {
                let rest = s
                    .strip_prefix("custom:")
                    .ok_or_else(|| crate::Error::Invalid(format!("unknown policy '{s}'")))?;
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| crate::Error::Invalid("custom policy needs 'custom:FIRST,REST'".into()))?;
                Ok(BudgetPolicy::Custom {
                    first: crate::numerics::parse_rational(a.trim())?,
                    rest: crate::numerics::parse_rational(b.trim())?,
                })
            }
        }
    }
}

/// One sized step of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanEntry {
    /// Iteration `k`; iteration 1 fixes three bits.
    pub iteration: u32,
    pub scheme: StepScheme,
    pub budget: Option<Rational>,
    pub count: u32,
    pub multiplicity: u32,
}

impl PlanEntry {
    pub fn samples(&self) -> u64 {
        self.count as u64 * self.multiplicity as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanRow {
    pub eps: Rational,
    /// Number of iterations the schedule covers.
    pub m: u32,
    pub first_stage: FirstStage,
    pub policy: &'static str,
    pub entries: Vec<PlanEntry>,
    pub total: u64,
}

impl PlanRow {
    /// Measurements per iteration, in iteration order.
    pub fn iteration(&self, k: u32) -> impl Iterator<Item = &PlanEntry> {
        self.entries.iter().filter(move |e| e.iteration == k)
    }

    pub fn per_iteration(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.m as usize];
        for e in &self.entries {
            out[e.iteration as usize - 1] += e.samples();
        }
        out
    }
}

/// Sign-step angle `π/2^(k+1)` of iteration `k`.
pub fn iteration_angle(k: u32) -> RadAngle {
    RadAngle::pi_frac(1, 1i64 << (k + 1))
}

fn check_eps(eps: &Rational, closed: bool) -> Result<()> {
    if *eps <= 0 || *eps > 1 || (!closed && *eps == 1) {
        return domain("epsilon out of range");
    }
    Ok(())
}

/// Smallest `k ≥ 1` with `4^-k ≤ 12ε/(kπ²)`.
pub fn k_eps_exact(eps: &Rational, ctx: PrecisionContext) -> Result<u32> {
    check_eps(eps, true)?;
    for k in 1..=200u32 {
        let c = compare_le(ctx, |c| {
            let lhs = c.pi().square() * k;
            let rhs = c.from_rational(eps) * 12u32 * Float::with_val(c.bits(), Float::u_exp(1, 2 * k as i32));
            (lhs, rhs)
        });
        if c.holds {
            return Ok(k);
        }
    }
    domain("epsilon too small")
}

/// `⌈(22/43)·log₂(π²/ε)⌉`.
pub fn k_eps_bound(eps: &Rational, ctx: PrecisionContext) -> Result<u32> {
    check_eps(eps, true)?;
    let v = (ctx.pi().square() / ctx.from_rational(eps)).log2() * 22u32 / 43u32;
    Ok(v.ceil().to_f64() as u32)
}

fn first_iteration(
    first: FirstStage,
    budget: &Rational,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<Vec<PlanEntry>> {
    let plan = match first {
        FirstStage::TripleSign => triple_sign_plan(budget)?,
        FirstStage::Majority => majority_sign_plan(budget)?,
    };
    let r = evaluate(&plan, cache, ctx)?;
    Ok(r.steps
        .into_iter()
        .map(|s| PlanEntry {
            iteration: 1,
            scheme: s.scheme,
            budget: Some(s.budget),
            count: s.count,
            multiplicity: s.multiplicity,
        })
        .collect())
}

fn sign_entry(k: u32, budget: &Rational, cache: &CurveCache, ctx: PrecisionContext) -> Result<PlanEntry> {
    let alpha = iteration_angle(k);
    let r = cache.sign(&alpha)?.min_n(budget, ctx)?;
    Ok(PlanEntry {
        iteration: k,
        scheme: StepScheme::Sign { alpha },
        budget: Some(budget.clone()),
        count: r.n,
        multiplicity: 1,
    })
}

fn single_entry(k: u32) -> PlanEntry {
    PlanEntry {
        iteration: k,
        scheme: StepScheme::Sign {
            alpha: iteration_angle(k),
        },
        budget: None,
        count: 1,
        multiplicity: 1,
    }
}

/// Sizes iterations `1..=sized` under `policy`, with `share` the number of
/// iterations the budget is divided over.
fn sized(
    eps: &Rational,
    sized: u32,
    share: u32,
    first: FirstStage,
    policy: &BudgetPolicy,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<Vec<PlanEntry>> {
    let (b1, rest) = policy.budgets(eps, share)?;
    let mut entries = first_iteration(first, &b1, cache, ctx)?;
    for k in 2..=sized {
        entries.push(sign_entry(k, &rest, cache, ctx)?);
    }
    Ok(entries)
}

fn row(eps: &Rational, m: u32, first: FirstStage, policy: &BudgetPolicy, entries: Vec<PlanEntry>) -> PlanRow {
    let total = entries.iter().map(PlanEntry::samples).sum();
    PlanRow {
        eps: eps.clone(),
        m,
        first_stage: first,
        policy: policy.id(),
        entries,
        total,
    }
}

/// `N_ε`: with `k = k_ε` and `ε̄ = ε/k`, the first iteration at `ε̄` and
/// iterations `2..k−1` at `ε̄` each. Iteration `k` onward is single-shot.
pub fn n_eps(eps: &Rational, first: FirstStage, cache: &CurveCache, ctx: PrecisionContext) -> Result<PlanRow> {
    check_eps(eps, false)?;
    let k = k_eps_exact(eps, ctx)?;
    let policy = BudgetPolicy::Table3;
    let entries = sized(eps, k.saturating_sub(1).max(1), k, first, &policy, cache, ctx)?;
    let m = k.saturating_sub(1).max(1);
    Ok(row(eps, m, first, &policy, entries))
}

/// `⌊7 + k + (c + ln(k−2))·(log₂(1/ε) + log₂ k)⌋` with `k = k_ε`, `c = 7`
/// for triple-sign and `5` for majority.
pub fn n_eps_bound(eps: &Rational, first: FirstStage, ctx: PrecisionContext) -> Result<u64> {
    check_eps(eps, false)?;
    let k = k_eps_exact(eps, ctx)?;
    if k < 3 {
        return domain(format!("bound needs k_eps ≥ 3, got {k}"));
    }
    let c = match first {
        FirstStage::TripleSign => 7u32,
        FirstStage::Majority => 5u32,
    };
    let kr = ctx.from_int(k as i64);
    let lnk = ctx.from_int(k as i64 - 2).ln() + c;
    let logs = ctx.from_rational(eps).recip().log2() + kr.log2();
    let v: Real = lnk * logs + (7 + k);
    Ok(v.floor().to_f64() as u64)
}

/// Schedule for `m` iterations with every iteration sized under the per-`m`
/// policy of `first`; `None` (a dash) when `m > k_ε`.
pub fn m_table_entry(
    eps: &Rational,
    m: u32,
    first: FirstStage,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<Option<PlanRow>> {
    m_table_entry_with(eps, m, first, &BudgetPolicy::table4(first), cache, ctx)
}

pub fn m_table_entry_with(
    eps: &Rational,
    m: u32,
    first: FirstStage,
    policy: &BudgetPolicy,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<Option<PlanRow>> {
    check_eps(eps, false)?;
    if m == 0 {
        return domain("m must be positive");
    }
    if m > k_eps_exact(eps, ctx)? {
        return Ok(None);
    }
    let entries = sized(eps, m, m, first, policy, cache, ctx)?;
    Ok(Some(row(eps, m, first, policy, entries)))
}

/// Complete schedule for `m` iterations: the per-`m` table entry while
/// `m ≤ k_ε`, otherwise `N_ε` followed by one measurement for each of the
/// remaining iterations.
pub fn schedule(
    eps: &Rational,
    m: u32,
    first: FirstStage,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<PlanRow> {
    schedule_with(eps, m, first, &BudgetPolicy::table4(first), cache, ctx)
}

/// [`schedule`] with an explicit policy for the `m ≤ k_ε` regime.
pub fn schedule_with(
    eps: &Rational,
    m: u32,
    first: FirstStage,
    policy: &BudgetPolicy,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<PlanRow> {
    if let Some(r) = m_table_entry_with(eps, m, first, policy, cache, ctx)? {
        return Ok(r);
    }
    let base = n_eps(eps, first, cache, ctx)?;
    let mut entries = base.entries;
    entries.extend((base.m + 1..=m).map(single_entry));
    Ok(row(eps, m, first, &BudgetPolicy::Table3, entries))
}

/// Total measurement count of [`schedule`].
pub fn total_measurements(
    eps: &Rational,
    m: u32,
    first: FirstStage,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<u64> {
    Ok(schedule(eps, m, first, cache, ctx)?.total)
}

/// `(Σ_{j=k}^{m} sin²(π/2^{j+2}), (π²/12)·4^-k)`: the failure mass of
/// single-shot iterations `k..m` and its closed-form bound.
pub fn single_shot_tail(k: u32, m: u32, ctx: PrecisionContext) -> Result<(Real, Real)> {
    if k < 2 || k > m || m > 1000 {
        return domain("need 2 ≤ k ≤ m ≤ 1000");
    }
    let mut sum = ctx.zero();
    for j in k..=m {
        let a = Float::with_val(ctx.bits(), ctx.pi() >> (j + 2));
        sum += a.sin().square();
    }
    let bound = (ctx.pi().square() / 12u32) >> (2 * k);
    Ok((sum, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ten_pow_neg;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn k_eps_values() {
        let exact: Vec<u32> = (1..=10).map(|t| k_eps_exact(&ten_pow_neg(t), ctx()).unwrap()).collect();
        assert_eq!(exact, vec![3, 5, 7, 9, 10, 12, 14, 16, 17, 19]);
        let bound: Vec<u32> = (1..=10).map(|t| k_eps_bound(&ten_pow_neg(t), ctx()).unwrap()).collect();
        assert_eq!(bound, vec![4, 6, 7, 9, 11, 12, 14, 16, 17, 19]);
        assert_eq!(k_eps_exact(&Rational::from(1), ctx()).unwrap(), 1);
    }

    #[test]
    fn n_eps_decompositions() {
        let cache = CurveCache::new();
        let e3 = ten_pow_neg(3);
        let s = n_eps(&e3, FirstStage::TripleSign, &cache, ctx()).unwrap();
        assert_eq!(s.total, 84);
        assert_eq!(s.per_iteration(), vec![63, 7, 5, 3, 3, 3]);
        let m = n_eps(&e3, FirstStage::Majority, &cache, ctx()).unwrap();
        assert_eq!(m.total, 72);
        assert_eq!(m.per_iteration(), vec![51, 7, 5, 3, 3, 3]);
        assert_eq!(n_eps_bound(&ten_pow_neg(1), FirstStage::TripleSign, ctx()).unwrap(), 44);
        assert_eq!(n_eps_bound(&ten_pow_neg(5), FirstStage::Majority, ctx()).unwrap(), 158);
    }

    #[test]
    fn table4_spots_and_dash() {
        let cache = CurveCache::new();
        let e1 = ten_pow_neg(1);
        let e5 = ten_pow_neg(5);
        let t = |e, m, f| m_table_entry(e, m, f, &cache, ctx()).unwrap().map(|r| r.total);
        assert_eq!(t(&e1, 3, FirstStage::TripleSign), Some(19));
        assert_eq!(t(&e5, 10, FirstStage::TripleSign), Some(130));
        assert_eq!(t(&e5, 10, FirstStage::Majority), Some(122));
        assert_eq!(t(&e1, 4, FirstStage::TripleSign), None);
        assert_eq!(t(&e1, 4, FirstStage::Majority), None);
    }

    #[test]
    fn totals_beyond_k_eps() {
        let cache = CurveCache::new();
        let e1 = ten_pow_neg(1);
        assert_eq!(
            total_measurements(&e1, 23, FirstStage::TripleSign, &cache, ctx()).unwrap(),
            45
        );
        let a = total_measurements(&e1, 4, FirstStage::TripleSign, &cache, ctx()).unwrap();
        let b = total_measurements(&e1, 5, FirstStage::TripleSign, &cache, ctx()).unwrap();
        assert_eq!(b - a, 1);
        let r = schedule(&e1, 6, FirstStage::Majority, &cache, ctx()).unwrap();
        assert_eq!(r.per_iteration().len(), 6);
    }

    #[test]
    fn growth_is_one_per_iteration_past_k_eps() {
        let cache = CurveCache::new();
        for t in [1, 3, 6] {
            let eps = ten_pow_neg(t);
            let k = k_eps_exact(&eps, ctx()).unwrap();
            for first in [FirstStage::TripleSign, FirstStage::Majority] {
                let total = |m| total_measurements(&eps, m, first, &cache, ctx()).unwrap();
                for m in k + 1..k + 6 {
                    assert_eq!(total(m + 1) - total(m), 1, "eps 1e-{t} m {m}");
                }
            }
        }
        // the per-m table and the N_eps schedule split budgets differently
        let e1 = ten_pow_neg(1);
        let total = |m, first| total_measurements(&e1, m, first, &cache, ctx()).unwrap();
        assert_eq!((total(3, FirstStage::TripleSign), total(4, FirstStage::TripleSign)), (19, 26));
        assert_eq!((total(3, FirstStage::Majority), total(4, FirstStage::Majority)), (25, 26));
    }

    #[test]
    fn single_shot_tail_values() {
        let (e, b) = single_shot_tail(2, 2, ctx()).unwrap();
        assert!((e.to_f64() - 0.0380602337443566).abs() < 1e-15);
        assert!(e < b);
        for k in 2..=30 {
            for m in k..=60 {
                let (e, b) = single_shot_tail(k, m, ctx()).unwrap();
                assert!(e <= b, "k={k} m={m}");
            }
        }
    }

    #[test]
    fn policy_parse() {
        assert_eq!("table3".parse::<BudgetPolicy>().unwrap(), BudgetPolicy::Table3);
        let c: BudgetPolicy = "custom:1/2, 1/4".parse().unwrap();
        assert_eq!(c.id(), "custom");
        assert!("nope".parse::<BudgetPolicy>().is_err());
    }
}
