//! First-iteration compositions: how many measurements the first iteration
//! of the improved algorithm needs to reach 1/8-turn accuracy under each
//! sampling strategy.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::numerics::{PrecisionContext, RadAngle};
use crate::schemes::search::{Curve, MinN, WorstCase};
use crate::schemes::{majority_bound_n, BoxCurve, BoxJointCurve, Delta, SignCurve, WedgeCurve};

/// Margins below this (relative) are flagged in results.
pub const BORDERLINE_MARGIN: f64 = 1e-9;

/// Accuracy of the reference angle carried from the first stage into the
/// sign stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RefMode {
    TwoBit,
    ThreeBit,
    Exact,
}

impl RefMode {
    pub fn bits(self) -> Option<u32> {
        match self {
            RefMode::TwoBit => Some(2),
            RefMode::ThreeBit => Some(3),
            RefMode::Exact => None,
        }
    }

    /// Extra angular deviation `π/2^(k+1)` left by a `k`-bit reference.
    fn deviation(self) -> RadAngle {
        match self.bits() {
            Some(k) => RadAngle::pi_frac(1, 1 << (k + 1)),
            None => RadAngle::zero(),
        }
    }
}

impl fmt::Display for RefMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefMode::TwoBit => "2bit",
            RefMode::ThreeBit => "3bit",
            RefMode::Exact => "exact",
        })
    }
}

/// How the overall budget `ε` is divided over the determinations of a
/// multi-stage pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SplitPolicy {
    /// Every determination (each box component, the joint wedge, each sign
    /// stage) gets `ε / #determinations`.
    Equal,
    /// Every stage gets `ε / #stages`, the box stage halved between its
    /// components.
    PerStage,
}

/// Whether a wedge stage is one joint determination or is charged like two
/// box components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum WedgeConvention {
    Joint,
    PerComponent,
}

/// One sampling step of a pipeline.
#[derive(Clone, Debug, PartialEq)]
pub enum StepScheme {
    /// Box estimation of one component with `δ = sin(η)/√2`.
    Box {
        eta: RadAngle,
    },
    /// Joint box estimation of both components.
    BoxJoint {
        eta: RadAngle,
    },
    Wedge {
        eta: RadAngle,
    },
    Sign {
        alpha: RadAngle,
    },
    /// Majority sampling, sized by the `2/2ⁿ` bound.
    MajorityBound,
}

impl fmt::Display for StepScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepScheme::Box { eta } => write!(f, "box(eta={eta})"),
            StepScheme::BoxJoint { eta } => write!(f, "box-joint(eta={eta})"),
            StepScheme::Wedge { eta } => write!(f, "wedge(eta={eta})"),
            StepScheme::Sign { alpha } => write!(f, "sign(alpha={alpha})"),
            StepScheme::MajorityBound => write!(f, "majority-bound"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedStep {
    pub scheme: StepScheme,
    /// Number of times the step's sample count is spent.
    pub multiplicity: u32,
    /// Number of times the step's budget is charged against `ε`.
    pub charges: u32,
    pub budget: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StagePlan {
    pub label: String,
    pub eps: Rational,
    pub steps: Vec<PlannedStep>,
}

impl StagePlan {
    /// Total budget charged against `ε`.
    pub fn charged(&self) -> Rational {
        self.steps.iter().map(|s| Rational::from(&s.budget * s.charges)).sum()
    }
}

#[derive(Clone, Debug)]
pub struct StepCount {
    pub scheme: StepScheme,
    pub multiplicity: u32,
    pub budget: Rational,
    pub count: u32,
    /// Relative margin of the deciding comparison (`None` for bound-sized
    /// steps, which are decided exactly).
    pub margin: Option<f64>,
    pub unstable: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub label: String,
    pub total: u64,
    pub steps: Vec<StepCount>,
    pub flags: Vec<String>,
}

impl PipelineResult {
    /// Smallest absolute margin over all steps.
    pub fn min_margin(&self) -> Option<f64> {
        self.steps
            .iter()
            .filter_map(|s| s.margin.map(f64::abs))
            .reduce(f64::min)
    }
}

/// Memoized worst-case curves shared between pipeline evaluations.
#[derive(Default)]
pub struct CurveCache {
    boxes: Mutex<HashMap<String, Arc<Curve<BoxCurve>>>>,
    joints: Mutex<HashMap<String, Arc<Curve<BoxJointCurve>>>>,
    wedges: Mutex<HashMap<String, Arc<Curve<WedgeCurve>>>>,
    signs: Mutex<HashMap<String, Arc<Curve<SignCurve>>>>,
}

fn cached<W: WorstCase>(
    map: &Mutex<HashMap<String, Arc<Curve<W>>>>,
    key: String,
    make: impl FnOnce() -> Result<W>,
) -> Result<Arc<Curve<W>>> {
    if let Some(c) = map.lock().expect("curve cache").get(&key) {
        return Ok(Arc::clone(c));
    }
    let curve = Arc::new(Curve::new(make()?));
    Ok(Arc::clone(map.lock().expect("curve cache").entry(key).or_insert(curve)))
}

impl CurveCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sign(&self, alpha: &RadAngle) -> Result<Arc<Curve<SignCurve>>> {
        cached(&self.signs, alpha.to_string(), || SignCurve::new(alpha))
    }

    pub fn boxed(&self, eta: &RadAngle) -> Result<Arc<Curve<BoxCurve>>> {
        cached(&self.boxes, eta.to_string(), || {
            BoxCurve::new(Delta::OfEta(eta.clone()))
        })
    }

    pub fn joint(&self, eta: &RadAngle) -> Result<Arc<Curve<BoxJointCurve>>> {
        cached(&self.joints, eta.to_string(), || {
            BoxJointCurve::new(Delta::OfEta(eta.clone()))
        })
    }

    pub fn wedge(&self, eta: &RadAngle) -> Result<Arc<Curve<WedgeCurve>>> {
        cached(&self.wedges, eta.to_string(), || WedgeCurve::new(eta.clone()))
    }

    pub fn min_n(&self, scheme: &StepScheme, budget: &Rational, ctx: PrecisionContext) -> Result<MinN> {
        match scheme {
            StepScheme::Box { eta } => self.boxed(eta)?.min_n(budget, ctx),
            StepScheme::BoxJoint { eta } => self.joint(eta)?.min_n(budget, ctx),
            StepScheme::Wedge { eta } => self.wedge(eta)?.min_n(budget, ctx),
            StepScheme::Sign { alpha } => self.sign(alpha)?.min_n(budget, ctx),
            StepScheme::MajorityBound => domain("majority steps are sized by their bound"),
        }
    }
}

fn check_eps(eps: &Rational) -> Result<()> {
    if *eps <= 0 || *eps >= 1 {
        return domain("epsilon must lie in (0, 1)");
    }
    Ok(())
}

fn frac(eps: &Rational, num: u32, den: u32) -> Rational {
    eps * Rational::from((num, den))
}

fn step(scheme: StepScheme, multiplicity: u32, charges: u32, budget: Rational) -> PlannedStep {
    PlannedStep {
        scheme,
        multiplicity,
        charges,
        budget,
    }
}

/// Half-width of the first-stage acceptance region for a pipeline with the
/// given number of stages.
pub fn first_stage_eta(stages: u8) -> Result<RadAngle> {
    match stages {
        1 => Ok(RadAngle::pi_frac(1, 8)),
        2 => Ok(RadAngle::pi_frac(1, 4)),
        3 => Ok(RadAngle::pi_frac(1, 2)),
        _ => domain(format!("pipelines have 1 to 3 stages, got {stages}")),
    }
}

/// Sign-stage angles: `π/8 + d` after two stages; `π/4 + d` and its half
/// after three, with `d` the reference deviation.
pub fn sign_stage_angles(stages: u8, ref_mode: RefMode) -> Result<Vec<RadAngle>> {
    let d = ref_mode.deviation();
    match stages {
        1 => Ok(vec![]),
        2 => Ok(vec![&RadAngle::pi_frac(1, 8) + &d]),
        3 => {
            let first = &RadAngle::pi_frac(1, 4) + &d;
            let second = first.half();
            Ok(vec![first, second])
        }
        _ => domain(format!("pipelines have 1 to 3 stages, got {stages}")),
    }
}

pub fn box_plan(stages: u8, ref_mode: RefMode, eps: &Rational, policy: SplitPolicy) -> Result<StagePlan> {
    check_eps(eps)?;
    let eta = first_stage_eta(stages)?;
    let angles = sign_stage_angles(stages, ref_mode)?;
    let s = stages as u32;
    let (first, sign) = match policy {
        SplitPolicy::Equal => (frac(eps, 1, s + 1), frac(eps, 1, s + 1)),
        SplitPolicy::PerStage => (frac(eps, 1, 2 * s), frac(eps, 1, s)),
    };
    let mut steps = vec![step(StepScheme::Box { eta }, 2, 2, first)];
    steps.extend(
        angles
            .into_iter()
            .map(|alpha| step(StepScheme::Sign { alpha }, 1, 1, sign.clone())),
    );
    Ok(StagePlan {
        label: format!("box/{stages}-stage/{ref_mode}"),
        eps: eps.clone(),
        steps,
    })
}

pub fn wedge_plan(stages: u8, ref_mode: RefMode, eps: &Rational, convention: WedgeConvention) -> Result<StagePlan> {
    check_eps(eps)?;
    let eta = first_stage_eta(stages)?;
    let angles = sign_stage_angles(stages, ref_mode)?;
    let s = stages as u32;
    let (each, charges) = match convention {
        WedgeConvention::Joint => (frac(eps, 1, s), 1),
        WedgeConvention::PerComponent => (frac(eps, 1, s + 1), 2),
    };
    let mut steps = vec![step(StepScheme::Wedge { eta }, 2, charges, each.clone())];
    steps.extend(
        angles
            .into_iter()
            .map(|alpha| step(StepScheme::Sign { alpha }, 1, 1, each.clone())),
    );
    Ok(StagePlan {
        label: format!("wedge/{stages}-stage/{ref_mode}"),
        eps: eps.clone(),
        steps,
    })
}

pub fn box_joint_plan(eps: &Rational) -> Result<StagePlan> {
    check_eps(eps)?;
    let steps = vec![step(
        StepScheme::BoxJoint {
            eta: RadAngle::pi_frac(1, 8),
        },
        2,
        1,
        eps.clone(),
    )];
    Ok(StagePlan {
        label: "box-joint".into(),
        eps: eps.clone(),
        steps,
    })
}

/// Two orthogonal sign determinations after a π/4 pre-rotation, then one
/// more sign step; the pair counts once against the budget since only one
/// of its two answers matters.
pub fn triple_sign_plan(eps: &Rational) -> Result<StagePlan> {
    check_eps(eps)?;
    let half = frac(eps, 1, 2);
    let alpha = RadAngle::pi_frac(1, 4);
    let steps = vec![
        step(StepScheme::Sign { alpha: alpha.clone() }, 2, 1, half.clone()),
        step(StepScheme::Sign { alpha }, 1, 1, half),
    ];
    Ok(StagePlan {
        label: "triple-sign".into(),
        eps: eps.clone(),
        steps,
    })
}

pub fn majority_sign_plan(eps: &Rational) -> Result<StagePlan> {
    check_eps(eps)?;
    let half = frac(eps, 1, 2);
    let steps = vec![
        step(StepScheme::MajorityBound, 2, 1, half.clone()),
        step(
            StepScheme::Sign {
                alpha: RadAngle::pi_frac(1, 4),
            },
            1,
            1,
            half,
        ),
    ];
    Ok(StagePlan {
        label: "majority+sign".into(),
        eps: eps.clone(),
        steps,
    })
}

/// Sizes every step of a plan.
pub fn evaluate(plan: &StagePlan, cache: &CurveCache, ctx: PrecisionContext) -> Result<PipelineResult> {
    let mut steps = Vec::with_capacity(plan.steps.len());
    let mut flags = Vec::new();
    let mut total = 0u64;
    for s in &plan.steps {
        let (count, margin, unstable) = match &s.scheme {
            StepScheme::MajorityBound => (majority_bound_n(&s.budget)?, None, Vec::new()),
            scheme => {
                let r = cache.min_n(scheme, &s.budget, ctx)?;
                (r.n, Some(r.decision.margin), r.unstable)
            }
        };
        if let Some(m) = margin {
            if m.abs() < BORDERLINE_MARGIN {
                flags.push(format!("{}: margin {m:.3e} below {BORDERLINE_MARGIN:e}", s.scheme));
            }
        }
        if !unstable.is_empty() {
            flags.push(format!("{}: budget exceeded again at n = {unstable:?}", s.scheme));
        }
        total += count as u64 * s.multiplicity as u64;
        steps.push(StepCount {
            scheme: s.scheme.clone(),
            multiplicity: s.multiplicity,
            budget: s.budget.clone(),
            count,
            margin,
            unstable,
        });
    }
    Ok(PipelineResult {
        label: plan.label.clone(),
        total,
        steps,
        flags,
    })
}

/// `3 · sign_min_n(π/4, ε/2)`.
pub fn triple_sign_total(eps: &Rational, cache: &CurveCache, ctx: PrecisionContext) -> Result<PipelineResult> {
    evaluate(&triple_sign_plan(eps)?, cache, ctx)
}

/// `2 · ⌈log₂(4/ε)⌉ + sign_min_n(π/4, ε/2)`.
pub fn majority_sign_total(eps: &Rational, cache: &CurveCache, ctx: PrecisionContext) -> Result<PipelineResult> {
    evaluate(&majority_sign_plan(eps)?, cache, ctx)
}

pub fn box_pipeline_total(
    stages: u8,
    ref_mode: RefMode,
    eps: &Rational,
    policy: SplitPolicy,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<PipelineResult> {
    evaluate(&box_plan(stages, ref_mode, eps, policy)?, cache, ctx)
}

pub fn box_joint_pipeline_total(eps: &Rational, cache: &CurveCache, ctx: PrecisionContext) -> Result<PipelineResult> {
    evaluate(&box_joint_plan(eps)?, cache, ctx)
}

pub fn wedge_pipeline_total(
    stages: u8,
    ref_mode: RefMode,
    eps: &Rational,
    convention: WedgeConvention,
    cache: &CurveCache,
    ctx: PrecisionContext,
) -> Result<PipelineResult> {
    evaluate(&wedge_plan(stages, ref_mode, eps, convention)?, cache, ctx)
}

/// `⌊9 + c·log₂(1/ε)⌋`.
fn log_bound(eps: &Rational, c: u32, ctx: PrecisionContext) -> Result<u64> {
    check_eps(eps)?;
    let v = ctx.from_rational(eps).recip().log2() * c + 9u32;
    Ok(Float::with_val(ctx.bits(), v.floor_ref())
        .to_integer()
        .and_then(|i| i.to_u64())
        .expect("finite"))
}

/// `⌊9 + 6 log₂(1/ε)⌋`, the closed-form count of the triple-sign pipeline.
pub fn triple_sign_bound(eps: &Rational, ctx: PrecisionContext) -> Result<u64> {
    log_bound(eps, 6, ctx)
}

/// `⌊9 + 4 log₂(1/ε)⌋`, the closed-form count of majority plus sign.
pub fn majority_sign_bound(eps: &Rational, ctx: PrecisionContext) -> Result<u64> {
    log_bound(eps, 4, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ten_pow_neg;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn sign_stage_angles_per_mode() {
        let a = |s, m| sign_stage_angles(s, m).unwrap();
        assert_eq!(a(2, RefMode::Exact), vec![RadAngle::pi_frac(1, 8)]);
        assert_eq!(a(2, RefMode::TwoBit), vec![RadAngle::pi_frac(1, 4)]);
        assert_eq!(a(2, RefMode::ThreeBit), vec![RadAngle::pi_frac(3, 16)]);
        assert_eq!(
            a(3, RefMode::Exact),
            vec![RadAngle::pi_frac(1, 4), RadAngle::pi_frac(1, 8)]
        );
        assert_eq!(
            a(3, RefMode::TwoBit),
            vec![RadAngle::pi_frac(3, 8), RadAngle::pi_frac(3, 16)]
        );
        assert_eq!(
            a(3, RefMode::ThreeBit),
            vec![RadAngle::pi_frac(5, 16), RadAngle::pi_frac(5, 32)]
        );
        assert!(sign_stage_angles(4, RefMode::Exact).is_err());
    }

    #[test]
    fn plans_charge_at_most_eps() {
        let eps = ten_pow_neg(3);
        for stages in 1..=3 {
            for mode in [RefMode::TwoBit, RefMode::ThreeBit, RefMode::Exact] {
                for policy in [SplitPolicy::Equal, SplitPolicy::PerStage] {
                    assert!(box_plan(stages, mode, &eps, policy).unwrap().charged() <= eps);
                }
                for conv in [WedgeConvention::Joint, WedgeConvention::PerComponent] {
                    assert!(wedge_plan(stages, mode, &eps, conv).unwrap().charged() <= eps);
                }
            }
        }
        assert_eq!(triple_sign_plan(&eps).unwrap().charged(), eps);
        assert_eq!(majority_sign_plan(&eps).unwrap().charged(), eps);
    }

    #[test]
    fn small_totals() {
        let cache = CurveCache::new();
        let e1 = ten_pow_neg(1);
        assert_eq!(triple_sign_total(&e1, &cache, ctx()).unwrap().total, 15);
        assert_eq!(majority_sign_total(&e1, &cache, ctx()).unwrap().total, 17);
        assert_eq!(triple_sign_bound(&e1, ctx()).unwrap(), 28);
        assert_eq!(majority_sign_bound(&e1, ctx()).unwrap(), 22);
        let r = box_pipeline_total(2, RefMode::Exact, &e1, SplitPolicy::Equal, &cache, ctx()).unwrap();
        assert_eq!(r.total, 43);
        assert_eq!(r.steps.iter().map(|s| s.count).collect::<Vec<_>>(), vec![20, 3]);
        let r = wedge_pipeline_total(2, RefMode::Exact, &e1, WedgeConvention::Joint, &cache, ctx()).unwrap();
        assert_eq!(r.total, 15);
        let r = box_pipeline_total(2, RefMode::Exact, &e1, SplitPolicy::PerStage, &cache, ctx()).unwrap();
        assert_eq!(r.steps[0].count, 22);
    }
}
