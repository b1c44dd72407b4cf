use proptest::prelude::*;
use rug::{Float, Rational};

use qpe_core::curves::{box_curve, discontinuities};
use qpe_core::numerics::{
    binom_tail_leq, success_prob_1d, success_prob_2d, PrecisionContext, RadAngle, SuccessSet1D, SuccessSet2D, Turn,
};
use qpe_core::pipelines::{box_plan, wedge_plan, RefMode, SplitPolicy, WedgeConvention};
use qpe_core::planner::{single_shot_tail, BudgetPolicy};
use qpe_core::schemes::box_scheme::{box_joint_error_at_f64, box_success_set_side};
use qpe_core::schemes::majority::majority_error_f64;
use qpe_core::schemes::sign::sign_error_f64;
use qpe_core::schemes::wedge::wedge_error_at_f64;
use qpe_core::schemes::{
    box_breakpoints, box_success_set, delta_of_eta, majority_quantize, Delta, MajoritySet, Side, WedgeGeometry,
};
use qpe_core::simulator::{circular_error, clopper_pearson, run_trial, PhaseSource, SimPlan};
use qpe_core::Exec;

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn set_and_complement_sum_to_one(n in 1u32..40, bits in any::<u64>(), p in 0.0f64..=1.0) {
        let set = SuccessSet1D::new(n, (0..=n).filter(|k| bits >> (k % 64) & 1 == 1)).unwrap();
        let c = ctx();
        let total = success_prob_1d(&set, &c.from_f64(p)) + success_prob_1d(&set.complement(), &c.from_f64(p));
        let err = Float::with_val(c.bits(), total - 1u32).abs().to_f64();
        prop_assert!(err < 1e-60);
    }

    #[test]
    fn product_set_factorizes(n in 1u32..12, lo in 0u32..12, len in 0u32..12, px in 0.0f64..=1.0, py in 0.0f64..=1.0) {
        let (lo, hi) = (lo.min(n), (lo + len).min(n));
        let c = ctx();
        let s1 = SuccessSet1D::interval(n, lo as i64, hi as i64);
        let s2 = SuccessSet2D::from_predicate(n, |i, j| s1.contains(i) && s1.contains(j));
        let joint = success_prob_2d(&s2, &c.from_f64(px), &c.from_f64(py));
        let prod = success_prob_1d(&s1, &c.from_f64(px)) * success_prob_1d(&s1, &c.from_f64(py));
        prop_assert!(Float::with_val(c.bits(), joint - prod).abs().to_f64() < 1e-60);
    }

    #[test]
    fn box_set_matches_inequalities(n in 1u32..60, dn in 1u32..200, pn in 0u32..=1000) {
        let c = ctx();
        let delta = Rational::from((dn, 100));
        let p = Rational::from((pn, 1000));
        let set = box_success_set(n, &c.from_rational(&delta), &c.from_rational(&p));
        for k in 0..=n {
            let lo = (&p - Rational::from(&delta / 2u32)) * n;
            let hi = (&p + Rational::from(&delta / 2u32)) * n;
            let inside = lo <= k && k <= hi;
            prop_assert_eq!(set.contains(k), inside, "k = {}", k);
        }
    }

    #[test]
    fn breakpoint_crossings_change_one_member(n in 2u32..40, d in 0.05f64..1.5) {
        let c = ctx();
        // a delta with no coincident breakpoints
        let d = c.from_f64(d) + c.pi() / 1_000_003u32;
        for bp in box_breakpoints(n, &d) {
            if bp <= 0u32 || bp >= 1u32 {
                continue;
            }
            let left = box_success_set_side(n, &d, &bp, Side::Left);
            let right = box_success_set_side(n, &d, &bp, Side::Right);
            let diff = (0..=n).filter(|&k| left.contains(k) != right.contains(k)).count();
            prop_assert_eq!(diff, 1);
        }
    }

    #[test]
    fn sign_error_below_power_of_sine(j in 1i64..32, half in 0u32..60) {
        let n = 2 * half + 1;
        let alpha = RadAngle::pi_frac(j, 64).to_f64();
        prop_assert!(sign_error_f64(n, alpha) <= alpha.sin().powi(n as i32) * (1.0 + 1e-12));
    }

    #[test]
    fn majority_full_below_reduced_below_bound(n in 1u32..26, a in 0.0f64..std::f64::consts::FRAC_PI_2) {
        let full = majority_error_f64(n, a, MajoritySet::Full);
        let reduced = majority_error_f64(n, a, MajoritySet::Reduced);
        prop_assert!(full <= reduced + 1e-15);
        prop_assert!(reduced <= 2f64.powi(1 - n as i32) + 1e-15);
    }

    #[test]
    fn wedge_contains_joint_box(n in 1u32..30, k in 0usize..3, a in 0.0f64..std::f64::consts::TAU) {
        let eta = [RadAngle::pi_frac(1, 8), RadAngle::pi_frac(1, 4), RadAngle::pi_frac(1, 2)][k].clone();
        let d = delta_of_eta(&eta, ctx()).unwrap().to_f64();
        let geom = WedgeGeometry::new(n, eta).unwrap();
        let wedge = wedge_error_at_f64(&geom, a, Side::Point);
        let joint = box_joint_error_at_f64(n, d, a.rem_euclid(std::f64::consts::FRAC_PI_2), Side::Point);
        let wedge_q = wedge_error_at_f64(&geom, a.rem_euclid(std::f64::consts::FRAC_PI_2), Side::Point);
        prop_assert!(wedge_q <= joint + 1e-12, "wedge {} joint {}", wedge_q, joint);
        prop_assert!((0.0..=1.0).contains(&wedge));
    }

    #[test]
    fn quantization_labels_every_count(n in 1u32..30, nx in 0u32..30, ny in 0u32..30) {
        let (nx, ny) = (nx.min(n), ny.min(n));
        prop_assert!(majority_quantize(nx, ny, n).is_ok());
    }

    #[test]
    fn tail_is_monotone_in_k(n in 1u32..80, p in 0.01f64..0.99) {
        let c = ctx();
        let p = c.from_f64(p);
        let tails: Vec<Float> = (0..=n).map(|k| binom_tail_leq(n, k, &p).unwrap()).collect();
        prop_assert!(tails.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(Float::with_val(c.bits(), &tails[n as usize] - 1u32).abs().to_f64() < 1e-60);
    }

    #[test]
    fn circular_error_is_a_metric(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let (a, b, c) = (Turn::new(a), Turn::new(b), Turn::new(c));
        let ab = circular_error(a, b);
        prop_assert!((0.0..=0.5).contains(&ab));
        prop_assert!((ab - circular_error(b, a)).abs() < 1e-15);
        prop_assert!(ab <= circular_error(a, c) + circular_error(c, b) + 1e-12);
    }

    #[test]
    fn angle_display_round_trips(num in -64i64..64, den in 1i64..64) {
        let a = RadAngle::pi_frac(num, den);
        let back: RadAngle = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn plans_never_overspend(t in 1u32..10, mant in 1u32..10, stages in 1u8..=3) {
        let eps = Rational::from((mant, 10u32.pow(t)));
        for mode in [RefMode::TwoBit, RefMode::ThreeBit, RefMode::Exact] {
            for policy in [SplitPolicy::Equal, SplitPolicy::PerStage] {
                prop_assert!(box_plan(stages, mode, &eps, policy).unwrap().charged() <= eps);
            }
            for conv in [WedgeConvention::Joint, WedgeConvention::PerComponent] {
                prop_assert!(wedge_plan(stages, mode, &eps, conv).unwrap().charged() <= eps);
            }
        }
    }

    #[test]
    fn single_shot_tail_below_bound(k in 2u32..30, extra in 0u32..30) {
        let (exact, bound) = single_shot_tail(k, k + extra, ctx()).unwrap();
        prop_assert!(exact <= bound);
    }

    #[test]
    fn clopper_pearson_brackets_rate(n in 1u64..500, x in 0u64..500) {
        let x = x.min(n);
        let (lo, hi) = clopper_pearson(x, n, 0.99);
        let rate = x as f64 / n as f64;
        prop_assert!(lo <= rate + 1e-12 && rate <= hi + 1e-12);
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let cache = qpe_core::pipelines::CurveCache::new();
    let eps = Rational::from((1, 100));
    let plan = SimPlan::improved(
        7,
        &eps,
        qpe_core::planner::FirstStage::Majority,
        Some(&BudgetPolicy::Table3),
        &cache,
        ctx(),
    )
    .unwrap();
    let seq: Vec<_> = (0..32)
        .map(|i| run_trial(&plan, 5, i, &PhaseSource::Uniform).unwrap())
        .collect();
    let par = qpe_core::simulator::run_trials(&plan, 32, 5, &PhaseSource::Uniform, Exec::Parallel).unwrap();
    assert_eq!(seq, par);
    let a = qpe_core::tables::table1(&cache, ctx(), Exec::Sequential).unwrap();
    let b = qpe_core::tables::table1(&qpe_core::pipelines::CurveCache::new(), ctx(), Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn box_curve_has_one_jump_per_interior_breakpoint() {
    let delta = Delta::Value(Rational::from((3, 10)));
    let pts = box_curve(8, &delta, 101, ctx()).unwrap();
    assert_eq!(discontinuities(&pts, 1e-15), 14);
}
