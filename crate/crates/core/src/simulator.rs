//! Seeded Monte-Carlo simulation of the measurement statistics and of the
//! classic and phase-shifted estimation algorithms.
//!
//! The oracle works in `f64`: phases are resolved to about `1e-16` turns,
//! far below the granularity any statistical check here depends on.

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{domain, Result};
use crate::exec::Exec;
use crate::numerics::{chernoff_sample_bound, PrecisionContext, Turn};
use crate::pipelines::CurveCache;
use crate::planner::{schedule_with, BudgetPolicy, FirstStage, PlanRow};
use crate::schemes::{angle_from_counts, majority_quantize};

/// Version of the JSONL transcript layout.
pub const TRANSCRIPT_SCHEMA: u32 = 1;

/// Confidence level of [`TrialStats`] bounds.
pub const CONFIDENCE: f64 = 0.99;

/// Probability that the circuit for `U^(2^(j−1))` with phase shift `theta`
/// returns 1.
pub fn outcome_probability(phi: Turn, j: u32, theta: Turn) -> f64 {
    let t = Turn::new(phi.value() * 2f64.powi(j as i32 - 1)) + theta;
    (1.0 + (TAU * t.value()).cos()) / 2.0
}

/// A source of measurement outcomes for a hidden phase.
pub trait Measure {
    /// Number of ones among `n` measurements at power `2^(j−1)` after a phase
    /// shift of `theta`.
    fn measure(&mut self, j: u32, theta: Turn, n: u32) -> u32;
    fn consumed(&self) -> u64;
    fn phase(&self) -> Turn;
}

/// Random outcomes from a ChaCha stream.
pub struct Oracle {
    phi: Turn,
    rng: ChaCha8Rng,
    consumed: u64,
}

impl Oracle {
    pub fn new(phi: Turn, rng: ChaCha8Rng) -> Self {
        Oracle { phi, rng, consumed: 0 }
    }

    /// Stream `trial` of generator `seed`.
    pub fn stream(seed: u64, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        rng
    }
}

impl Measure for Oracle {
    fn measure(&mut self, j: u32, theta: Turn, n: u32) -> u32 {
        let p = outcome_probability(self.phi, j, theta);
        let mut ones = 0;
        for _ in 0..n {
            let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u < p {
                ones += 1;
            }
        }
        self.consumed += n as u64;
        ones
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn phase(&self) -> Turn {
        self.phi
    }
}

/// Noiseless source returning the rounded expected count.
pub struct ExpectedCounts {
    phi: Turn,
    consumed: u64,
}

impl ExpectedCounts {
    pub fn new(phi: Turn) -> Self {
        ExpectedCounts { phi, consumed: 0 }
    }
}

impl Measure for ExpectedCounts {
    fn measure(&mut self, j: u32, theta: Turn, n: u32) -> u32 {
        self.consumed += n as u64;
        (outcome_probability(self.phi, j, theta) * n as f64).round() as u32
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn phase(&self) -> Turn {
        self.phi
    }
}

/// Distance on the circle, in `[0, 1/2]`.
pub fn circular_error(a: Turn, b: Turn) -> f64 {
    let d = (a - b).value();
    d.min(1.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Classic,
    Improved(FirstStage),
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Classic => f.write_str("classic"),
            Algorithm::Improved(s) => write!(f, "improved/{s}"),
        }
    }
}

/// Everything a run needs besides the phase and the random stream.
#[derive(Clone, Debug)]
pub enum SimPlan {
    /// Per-stage counts for `j = 1..=m`, spent on each of the two components.
    Classic {
        m: u32,
        eps: Rational,
        counts: Vec<u32>,
    },
    Improved {
        plan: PlanRow,
    },
}

impl SimPlan {
    pub fn classic(m: u32, eps: &Rational, ctx: PrecisionContext) -> Result<Self> {
        Ok(SimPlan::Classic {
            m,
            eps: eps.clone(),
            counts: classic_counts(m, eps, ctx)?,
        })
    }

    /// Schedule of the phase-shifted algorithm; `policy` defaults to the
    /// per-`m` policy of the first stage.
    pub fn improved(
        m: u32,
        eps: &Rational,
        first: FirstStage,
        policy: Option<&BudgetPolicy>,
        cache: &CurveCache,
        ctx: PrecisionContext,
    ) -> Result<Self> {
        let default = BudgetPolicy::table4(first);
        let plan = schedule_with(eps, m, first, policy.unwrap_or(&default), cache, ctx)?;
        Ok(SimPlan::Improved { plan })
    }

    pub fn m(&self) -> u32 {
        match self {
            SimPlan::Classic { m, .. } => *m,
            SimPlan::Improved { plan } => plan.m,
        }
    }

    pub fn eps(&self) -> &Rational {
        match self {
            SimPlan::Classic { eps, .. } => eps,
            SimPlan::Improved { plan } => &plan.eps,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            SimPlan::Classic { .. } => Algorithm::Classic,
            SimPlan::Improved { plan } => Algorithm::Improved(plan.first_stage),
        }
    }

    /// Measurements a run of this plan consumes.
    pub fn predicted_samples(&self) -> u64 {
        match self {
            SimPlan::Classic { counts, .. } => counts.iter().map(|&n| 2 * n as u64).sum(),
            SimPlan::Improved { plan } => plan.total,
        }
    }
}

/// Per-stage counts of the classic algorithm: every stage estimates sine and
/// cosine to `δ = 1/8` with failure budget `ε/(2m)` each.
pub fn classic_counts(m: u32, eps: &Rational, ctx: PrecisionContext) -> Result<Vec<u32>> {
    if m == 0 {
        return domain("m must be positive");
    }
    if *eps <= 0 || *eps >= 1 {
        return domain("epsilon must lie in (0, 1)");
    }
    let per = Rational::from(eps / (2 * m));
    let n = chernoff_sample_bound(&ctx.ratio(1, 8), &ctx.from_rational(&per))?.n;
    let n = u32::try_from(n.max(1)).map_err(|_| crate::Error::Domain("sample count overflows".into()))?;
    Ok(vec![n; m as usize])
}

/// One call to the measurement source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub iteration: u32,
    pub j: u32,
    /// Phase shift in turns.
    pub theta: f64,
    pub n: u32,
    pub ones: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transcript {
    pub schema: u32,
    pub seed: u64,
    pub trial: u64,
    pub algorithm: Algorithm,
    pub m: u32,
    pub eps: String,
    pub phi: f64,
    pub records: Vec<MeasurementRecord>,
    /// `β′₁ … β′_{m+2}`.
    pub bits: String,
    pub estimate: f64,
    pub error: f64,
    pub success: bool,
    pub samples: u64,
    pub flags: Vec<String>,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }
}

struct Recorder<'a, M: Measure> {
    src: &'a mut M,
    records: Vec<MeasurementRecord>,
}

impl<M: Measure> Recorder<'_, M> {
    fn measure(&mut self, iteration: u32, j: u32, theta: Turn, n: u32) -> u32 {
        let ones = self.src.measure(j, theta, n);
        self.records.push(MeasurementRecord {
            iteration,
            j,
            theta: theta.value(),
            n,
            ones,
        });
        ones
    }
}

fn bits_value(bits: &[u8]) -> Turn {
    Turn::new(
        bits.iter()
            .enumerate()
            .map(|(i, &b)| b as f64 * 0.5f64.powi(i as i32 + 1))
            .sum(),
    )
}

fn finish<M: Measure>(rec: Recorder<'_, M>, plan: &SimPlan, bits: Vec<u8>, flags: Vec<String>) -> Transcript {
    let m = plan.m();
    let phi = rec.src.phase();
    let estimate = bits_value(&bits);
    let error = circular_error(phi, estimate);
    Transcript {
        schema: TRANSCRIPT_SCHEMA,
        seed: 0,
        trial: 0,
        algorithm: plan.algorithm(),
        m,
        eps: plan.eps().to_string(),
        phi: phi.value(),
        records: rec.records,
        bits: bits.iter().map(|b| char::from(b'0' + b)).collect(),
        estimate: estimate.value(),
        error,
        success: error <= 0.5f64.powi(m as i32 + 2),
        samples: rec.src.consumed(),
        flags,
    }
}

/// Classic two-stage algorithm: quantize `ω_m` to eighths, then fix each
/// earlier bit by consistency with the two bits after it.
pub fn run_classic<M: Measure>(src: &mut M, m: u32, counts: &[u32], eps: &Rational) -> Result<Transcript> {
    if m == 0 || counts.len() != m as usize || counts.contains(&0) {
        return domain("need one positive count per stage");
    }
    let plan = SimPlan::Classic {
        m,
        eps: eps.clone(),
        counts: counts.to_vec(),
    };
    let mut rec = Recorder {
        src,
        records: Vec::new(),
    };
    let mut bits = vec![0u8; m as usize + 2];
    let mut flags = Vec::new();
    for j in (1..=m).rev() {
        let n = counts[j as usize - 1];
        let it = m + 1 - j;
        let nx = rec.measure(it, j, Turn::new(0.0), n);
        let ny = rec.measure(it, j, Turn::new(-0.25), n);
        let (w, degenerate) = angle_from_counts(nx, ny, n)?;
        if degenerate {
            flags.push(format!("j={j}: counts give no direction"));
        }
        let i = j as usize - 1;
        if j == m {
            let q = ((w.value() * 8.0).round() as u32) % 8;
            bits[i] = (q >> 2) as u8;
            bits[i + 1] = ((q >> 1) & 1) as u8;
            bits[i + 2] = (q & 1) as u8;
        } else {
            let cand = Turn::new(bits[i + 1] as f64 / 4.0 + bits[i + 2] as f64 / 8.0);
            let d = circular_error(cand, w);
            bits[i] = u8::from(d > 0.25);
            if d == 0.25 {
                flags.push(format!("j={j}: consistency tie resolved to 0"));
            }
        }
    }
    Ok(finish(rec, &plan, bits, flags))
}

fn majority_bit(ones: u32, n: u32) -> u8 {
    u8::from(2 * ones <= n)
}

/// Phase-shifted algorithm following `plan`. Iteration 1 fixes
/// `β′_m β′_{m+1} β′_{m+2}`; iteration `k ≥ 2` fixes `β′_{m+1−k}` from one
/// sign determination after shifting by all bits known so far.
pub fn run_improved<M: Measure>(src: &mut M, plan: &PlanRow) -> Result<Transcript> {
    let m = plan.m;
    let sim = SimPlan::Improved { plan: plan.clone() };
    let first: Vec<_> = plan.iteration(1).collect();
    if first.len() != 2 {
        return domain("first iteration must have a quarter step and a sign step");
    }
    let (n1, n2) = (first[0].count, first[1].count);
    let phi = src.phase();
    let mut rec = Recorder {
        src,
        records: Vec::new(),
    };
    let mut bits = vec![0u8; m as usize + 2];
    let mut flags = Vec::new();

    // Quarter of ω_{m+1}.
    let q = match plan.first_stage {
        FirstStage::TripleSign => {
            let sx = 2 * rec.measure(1, m + 1, Turn::new(0.125), n1) > n1;
            let sy = 2 * rec.measure(1, m + 1, Turn::new(-0.125), n1) > n1;
            match (sx, sy) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            }
        }
        FirstStage::Majority => {
            let nx = rec.measure(1, m + 1, Turn::new(0.0), n1);
            let ny = rec.measure(1, m + 1, Turn::new(-0.25), n1);
            majority_quantize(nx, ny, n1)?.quarter()
        }
    };
    let mi = m as usize;
    bits[mi] = q >> 1;
    bits[mi + 1] = q & 1;

    let mut sign_step = |rec: &mut Recorder<'_, M>, bits: &mut Vec<u8>, k: u32, j: u32, n: u32| {
        let i = j as usize;
        let tail: f64 = bits[i..]
            .iter()
            .enumerate()
            .map(|(t, &b)| b as f64 * 0.5f64.powi(t as i32 + 2))
            .sum();
        // accuracy of the running estimate of ω_{j+1}
        let acc = if k == 1 { 0.25 } else { 0.5f64.powi(k as i32 + 1) };
        let known = Turn::new(2.0 * tail);
        let omega_next = Turn::new(phi.value() * 2f64.powi(j as i32));
        let shifted = Turn::new(phi.value() * 2f64.powi(j as i32 - 1) - tail);
        if circular_error(omega_next, known) < acc {
            let off = circular_error(shifted, Turn::new(0.0)).min(circular_error(shifted, Turn::new(0.5)));
            if off > acc / 2.0 + 1e-12 {
                flags.push(format!("iteration {k}: shifted angle {off} outside {}", acc / 2.0));
            }
        }
        let ones = rec.measure(k, j, Turn::new(-tail), n);
        bits[i - 1] = majority_bit(ones, n);
    };

    sign_step(&mut rec, &mut bits, 1, m, n2);
    for k in 2..=m {
        let n: u32 = plan.iteration(k).map(|e| e.count * e.multiplicity).sum();
        if n == 0 {
            return domain(format!("plan has no measurements for iteration {k}"));
        }
        sign_step(&mut rec, &mut bits, k, m + 1 - k, n);
    }
    Ok(finish(rec, &sim, bits, flags))
}

/// Runs `plan` against any measurement source.
pub fn run<M: Measure>(src: &mut M, plan: &SimPlan) -> Result<Transcript> {
    match plan {
        SimPlan::Classic { m, eps, counts } => run_classic(src, *m, counts, eps),
        SimPlan::Improved { plan } => run_improved(src, plan),
    }
}

/// Where trial phases come from.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseSource {
    /// Uniform on `[0, 1)`, drawn from the trial's own stream.
    Uniform,
    /// Cycled through by trial index.
    Fixed(Vec<Turn>),
}

/// One seeded trial; the phase and all outcomes come from stream `trial`.
pub fn run_trial(plan: &SimPlan, seed: u64, trial: u64, source: &PhaseSource) -> Result<Transcript> {
    let mut rng = Oracle::stream(seed, trial);
    let phi = match source {
        PhaseSource::Uniform => Turn::new(rng.random::<f64>()),
        PhaseSource::Fixed(list) if !list.is_empty() => list[(trial % list.len() as u64) as usize],
        PhaseSource::Fixed(_) => return domain("empty phase list"),
    };
    let mut oracle = Oracle::new(phi, rng);
    let mut t = run(&mut oracle, plan)?;
    t.seed = seed;
    t.trial = trial;
    Ok(t)
}

pub fn run_trials(plan: &SimPlan, trials: u64, seed: u64, source: &PhaseSource, exec: Exec) -> Result<Vec<Transcript>> {
    if trials == 0 {
        return domain("at least one trial is required");
    }
    exec.map_indices(trials as usize, |i| run_trial(plan, seed, i as u64, source))
        .into_iter()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub trials: u64,
    pub successes: u64,
    pub failure_rate: f64,
    /// Two-sided exact (Clopper–Pearson) bounds on the failure rate.
    pub failure_lower: f64,
    pub failure_upper: f64,
    pub confidence: f64,
    pub eps: f64,
    pub m: u32,
    pub threshold: f64,
}

impl TrialStats {
    pub fn from_transcripts(ts: &[Transcript], eps: f64) -> Self {
        let trials = ts.len() as u64;
        let successes = ts.iter().filter(|t| t.success).count() as u64;
        let m = ts.first().map_or(0, |t| t.m);
        let (lo, hi) = clopper_pearson(trials - successes, trials, CONFIDENCE);
        TrialStats {
            trials,
            successes,
            failure_rate: (trials - successes) as f64 / trials.max(1) as f64,
            failure_lower: lo,
            failure_upper: hi,
            confidence: CONFIDENCE,
            eps,
            m,
            threshold: 0.5f64.powi(m as i32 + 2),
        }
    }

    pub fn meets(&self) -> bool {
        self.failure_upper <= self.eps
    }
}

/// Exact two-sided binomial confidence interval for `x` events in `n`.
pub fn clopper_pearson(x: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let a = (1.0 - confidence) / 2.0;
    let (xf, nf) = (x as f64, n as f64);
    let lo = if x == 0 {
        0.0
    } else {
        Beta::new(xf, nf - xf + 1.0).expect("positive shape").inverse_cdf(a)
    };
    let hi = if x == n {
        1.0
    } else {
        Beta::new(xf + 1.0, nf - xf)
            .expect("positive shape")
            .inverse_cdf(1.0 - a)
    };
    (lo, hi)
}

/// Runs `trials` seeded trials and summarizes them.
pub fn success_rate(plan: &SimPlan, trials: u64, seed: u64, source: &PhaseSource, exec: Exec) -> Result<TrialStats> {
    let ts = run_trials(plan, trials, seed, source, exec)?;
    Ok(TrialStats::from_transcripts(&ts, plan.eps().to_f64()))
}

/// Writes one transcript per line.
pub fn write_jsonl<W: Write>(out: &mut W, ts: &[Transcript]) -> Result<()> {
    for t in ts {
        writeln!(out, "{}", t.to_json())?;
    }
    Ok(())
}
