use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rug::Rational;

use qpe_core::numerics::PrecisionContext;
use qpe_core::pipelines::CurveCache;
use qpe_core::planner::FirstStage;
use qpe_core::simulator::{run_trials, PhaseSource, SimPlan};
use qpe_core::tables::table1;
use qpe_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sign_table(c: &mut Criterion) {
    let mut g = c.benchmark_group("table1");
    g.sample_size(10);
    for (name, exec) in MODES {
        // fresh cache per iteration so every cell is recomputed
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| table1(&CurveCache::new(), PrecisionContext::default(), exec).unwrap())
        });
    }
    g.finish();
}

fn trials(c: &mut Criterion) {
    let ctx = PrecisionContext::default();
    let plan = SimPlan::improved(
        10,
        &Rational::from((1, 100)),
        FirstStage::TripleSign,
        None,
        &CurveCache::new(),
        ctx,
    )
    .unwrap();
    let mut g = c.benchmark_group("trials");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_trials(&plan, 2000, 7, &PhaseSource::Uniform, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sign_table, trials);
criterion_main!(benches);
