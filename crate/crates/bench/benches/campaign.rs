use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use plsb_core::distributions::Tail;
use plsb_core::simulator::{run_campaign, synthetic_pool, CampaignSpec, Strategy};

fn campaign(c: &mut Criterion) {
    let tail = Tail::Pareto { scale: 100.0, shape: 1.5 };
    let pool = synthetic_pool(2024, 500, 0.3, &tail).unwrap();
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    for workers in [1, 4] {
        let spec = CampaignSpec {
            trials: 100,
            workers: Some(workers),
            strategies: Strategy::defaults(),
            ..CampaignSpec::new(pool.clone(), vec![1000.0, 3000.0, 6000.0], 42)
        };
        group.bench_function(format!("100_trials/workers_{workers}"), |b| {
            b.iter(|| run_campaign(black_box(&spec)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
