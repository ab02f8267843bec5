use bidguard_bench::instance;
use bidguard_core::defenses::{
    BidLimitParams, BidModelingParams, ClusteringParams, CyclePreventionParams, GeoChoice, GeoDiversityParams,
    PlraParams, RandomDisplayParams,
};
use bidguard_core::{run_defense, DefensePolicy, SimilarityConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn policies() -> Vec<DefensePolicy> {
    vec![
        DefensePolicy::Standard,
        DefensePolicy::BidLimit(BidLimitParams {
            min_positive_bids: 2,
            max_negative_bids: None,
            violation_policy: Default::default(),
        }),
        DefensePolicy::RandomDisplay(RandomDisplayParams {
            display_fraction: 0.5,
            hard_constraint: true,
        }),
        DefensePolicy::CyclePrevention(CyclePreventionParams { cycle_length: 2 }),
        DefensePolicy::CyclePrevention(CyclePreventionParams { cycle_length: 3 }),
        DefensePolicy::GeoDiversity(GeoDiversityParams { variant: GeoChoice::A }),
        DefensePolicy::GeoDiversity(GeoDiversityParams { variant: GeoChoice::B }),
        DefensePolicy::BidModeling(BidModelingParams { ridge_lambda: 1.0 }),
        DefensePolicy::ReviewerClustering(ClusteringParams { group_size: 2 }),
        DefensePolicy::Plra(PlraParams { q: 0.5 }),
    ]
}

fn defenses(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_defense_40x40");
    group.sample_size(10);
    let (inst, bids) = instance(40, 40, 2, 4, 3);
    let cfg = SimilarityConfig::default();
    for policy in policies() {
        group.bench_function(policy.label(), |b| {
            b.iter(|| run_defense(black_box(&policy), &inst, &bids, &cfg, 7).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, defenses);
criterion_main!(benches);
