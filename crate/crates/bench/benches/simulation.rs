use criterion::{black_box, criterion_group, criterion_main, Criterion};

use lmac_bench::bench_scenario;
use lmac_core::config::Protocol;
use lmac_core::engine::run;
use lmac_core::geometry::BlockGrid;
use lmac_core::schedule::{verify_schedule, SlotSchedule};

fn protocol_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_30s_50n");
    group.sample_size(10);
    for protocol in [Protocol::Lmac, Protocol::Csma, Protocol::DutyCycle] {
        let cfg = bench_scenario(protocol, 50, 30.0);
        group.bench_function(protocol.name(), |b| {
            b.iter(|| run(black_box(&cfg)).unwrap().report.delivered)
        });
    }
    group.finish();
}

fn schedule_verifier(c: &mut Criterion) {
    let grid = BlockGrid::covering(3000.0, 3000.0, 250.0).unwrap();
    let sched = SlotSchedule::build(&grid, 0.05);
    c.bench_function("verify_schedule_12x12", |b| {
        b.iter(|| verify_schedule(black_box(&grid), black_box(&sched), 250.0).len())
    });
}

fn routing_setup(c: &mut Criterion) {
    use lmac_core::geometry::{Connectivity, Position};
    use lmac_core::lmac::routing::RoutingTable;
    // Deterministic pseudo-random 200-node deployment.
    let mut s: u64 = 0x2545F4914F6CDD1D;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let nodes: Vec<Position> = (0..200).map(|_| Position::new(next() * 800.0, next() * 800.0)).collect();
    c.bench_function("routes_200_nodes", |b| {
        b.iter(|| {
            let conn = Connectivity::build(black_box(&nodes), 250.0);
            RoutingTable::compute(&conn).n_nodes()
        })
    });
}

criterion_group!(benches, protocol_runs, schedule_verifier, routing_setup);
criterion_main!(benches);
