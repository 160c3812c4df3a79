use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use rand::Rng;
use resetsim::circuit::{brickwork_step, run_trajectory};
use resetsim::{negativity, sample_clifford2, BitMatrix, CircuitConfig, Cut, RandomSource, StabilizerState};

/// State after `4L` brickwork steps at the given reset strength.
fn evolved(sites: usize, p: f64) -> StabilizerState {
    let mut state = StabilizerState::zero(sites);
    let mut rng = RandomSource::new(1, 0);
    for _ in 0..4 * sites {
        brickwork_step(&mut state, sites, p / sites as f64, &mut rng).unwrap();
    }
    state
}

fn gf2_rank(c: &mut Criterion) {
    let mut group = c.benchmark_group("gf2_rank");
    for n in [64, 128, 256] {
        let mut rng = RandomSource::from_seed(n as u64);
        let rows: Vec<Vec<bool>> = (0..n).map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect()).collect();
        let m = BitMatrix::from_rows(&rows);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| m.rank()));
    }
    group.finish();
}

fn gate_sampling(c: &mut Criterion) {
    let mut rng = RandomSource::from_seed(3);
    c.bench_function("sample_clifford2", |b| b.iter(|| sample_clifford2(&mut rng)));
}

fn time_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("brickwork_step");
    for sites in [16, 32, 64] {
        let state = evolved(sites, 0.25);
        group.bench_with_input(BenchmarkId::from_parameter(sites), &state, |b, state| {
            let mut rng = RandomSource::from_seed(5);
            b.iter_batched(
                || state.clone(),
                |mut s| brickwork_step(&mut s, sites, 0.25 / sites as f64, &mut rng).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn reset(c: &mut Criterion) {
    let state = evolved(64, 0.25);
    c.bench_function("reset_l64", |b| {
        let mut site = 0;
        b.iter_batched(
            || state.clone(),
            |mut s| {
                site = (site + 7) % 64;
                s.reset(site).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn observables(c: &mut Criterion) {
    let mut group = c.benchmark_group("negativity");
    for sites in [16, 32, 64] {
        let state = evolved(sites, 0.1);
        let cut = Cut::half_chain(sites).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(sites), &state, |b, s| b.iter(|| negativity(s, &cut).unwrap()));
    }
    group.finish();
}

fn trajectory(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory_t4l");
    group.sample_size(10);
    for sites in [16, 32] {
        let cfg = CircuitConfig::new(sites, 4 * sites, 0.25, 11);
        group.bench_with_input(BenchmarkId::from_parameter(sites), &cfg, |b, cfg| b.iter(|| run_trajectory(cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, gf2_rank, gate_sampling, time_step, reset, observables, trajectory);
criterion_main!(benches);
