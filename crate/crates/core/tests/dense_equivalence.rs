use rand::Rng;
use resetsim::circuit::run_trajectory_stream;
use resetsim::oracle::{cosimulate, dense_reset, dense_stabilizer_state, CoSimCase, DenseState, Layout};
use resetsim::{log_purity, sample_clifford2, CircuitConfig, Cut, RandomSource, StabilizerState};

const TOL: f64 = 1e-9;

/// A random mixed state reached by gates and resets from `|0…0⟩`.
fn random_state(sites: usize, rng: &mut RandomSource) -> StabilizerState {
    let mut s = StabilizerState::zero(sites);
    for _ in 0..rng.random_range(0..6 * sites) {
        if sites >= 2 && rng.random_bool(0.6) {
            let a = rng.random_range(0..sites);
            let b = (a + rng.random_range(1..sites)) % sites;
            s.apply_gate(&sample_clifford2(rng), a, b).unwrap();
        } else if rng.random_bool(0.5) {
            s.reset(rng.random_range(0..sites)).unwrap();
        } else {
            // drop a generator to reach higher-entropy states
            let gens = s.generators();
            if !gens.is_empty() {
                let skip = rng.random_range(0..gens.len());
                let kept = gens.into_iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, g)| g).collect();
                s = StabilizerState::from_generators(sites, kept).unwrap();
            }
        }
    }
    s
}

#[test]
fn reset_channel_matches_partial_trace() {
    let mut rng = RandomSource::new(2024, 0);
    for _ in 0..1000 {
        let sites = rng.random_range(1..=6);
        let mut s = random_state(sites, &mut rng);
        let site = rng.random_range(0..sites);
        let before = dense_stabilizer_state(&s).unwrap();
        s.reset(site).unwrap();
        s.check_invariants().unwrap();
        let want = dense_reset(&before, site).unwrap();
        let got = dense_stabilizer_state(&s).unwrap();
        assert!(got.max_abs_diff(&want) <= TOL, "L={sites} site={site}\n{s}");
    }
}

#[test]
fn five_qubit_reset_on_every_site() {
    let mut rng = RandomSource::new(5, 5);
    for _ in 0..40 {
        let start = random_state(5, &mut rng);
        for site in 0..5 {
            let mut s = start.clone();
            s.reset(site).unwrap();
            let want = dense_reset(&dense_stabilizer_state(&start).unwrap(), site).unwrap();
            assert!(dense_stabilizer_state(&s).unwrap().max_abs_diff(&want) <= TOL);
            want.check_invariants().unwrap();
        }
    }
}

#[test]
fn shared_stream_cosimulation() {
    for stream in 0..50 {
        let out = cosimulate(&CoSimCase::new(4, 8, 0.5, 77, stream).unwrap()).unwrap();
        assert!(out.matches(TOL), "{out:?}");
    }
}

#[test]
fn random_circuits_agree_with_dense_engine() {
    for sites in 2..=6 {
        for p in [0.1, 0.25, 0.5] {
            for stream in 0..40 {
                let case = CoSimCase::new(sites, 4 * sites, p, 31, stream).unwrap();
                let out = cosimulate(&case).unwrap();
                assert!(out.matches(TOL), "L={sites} p={p} stream={stream}: {out:?}");
            }
        }
    }
}

#[test]
fn random_pair_layout_and_other_cuts() {
    for stream in 0..30 {
        let mut case = CoSimCase::new(6, 12, 1.5, 3, stream).unwrap();
        case.layout = Layout::RandomPairs;
        case.cut = Cut::new(6, [0, 2, 5]).unwrap();
        assert!(cosimulate(&case).unwrap().matches(TOL));
    }
}

#[test]
fn trajectory_driver_matches_dense_replay() {
    // the public driver and the cosimulation harness consume the same stream
    for stream in 0..10 {
        let cfg = CircuitConfig::new(6, 24, 0.5, 12);
        let rec = run_trajectory_stream(&cfg, stream).unwrap();
        let out = cosimulate(&CoSimCase::new(6, 24, 0.5, 12, stream).unwrap()).unwrap();
        let last = rec.last().unwrap();
        assert_eq!((last.sp as usize, last.en as usize), (out.stabilizer_sp, out.stabilizer_en));
    }
}

#[test]
fn dense_limits() {
    let mut dense = DenseState::maximally_mixed(3).unwrap();
    for site in 0..3 {
        dense = dense_reset(&dense, site).unwrap();
    }
    assert!(dense.max_abs_diff(&DenseState::zero(3).unwrap()) <= TOL);
    assert_eq!(log_purity(&StabilizerState::maximally_mixed(3)), 3);
}
