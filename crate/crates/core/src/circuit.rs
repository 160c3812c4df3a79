//! Brickwork trajectories of random two-site Cliffords and reset layers.
//!
//! One time step is: random gates on the even links `(0,1), (2,3), …`, then
//! on the odd links `(1,2), …, (L−1,0)`, then one reset layer in which each
//! site is reset independently with probability `q = p/L`.
//!
//! Random decisions are drawn in a fixed order: one gate per link, left to
//! right within each sublayer, then one coin per site in ascending order.
//! A coin is drawn for every site even when `q` is 0 or 1, so the stream
//! layout does not depend on `p`. Any [`CircuitTarget`] fed the same
//! [`RandomSource`] sees the identical gate/reset sequence.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{sample_clifford2, CliffordGate2};
use crate::error::{Error, Result};
use crate::observables::{log_purity, negativity, Cut, CutPolicy};
use crate::rng::RandomSource;
use crate::stabilizer::StabilizerState;

/// Anything that can absorb the gate/reset stream of a trajectory.
pub trait CircuitTarget {
    fn apply_gate(&mut self, gate: &CliffordGate2, a: usize, b: usize) -> Result<()>;
    fn reset(&mut self, site: usize) -> Result<()>;
    /// Hook called after each gate sublayer and reset layer.
    fn layer_done(&mut self) -> Result<()> {
        Ok(())
    }
}

impl CircuitTarget for StabilizerState {
    fn apply_gate(&mut self, gate: &CliffordGate2, a: usize, b: usize) -> Result<()> {
        StabilizerState::apply_gate(self, gate, a, b)
    }

    fn reset(&mut self, site: usize) -> Result<()> {
        crate::reset::reset_site(self, site).map(|_| ())
    }

    fn layer_done(&mut self) -> Result<()> {
        #[cfg(feature = "strict-invariants")]
        self.check_invariants()?;
        Ok(())
    }
}

/// Which steps of a trajectory get observables recorded.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordSchedule {
    #[default]
    FinalOnly,
    EveryStep,
    /// Explicit step indices; 0 is the initial state, `T` the final one.
    Steps(Vec<usize>),
}

impl RecordSchedule {
    fn records(&self, t: usize, steps: usize) -> bool {
        match self {
            RecordSchedule::FinalOnly => t == steps,
            RecordSchedule::EveryStep => t >= 1,
            RecordSchedule::Steps(list) => list.contains(&t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    /// `L`, even.
    pub sites: usize,
    /// `T`, number of time steps.
    pub steps: usize,
    /// Mean number of resets per time step, `0 ≤ p ≤ L`.
    pub p: f64,
    pub seed: u64,
    #[serde(default)]
    pub record: RecordSchedule,
    #[serde(default)]
    pub cut: CutPolicy,
}

impl CircuitConfig {
    pub fn new(sites: usize, steps: usize, p: f64, seed: u64) -> Self {
        Self { sites, steps, p, seed, record: RecordSchedule::FinalOnly, cut: CutPolicy::HalfChain }
    }

    pub fn with_record(mut self, record: RecordSchedule) -> Self {
        self.record = record;
        self
    }

    /// Per-site, per-step reset probability.
    pub fn q(&self) -> f64 {
        self.p / self.sites as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites % 2 != 0 {
            return Err(Error::InvalidConfig(format!("L = {} must be even and at least 2", self.sites)));
        }
        if !(0.0..=self.sites as f64).contains(&self.p) {
            return Err(Error::InvalidConfig(format!("p = {} outside [0, L]", self.p)));
        }
        if let RecordSchedule::Steps(list) = &self.record {
            if let Some(t) = list.iter().find(|&&t| t > self.steps) {
                return Err(Error::InvalidConfig(format!("record step {t} beyond T = {}", self.steps)));
            }
        }
        self.cut.resolve(self.sites)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// `S_p` in bits.
    pub sp: u32,
    /// `E_N` in bits.
    pub en: u32,
    /// Generator count `k`.
    pub k: u32,
    /// Resets applied in steps `1..=t`.
    pub resets: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub sites: usize,
    pub steps: usize,
    pub p: f64,
    pub entries: Vec<StepRecord>,
}

impl TrajectoryRecord {
    pub fn last(&self) -> Option<&StepRecord> {
        self.entries.last()
    }
}

/// One coin per site in ascending order; resets where the coin is below `q`.
pub fn reset_layer<T: CircuitTarget + ?Sized>(target: &mut T, sites: usize, q: f64, rng: &mut RandomSource) -> Result<usize> {
    let mut resets = 0;
    for site in 0..sites {
        let coin: f64 = rng.random();
        if coin < q {
            target.reset(site)?;
            resets += 1;
        }
    }
    target.layer_done()?;
    Ok(resets)
}

/// Runs one brickwork step on any target and returns the number of resets.
pub fn brickwork_step<T: CircuitTarget + ?Sized>(target: &mut T, sites: usize, q: f64, rng: &mut RandomSource) -> Result<usize> {
    debug_assert!(sites >= 2 && sites % 2 == 0);
    for offset in [0, 1] {
        for j in 0..sites / 2 {
            let a = 2 * j + offset;
            let b = (a + 1) % sites;
            let gate = sample_clifford2(rng);
            target.apply_gate(&gate, a, b)?;
        }
        target.layer_done()?;
    }
    reset_layer(target, sites, q, rng)
}

/// Like [`brickwork_step`], but with `sites` gates on uniformly random
/// ordered pairs of distinct sites. Works for any `sites ≥ 2`, including
/// odd chains. Each gate draws its pair, then the gate itself.
pub fn random_pair_step<T: CircuitTarget + ?Sized>(target: &mut T, sites: usize, q: f64, rng: &mut RandomSource) -> Result<usize> {
    if sites < 2 {
        return Err(Error::InvalidConfig(format!("random pairs need at least 2 sites, got {sites}")));
    }
    for _ in 0..sites {
        let a = rng.random_range(0..sites);
        let b = (a + rng.random_range(1..sites)) % sites;
        let gate = sample_clifford2(rng);
        target.apply_gate(&gate, a, b)?;
    }
    target.layer_done()?;
    reset_layer(target, sites, q, rng)
}

/// One time step of `cfg` applied to `state`.
pub fn step(state: &mut StabilizerState, cfg: &CircuitConfig, rng: &mut RandomSource) -> Result<usize> {
    if state.sites() != cfg.sites {
        return Err(Error::LengthMismatch { left: state.sites(), right: cfg.sites });
    }
    brickwork_step(state, cfg.sites, cfg.q(), rng)
}

fn observe(state: &StabilizerState, cut: &Cut, t: usize, resets: u64) -> Result<StepRecord> {
    Ok(StepRecord {
        t,
        sp: log_purity(state) as u32,
        en: negativity(state, cut)? as u32,
        k: state.rank() as u32,
        resets,
    })
}

/// Runs `cfg` from `|0…0⟩` on the random stream `(cfg.seed, stream)`.
pub fn run_trajectory_stream(cfg: &CircuitConfig, stream: u64) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let cut = cfg.cut.resolve(cfg.sites)?;
    let mut rng = RandomSource::new(cfg.seed, stream);
    let mut state = StabilizerState::zero(cfg.sites);
    let mut entries = Vec::new();
    let mut resets = 0u64;
    if cfg.record.records(0, cfg.steps) && !matches!(cfg.record, RecordSchedule::EveryStep) {
        entries.push(observe(&state, &cut, 0, 0)?);
    }
    for t in 1..=cfg.steps {
        resets += step(&mut state, cfg, &mut rng)? as u64;
        if cfg.record.records(t, cfg.steps) {
            entries.push(observe(&state, &cut, t, resets)?);
        }
    }
    Ok(TrajectoryRecord { sites: cfg.sites, steps: cfg.steps, p: cfg.p, entries })
}

pub fn run_trajectory(cfg: &CircuitConfig) -> Result<TrajectoryRecord> {
    run_trajectory_stream(cfg, 0)
}

/// Trajectories on streams `first_stream .. first_stream + n`, in stream
/// order. Runs on the current rayon pool.
pub fn run_ensemble(cfg: &CircuitConfig, first_stream: u64, n: usize) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    (0..n as u64).into_par_iter().map(|i| run_trajectory_stream(cfg, first_stream + i)).collect()
}
