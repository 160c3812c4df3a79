//! Stabilizer against dense-matrix co-simulation.

use rayon::prelude::*;
use resetsim::rng::derive_seed;
use resetsim::oracle::{bell_reset_sequence, cosimulate, CoSimCase, CoSimOutcome, ORACLE_MAX_SITES};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleArgs {
    pub max_sites: usize,
    /// Circuits per `(L, p)`.
    pub cases: usize,
    pub seed: u64,
    pub p_values: Vec<f64>,
    /// `T = steps_per_site · L`.
    pub steps_per_site: usize,
}

impl Default for OracleArgs {
    fn default() -> Self {
        Self { max_sites: 6, cases: 1000, seed: 0, p_values: vec![0.1, 0.25, 0.5], steps_per_site: 4 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    #[serde(rename = "L")]
    pub sites: usize,
    pub cases: usize,
    pub sp_matches: usize,
    pub en_matches: usize,
    pub state_matches: usize,
    pub max_sp_error: f64,
    pub max_en_error: f64,
    pub max_state_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub args: OracleArgs,
    pub bell_fixture: bool,
    pub sizes: Vec<SizeReport>,
}

impl OracleReport {
    pub fn mismatches(&self) -> usize {
        self.sizes.iter().map(|s| s.cases - s.sp_matches.min(s.en_matches).min(s.state_matches)).sum::<usize>() + usize::from(!self.bell_fixture)
    }

    pub fn passed(&self) -> bool {
        self.mismatches() == 0
    }
}

/// The two-site Bell walk-through: `S_p` goes 1 then 0 and both engines hit
/// the closed-form states.
pub fn bell_fixture_holds() -> Result<bool> {
    let stages = bell_reset_sequence()?;
    let sps: Vec<usize> = stages.iter().map(|s| s.stabilizer_sp).collect();
    Ok(sps == [1, 0]
        && stages.iter().all(|s| {
            s.dense.max_abs_diff(&s.expected) == 0.0
                && resetsim::oracle::dense_stabilizer_state(&s.stabilizer).is_ok_and(|d| d.max_abs_diff(&s.expected) == 0.0)
                && s.dense_sp == s.stabilizer_sp as f64
        }))
}

pub fn oracle_check(args: &OracleArgs) -> Result<OracleReport> {
    if !(2..=ORACLE_MAX_SITES).contains(&args.max_sites) {
        return Err(CliError::Validation(format!("max L must lie in 2..={ORACLE_MAX_SITES}, got {}", args.max_sites)));
    }
    if args.cases == 0 || args.p_values.is_empty() || args.steps_per_site == 0 {
        return Err(CliError::Validation("need at least one case, one p value and T > 0".into()));
    }
    let mut sizes = Vec::new();
    for sites in 2..=args.max_sites {
        if let Some(&p) = args.p_values.iter().find(|&&p| !(0.0..=sites as f64).contains(&p)) {
            return Err(CliError::Validation(format!("p = {p} outside [0, {sites}]")));
        }
        let seed = derive_seed(args.seed, &[sites as u64]);
        let jobs: Vec<(f64, u64)> = args.p_values.iter().flat_map(|&p| (0..args.cases as u64).map(move |c| (p, c))).collect();
        let outcomes: Vec<CoSimOutcome> = jobs
            .par_iter()
            .enumerate()
            .map(|(i, &(p, _))| cosimulate(&CoSimCase::new(sites, args.steps_per_site * sites, p, seed, i as u64)?))
            .collect::<resetsim::Result<_>>()?;
        let mut r = SizeReport { sites, cases: outcomes.len(), ..SizeReport::default() };
        for o in &outcomes {
            let (esp, een) = ((o.stabilizer_sp as f64 - o.dense_sp).abs(), (o.stabilizer_en as f64 - o.dense_en).abs());
            r.sp_matches += usize::from(esp <= TOLERANCE);
            r.en_matches += usize::from(een <= TOLERANCE);
            r.state_matches += usize::from(o.max_state_diff <= TOLERANCE);
            r.max_sp_error = r.max_sp_error.max(esp);
            r.max_en_error = r.max_en_error.max(een);
            r.max_state_diff = r.max_state_diff.max(o.max_state_diff);
        }
        sizes.push(r);
    }
    Ok(OracleReport { args: args.clone(), bell_fixture: bell_fixture_holds()?, sizes })
}
