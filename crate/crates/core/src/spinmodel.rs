//! Leading-order large-`d` predictions for `S_p` and the domain-wall tension.
//!
//! Below the transition every reset contributes `log₂ d` to the purity, so
//! `S_p ≈ T·p·log₂ d`. Above it the purity is pinned by a domain wall of
//! tension `S₀(p)` spanning the system, `S_p ≈ S₀·L·log₂ d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::EnsembleStats;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinModelParams {
    /// Local dimension `d ≥ 2`.
    pub d: u32,
    pub steps: usize,
    pub sites: usize,
    pub p: f64,
    pub p_c_ref: f64,
}

impl SpinModelParams {
    pub fn qubits(steps: usize, sites: usize, p: f64, p_c_ref: f64) -> Self {
        Self { d: 2, steps, sites, p, p_c_ref }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.steps == 0 || self.sites == 0 || !(self.p >= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid spin-model parameters {self:?}")));
        }
        Ok(())
    }
}

/// `T·p·log₂ d` for `p ≤ p_c_ref`, otherwise `S₀·L·log₂ d`.
pub fn predict_sp(params: &SpinModelParams, s0: f64) -> f64 {
    let log_d = (params.d as f64).log2();
    if params.p <= params.p_c_ref {
        params.steps as f64 * params.p * log_d
    } else {
        s0 * params.sites as f64 * log_d
    }
}

/// Least-squares line `mean_sp = slope·L + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensionFit {
    /// `S₀` for qubits.
    pub s0: f64,
    pub intercept: f64,
    pub sizes: usize,
}

/// Fits mean `S_p` against `L` over ensembles sharing `T/L` and either `p`
/// or `q = p/L`.
pub fn fit_tension(stats: &[EnsembleStats]) -> Result<TensionFit> {
    let mut sizes: Vec<usize> = stats.iter().map(|s| s.key.sites).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData(format!("{} distinct sizes, need 2", sizes.len())));
    }
    let first = &stats[0].key;
    let ratio = first.steps as f64 / first.sites as f64;
    let q = first.p / first.sites as f64;
    let same_p = stats.iter().all(|s| s.key.p.to_bits() == first.p.to_bits());
    // a fixed per-site rate q (e.g. the all-reset limit q = 1) is also accepted
    let same_q = stats.iter().all(|s| (s.key.p / s.key.sites as f64 - q).abs() <= 1e-12);
    if !(same_p || same_q) || stats.iter().any(|s| (s.key.steps as f64 / s.key.sites as f64 - ratio).abs() > 1e-12) {
        return Err(Error::MixedKeys);
    }
    let n = stats.len() as f64;
    let mx = stats.iter().map(|s| s.key.sites as f64).sum::<f64>() / n;
    let my = stats.iter().map(|s| s.mean_sp).sum::<f64>() / n;
    let sxx: f64 = stats.iter().map(|s| (s.key.sites as f64 - mx).powi(2)).sum();
    let sxy: f64 = stats.iter().map(|s| (s.key.sites as f64 - mx) * (s.mean_sp - my)).sum();
    let slope = sxy / sxx;
    Ok(TensionFit { s0: slope, intercept: my - slope * mx, sizes: sizes.len() })
}

/// `S₀(p)` as the slope of mean `S_p` versus `L`.
pub fn extract_s0(stats: &[EnsembleStats]) -> Result<f64> {
    fit_tension(stats).map(|f| f.s0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::EnsembleKey;
    use approx::assert_relative_eq;

    fn stat(sites: usize, p: f64, mean_sp: f64) -> EnsembleStats {
        EnsembleStats {
            key: EnsembleKey { sites, steps: 4 * sites, p },
            n_samples: 100,
            mean_sp,
            var_sp: 0.0,
            se_mean_sp: 0.0,
            se_var_sp: 0.0,
            mean_en: 0.0,
            var_en: 0.0,
            se_mean_en: 0.0,
            se_var_en: 0.0,
        }
    }

    #[test]
    fn predictions() {
        assert_relative_eq!(predict_sp(&SpinModelParams::qubits(512, 128, 0.1, 0.2), 0.0), 51.2, epsilon = 1e-12);
        assert_eq!(predict_sp(&SpinModelParams::qubits(512, 128, 0.0, 0.2), 0.9), 0.0);
        assert_relative_eq!(predict_sp(&SpinModelParams::qubits(1024, 256, 0.28, 0.2), 0.9819), 251.3664, epsilon = 1e-9);
        let qutrit = SpinModelParams { d: 4, ..SpinModelParams::qubits(10, 4, 0.1, 0.2) };
        assert_relative_eq!(predict_sp(&qutrit, 0.0), 2.0, epsilon = 1e-12);
        assert!(SpinModelParams { d: 1, ..qutrit }.validate().is_err());
    }

    #[test]
    fn small_p_branch_is_monotone() {
        let mut last = -1.0;
        for i in 0..=20 {
            let v = predict_sp(&SpinModelParams::qubits(64, 16, i as f64 * 0.01, 0.2), 0.97);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn slope_of_exact_linear_data() {
        let stats: Vec<_> = [32, 48, 64].iter().map(|&l| stat(l, 0.4, 0.97 * l as f64)).collect();
        assert_relative_eq!(extract_s0(&stats).unwrap(), 0.97, epsilon = 1e-12);
        let stats: Vec<_> = [32, 48, 64].iter().map(|&l| stat(l, 0.4, 0.97 * l as f64 - 1.5)).collect();
        let f = fit_tension(&stats).unwrap();
        assert_relative_eq!(f.s0, 0.97, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, -1.5, epsilon = 1e-10);
    }

    #[test]
    fn recovers_s0_from_predictions() {
        for s0 in [0.93, 0.9819, 1.0] {
            let stats: Vec<_> = [16, 32, 64, 128]
                .iter()
                .map(|&l| stat(l, 0.45, predict_sp(&SpinModelParams::qubits(4 * l, l, 0.45, 0.25), s0)))
                .collect();
            assert_relative_eq!(extract_s0(&stats).unwrap(), s0, epsilon = 1e-12);
        }
    }

    #[test]
    fn all_reset_limit_has_zero_tension() {
        let stats: Vec<_> = [8, 16, 32].iter().map(|&l| stat(l, l as f64, 0.0)).collect();
        assert_eq!(extract_s0(&stats).unwrap(), 0.0);
        let mixed = vec![stat(8, 8.0, 0.0), stat(16, 1.0, 0.0)];
        assert!(matches!(fit_tension(&mixed), Err(Error::MixedKeys)));
    }

    #[test]
    fn needs_two_sizes() {
        assert!(extract_s0(&[stat(32, 0.4, 31.0)]).is_err());
        assert!(extract_s0(&[stat(32, 0.4, 31.0), stat(32, 0.4, 31.5)]).is_err());
    }
}
