//! Ensemble means, variances, bootstrap errors and second differences.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Streaming mean/variance accumulator (Welford, with Chan's merge).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased variance; `NaN` below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { resamples: 200, seed: 0 }
    }
}

/// Mean, unbiased variance, and bootstrap standard errors of both.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

/// Summarizes one sample. The bootstrap draws come from `RandomSource::new(opts.seed, stream)`.
pub fn summarize(samples: &[f64], opts: &BootstrapOptions, stream: u64) -> Result<Summary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} samples, need at least 2")));
    }
    let m: Moments = samples.iter().copied().collect();
    let (se_mean, se_var) = if opts.resamples >= 2 {
        let mut rng = RandomSource::new(opts.seed, stream);
        let mut means = Moments::new();
        let mut vars = Moments::new();
        for _ in 0..opts.resamples {
            let r: Moments = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            means.push(r.mean());
            vars.push(r.variance());
        }
        (means.variance().sqrt(), vars.variance().sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Summary { n, mean: m.mean(), var: m.variance(), se_mean, se_var })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleKey {
    pub sites: usize,
    pub steps: usize,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub key: EnsembleKey,
    pub n_samples: usize,
    pub mean_sp: f64,
    pub var_sp: f64,
    pub se_mean_sp: f64,
    pub se_var_sp: f64,
    pub mean_en: f64,
    pub var_en: f64,
    pub se_mean_en: f64,
    pub se_var_en: f64,
}

impl EnsembleStats {
    pub fn from_samples(key: EnsembleKey, sp: &[f64], en: &[f64], opts: &BootstrapOptions) -> Result<Self> {
        if sp.len() != en.len() {
            return Err(Error::LengthMismatch { left: sp.len(), right: en.len() });
        }
        let s = summarize(sp, opts, 0)?;
        let e = summarize(en, opts, 1)?;
        Ok(Self {
            key,
            n_samples: s.n,
            mean_sp: s.mean,
            var_sp: s.var,
            se_mean_sp: s.se_mean,
            se_var_sp: s.se_var,
            mean_en: e.mean,
            var_en: e.var,
            se_mean_en: e.se_mean,
            se_var_en: e.se_var,
        })
    }

    pub fn sp(&self) -> Summary {
        Summary { n: self.n_samples, mean: self.mean_sp, var: self.var_sp, se_mean: self.se_mean_sp, se_var: self.se_var_sp }
    }

    pub fn en(&self) -> Summary {
        Summary { n: self.n_samples, mean: self.mean_en, var: self.var_en, se_mean: self.se_mean_en, se_var: self.se_var_en }
    }
}

/// Aggregates the last recorded entry of every trajectory.
pub fn aggregate(records: &[TrajectoryRecord], opts: &BootstrapOptions) -> Result<EnsembleStats> {
    let first = records.first().ok_or_else(|| Error::InsufficientData("no trajectories".into()))?;
    let key = EnsembleKey { sites: first.sites, steps: first.steps, p: first.p };
    let mut sp = Vec::with_capacity(records.len());
    let mut en = Vec::with_capacity(records.len());
    for r in records {
        if r.sites != key.sites || r.steps != key.steps || r.p.to_bits() != key.p.to_bits() {
            return Err(Error::MixedKeys);
        }
        let last = r.last().ok_or_else(|| Error::InsufficientData("trajectory without recorded steps".into()))?;
        sp.push(last.sp as f64);
        en.push(last.en as f64);
    }
    EnsembleStats::from_samples(key, &sp, &en, opts)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMethod {
    /// Second difference through each point and its two neighbours.
    #[default]
    ThreePoint,
    /// Second derivative of a least-squares quadratic over `2·half_width + 1` points.
    LocalQuadratic { half_width: usize },
}

/// `d²y/dp²` at interior points of a strictly increasing, possibly
/// non-uniform grid. The first and last `half_width` points are omitted.
pub fn second_derivative(curve: &[(f64, f64)], method: DerivativeMethod) -> Result<Vec<(f64, f64)>> {
    let w = match method {
        DerivativeMethod::ThreePoint => 1,
        DerivativeMethod::LocalQuadratic { half_width } => half_width.max(1),
    };
    if curve.len() < 2 * w + 1 {
        return Err(Error::InsufficientData(format!("{} grid points, need at least {}", curve.len(), 2 * w + 1)));
    }
    if curve.windows(2).any(|pair| !(pair[1].0 > pair[0].0)) {
        return Err(Error::InvalidConfig("p grid must be strictly increasing".into()));
    }
    let out = (w..curve.len() - w)
        .map(|i| {
            let d2 = match method {
                DerivativeMethod::ThreePoint => three_point(curve[i - 1], curve[i], curve[i + 1]),
                DerivativeMethod::LocalQuadratic { .. } => quadratic_curvature(&curve[i - w..=i + w], curve[i].0),
            };
            (curve[i].0, d2)
        })
        .collect();
    Ok(out)
}

fn three_point((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    2.0 * (y0 / (h1 * (h1 + h2)) - y1 / (h1 * h2) + y2 / (h2 * (h1 + h2)))
}

/// `2a` for the least-squares fit `y = a u² + b u + c`, `u = x − centre`.
fn quadratic_curvature(points: &[(f64, f64)], centre: f64) -> f64 {
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for &(x, y) in points {
        let u = x - centre;
        let mut pow = 1.0;
        for (j, sj) in s.iter_mut().enumerate() {
            *sj += pow;
            if j < 3 {
                t[j] += pow * y;
            }
            pow *= u;
        }
    }
    // normal equations in the basis (1, u, u²)
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = det3(&m);
    let mut ma = m;
    for r in 0..3 {
        ma[r][2] = t[r];
    }
    2.0 * det3(&ma) / det
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
