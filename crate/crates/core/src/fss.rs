//! Finite-size-scaling collapse: `y(p, L) ≈ L^{ζ/ν} f(L^{1/ν}(p − p_c))`.
//!
//! Two ansätze are supported. The bare form rescales `y` directly; the
//! variance form first subtracts each series' own value at `p_c`, obtained
//! by linear interpolation on its grid. Collapse quality is the
//! Houdayer–Hartmann reduced chi-square and is minimised with a coarse grid
//! followed by Nelder–Mead restarts. Uncertainties come from a parametric
//! bootstrap that redraws every `y` from `N(y, dy²)` and refits.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, RandomSource};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ansatz {
    /// `y(p) − y(p_c)` collapses.
    #[default]
    Variance,
    /// `y(p)` collapses as is.
    Bare,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FssPoint {
    pub p: f64,
    pub y: f64,
    pub dy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FssSeries {
    pub size: usize,
    pub points: Vec<FssPoint>,
}

impl FssSeries {
    pub fn new(size: usize, points: Vec<FssPoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InsufficientData(format!("series L = {size} has {} points, need 4", points.len())));
        }
        if points.iter().any(|q| !(q.dy > 0.0) || !q.y.is_finite() || !q.p.is_finite()) {
            return Err(Error::InvalidConfig(format!("series L = {size} needs finite data and positive errors")));
        }
        if points.windows(2).any(|w| !(w[1].p > w[0].p)) {
            return Err(Error::InvalidConfig(format!("series L = {size} is not strictly increasing in p")));
        }
        Ok(Self { size, points })
    }

    pub fn p_range(&self) -> (f64, f64) {
        (self.points[0].p, self.points[self.points.len() - 1].p)
    }

    /// Linear interpolation of `y` at `p`.
    pub fn interpolate(&self, p: f64) -> Result<f64> {
        let (lo, hi) = self.p_range();
        if !(lo..=hi).contains(&p) {
            return Err(Error::OutOfInterpolationRange(p));
        }
        let j = self.points.partition_point(|q| q.p <= p).clamp(1, self.points.len() - 1);
        let (a, b) = (self.points[j - 1], self.points[j]);
        Ok(a.y + (b.y - a.y) * (p - a.p) / (b.p - a.p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FssDataset {
    pub series: Vec<FssSeries>,
    pub ansatz: Ansatz,
    pub zeta: f64,
}

impl FssDataset {
    pub fn new(series: Vec<FssSeries>, ansatz: Ansatz) -> Result<Self> {
        if series.len() < 2 {
            return Err(Error::InsufficientData(format!("{} sizes, need at least 2", series.len())));
        }
        Ok(Self { series, ansatz, zeta: 0.0 })
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    /// Intersection of the series' p ranges.
    pub fn common_p_range(&self) -> (f64, f64) {
        self.series.iter().map(FssSeries::p_range).fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), (lo, hi)| (a.max(lo), b.min(hi)))
    }
}

/// One series after rescaling, sorted by `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledSeries {
    pub size: usize,
    /// `(x, y, dy)` triples.
    pub points: Vec<(f64, f64, f64)>,
}

pub fn rescale(ds: &FssDataset, p_c: f64, nu: f64) -> Result<Vec<RescaledSeries>> {
    if !(nu > 0.0) {
        return Err(Error::InvalidConfig(format!("nu = {nu} must be positive")));
    }
    ds.series
        .iter()
        .map(|s| {
            let l = s.size as f64;
            let xs = l.powf(1.0 / nu);
            let ys = l.powf(-ds.zeta / nu);
            let offset = match ds.ansatz {
                Ansatz::Variance => s.interpolate(p_c)?,
                Ansatz::Bare => 0.0,
            };
            let points = s.points.iter().map(|q| (xs * (q.p - p_c), (q.y - offset) * ys, q.dy * ys)).collect();
            Ok(RescaledSeries { size: s.size, points })
        })
        .collect()
}

/// Reduced chi-square of every point against a weighted straight line
/// through the bracketing points of all other series. Points that no other
/// series brackets do not contribute.
pub fn collapse_quality(series: &[RescaledSeries]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    let mut near: Vec<(f64, f64, f64)> = Vec::new();
    for (j, s) in series.iter().enumerate() {
        for &(x, y, dy) in &s.points {
            near.clear();
            for (j2, other) in series.iter().enumerate() {
                if j2 == j {
                    continue;
                }
                let pts = &other.points;
                let k = pts.partition_point(|q| q.0 <= x);
                if k == 0 || k == pts.len() {
                    // exact hit on the last point still brackets
                    if k == pts.len() && pts.len() >= 2 && pts[k - 1].0 == x {
                        near.push(pts[k - 2]);
                        near.push(pts[k - 1]);
                    }
                    continue;
                }
                near.push(pts[k - 1]);
                near.push(pts[k]);
            }
            if near.is_empty() {
                continue;
            }
            let (mut w, mut wx, mut wy, mut wxx, mut wxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(xi, yi, di) in &near {
                let wi = 1.0 / (di * di);
                w += wi;
                wx += wi * xi;
                wy += wi * yi;
                wxx += wi * xi * xi;
                wxy += wi * xi * yi;
            }
            let delta = w * wxx - wx * wx;
            if !(delta > 0.0) {
                continue;
            }
            let fit = (wxx * wy - wx * wxy) / delta + x * (w * wxy - wx * wy) / delta;
            let fit_var = (wxx - 2.0 * x * wx + x * x * w) / delta;
            total += (y - fit).powi(2) / (dy * dy + fit_var.max(0.0));
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(total / count as f64)
}

/// Collapse quality at `(p_c, nu)` in one call.
pub fn quality_at(ds: &FssDataset, p_c: f64, nu: f64) -> Result<f64> {
    collapse_quality(&rescale(ds, p_c, nu)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub p_c: (f64, f64),
    pub nu: (f64, f64),
}

impl FitBounds {
    pub fn contains(&self, p_c: f64, nu: f64) -> bool {
        (self.p_c.0..=self.p_c.1).contains(&p_c) && (self.nu.0..=self.nu.1).contains(&nu)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.p_c.0 < self.p_c.1 && self.nu.0 < self.nu.1 && self.nu.0 > 0.0 && [self.p_c.0, self.p_c.1, self.nu.1].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad fit bounds {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bounds: FitBounds,
    /// Points per axis of the starting grid.
    pub grid: usize,
    /// Grid points used as Nelder–Mead starts.
    pub restarts: usize,
    /// Objective evaluations per simplex run.
    pub max_evals: usize,
    /// Simplex diameter, as a fraction of the bounds, at which a run stops.
    pub xtol: f64,
    pub bootstrap: usize,
    pub seed: u64,
}

impl FitOptions {
    pub fn new(bounds: FitBounds) -> Self {
        Self { bounds, grid: 7, restarts: 3, max_evals: 800, xtol: 1e-6, bootstrap: 40, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FssFit {
    pub p_c: f64,
    pub nu: f64,
    pub quality: f64,
    pub p_c_err: f64,
    pub nu_err: f64,
    pub evaluations: usize,
}

struct Minimum {
    x: [f64; 2],
    f: f64,
    evals: usize,
    converged: bool,
}

/// Nelder–Mead on a 2-D objective. Returns the best vertex.
fn nelder_mead(f: &mut dyn FnMut([f64; 2]) -> f64, start: [f64; 2], step: [f64; 2], xtol: [f64; 2], max_evals: usize) -> Minimum {
    let mut simplex = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut values = simplex.map(&mut *f);
    let mut evals = 3;
    let mut converged = false;
    while evals < max_evals {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let small = (1..3).all(|i| (0..2).all(|d| (simplex[i][d] - simplex[0][d]).abs() <= xtol[d]));
        let flat = values[0].is_finite() && (values[2] - values[0]).abs() <= 1e-12 * (1.0 + values[0].abs());
        if small || (flat && small_enough(&simplex, xtol, 1e3)) {
            converged = true;
            break;
        }

        let centroid = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |t: f64| [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            evals += 1;
            if fe < fr {
                (simplex[2], values[2]) = (xe, fe);
            } else {
                (simplex[2], values[2]) = (xr, fr);
            }
            continue;
        }
        if fr < values[1] {
            (simplex[2], values[2]) = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < values[2] {
            let xc = along(-0.5);
            (xc, f(xc))
        } else {
            let xc = along(0.5);
            (xc, f(xc))
        };
        evals += 1;
        if fc < values[2].min(fr) {
            (simplex[2], values[2]) = (xc, fc);
            continue;
        }
        for i in 1..3 {
            simplex[i] = [(simplex[i][0] + simplex[0][0]) / 2.0, (simplex[i][1] + simplex[0][1]) / 2.0];
            values[i] = f(simplex[i]);
        }
        evals += 2;
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    Minimum { x: simplex[best], f: values[best], evals, converged }
}

fn small_enough(simplex: &[[f64; 2]; 3], xtol: [f64; 2], factor: f64) -> bool {
    (1..3).all(|i| (0..2).all(|d| (simplex[i][d] - simplex[0][d]).abs() <= xtol[d] * factor))
}

fn penalized(ds: &FssDataset, bounds: &FitBounds, x: [f64; 2]) -> f64 {
    if !bounds.contains(x[0], x[1]) {
        return f64::INFINITY;
    }
    quality_at(ds, x[0], x[1]).unwrap_or(f64::INFINITY)
}

/// Grid scan plus simplex restarts; `init` is always one of the starts.
fn minimise(ds: &FssDataset, init: (f64, f64), opts: &FitOptions, use_grid: bool) -> Result<(Minimum, usize)> {
    let b = &opts.bounds;
    let span = [b.p_c.1 - b.p_c.0, b.nu.1 - b.nu.0];
    let mut total_evals = 0;
    let mut starts: Vec<([f64; 2], f64)> = vec![([init.0, init.1], penalized(ds, b, [init.0, init.1]))];
    total_evals += 1;
    if use_grid && opts.grid >= 2 {
        let g = opts.grid;
        let mut grid = Vec::with_capacity(g * g);
        for i in 0..g {
            for j in 0..g {
                let x = [b.p_c.0 + span[0] * i as f64 / (g - 1) as f64, b.nu.0 + span[1] * j as f64 / (g - 1) as f64];
                grid.push((x, penalized(ds, b, x)));
            }
        }
        total_evals += grid.len();
        grid.sort_by(|a, b| a.1.total_cmp(&b.1));
        starts.extend(grid.into_iter().take(opts.restarts.max(1)));
    }
    if starts.iter().all(|s| !s.1.is_finite()) {
        return Err(Error::NoOverlap);
    }
    let divisor = opts.grid.max(2) as f64;
    let step_for = |x: [f64; 2]| {
        // step inward so the first simplex stays inside the box
        let s0 = span[0] / divisor;
        let s1 = span[1] / divisor;
        [if x[0] + s0 > b.p_c.1 { -s0 } else { s0 }, if x[1] + s1 > b.nu.1 { -s1 } else { s1 }]
    };
    let xtol = [span[0] * opts.xtol, span[1] * opts.xtol];
    let mut best: Option<Minimum> = None;
    for (x, fx) in starts {
        if !fx.is_finite() {
            continue;
        }
        let mut objective = |x: [f64; 2]| penalized(ds, b, x);
        let mut m = nelder_mead(&mut objective, x, step_for(x), xtol, opts.max_evals);
        total_evals += m.evals;
        // one restart from the optimum guards against a collapsed simplex
        if m.converged {
            let again = nelder_mead(&mut objective, m.x, step_for(m.x).map(|s| s / 4.0), xtol, opts.max_evals);
            total_evals += again.evals;
            if again.f <= m.f {
                m = Minimum { converged: again.converged, ..again };
            }
        }
        if best.as_ref().map_or(true, |bm| m.f < bm.f) {
            best = Some(m);
        }
    }
    Ok((best.expect("at least one finite start"), total_evals))
}

/// Fits `(p_c, ν)` by minimising [`collapse_quality`] inside `opts.bounds`.
pub fn fit(ds: &FssDataset, init: (f64, f64), opts: &FitOptions) -> Result<FssFit> {
    opts.bounds.validate()?;
    if !opts.bounds.contains(init.0, init.1) {
        return Err(Error::InvalidConfig(format!("initial guess {init:?} outside bounds")));
    }
    let (m, mut evals) = minimise(ds, init, opts, true)?;
    let mut result = FssFit { p_c: m.x[0], nu: m.x[1], quality: m.f, p_c_err: f64::NAN, nu_err: f64::NAN, evaluations: evals };
    if !m.converged || !m.f.is_finite() {
        return Err(Error::NotConverged { best: Box::new(result) });
    }

    if opts.bootstrap >= 2 {
        let mut pcs = crate::stats::Moments::new();
        let mut nus = crate::stats::Moments::new();
        for r in 0..opts.bootstrap {
            let replica = perturbed(ds, derive_seed(opts.seed, &[r as u64]));
            if let Ok((mr, e)) = minimise(&replica, (result.p_c, result.nu), opts, false) {
                evals += e;
                if mr.f.is_finite() {
                    pcs.push(mr.x[0]);
                    nus.push(mr.x[1]);
                }
            }
        }
        if pcs.count() >= 2 {
            result.p_c_err = pcs.variance().sqrt();
            result.nu_err = nus.variance().sqrt();
        }
    }
    result.evaluations = evals;
    Ok(result)
}

/// Copy of `ds` with every `y` redrawn from `N(y, dy²)`.
pub fn perturbed(ds: &FssDataset, seed: u64) -> FssDataset {
    let mut rng = RandomSource::from_seed(seed);
    let mut out = ds.clone();
    for s in &mut out.series {
        for q in &mut s.points {
            q.y += Normal::new(0.0, q.dy).expect("positive error").sample(&mut rng);
        }
    }
    out
}

/// Samples `y = L^{ζ/ν} f(L^{1/ν}(p − p_c))` on `grid` for each size and
/// adds Gaussian noise of relative size `rel_noise`. Errors are set to
/// `rel_noise·|y|`, floored at `floor`.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_dataset(
    master: impl Fn(f64) -> f64,
    p_c: f64,
    nu: f64,
    sizes: &[usize],
    grid: &[f64],
    rel_noise: f64,
    floor: f64,
    seed: u64,
) -> Result<FssDataset> {
    let mut rng = RandomSource::from_seed(seed);
    let series = sizes
        .iter()
        .map(|&size| {
            let l = size as f64;
            let points = grid
                .iter()
                .map(|&p| {
                    let y = master(l.powf(1.0 / nu) * (p - p_c));
                    let dy = (rel_noise * y.abs()).max(floor);
                    let noise = if rel_noise > 0.0 { Normal::new(0.0, dy).expect("positive error").sample(&mut rng) } else { 0.0 };
                    FssPoint { p, y: y + noise, dy }
                })
                .collect();
            FssSeries::new(size, points)
        })
        .collect::<Result<Vec<_>>>()?;
    FssDataset::new(series, Ansatz::Bare)
}
