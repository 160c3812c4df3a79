//! Collapse fits, derivative reports and spin-model overlays on sweep CSVs.

use std::path::{Path, PathBuf};

use resetsim::fss::{fit, rescale, FitBounds, FitOptions, FssPoint, FssSeries};
use resetsim::spinmodel::{fit_tension, predict_sp, SpinModelParams};
use resetsim::stats::{second_derivative, DerivativeMethod};
use resetsim::{Ansatz, EnsembleStats, FssDataset, FssFit};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::svg::{Plot, Series};
use crate::table;

/// Which column pair of the sweep CSV a report reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Mean logarithmic purity.
    Sp,
    /// Mean negativity.
    En,
    /// Variance of the logarithmic purity.
    VarSp,
    /// Variance of the negativity.
    VarEn,
}

impl Quantity {
    /// `(value, standard error)`.
    pub fn of(self, s: &EnsembleStats) -> (f64, f64) {
        match self {
            Quantity::Sp => (s.mean_sp, s.se_mean_sp),
            Quantity::En => (s.mean_en, s.se_mean_en),
            Quantity::VarSp => (s.var_sp, s.se_var_sp),
            Quantity::VarEn => (s.var_en, s.se_var_en),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Sp => "sp",
            Quantity::En => "en",
            Quantity::VarSp => "var-sp",
            Quantity::VarEn => "var-en",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Quantity::Sp => "S_p",
            Quantity::En => "E_N",
            Quantity::VarSp => "Var(S_p)",
            Quantity::VarEn => "Var(E_N)",
        }
    }

    /// Variances collapse after subtracting their value at `p_c`; means as is.
    pub fn default_ansatz(self) -> Ansatz {
        match self {
            Quantity::VarSp | Quantity::VarEn => Ansatz::Variance,
            Quantity::Sp | Quantity::En => Ansatz::Bare,
        }
    }
}

/// Rows sharing one `T/L`, picking `ratio` or the only one present.
pub fn select_ratio(rows: &[EnsembleStats], ratio: Option<f64>) -> Result<(f64, Vec<EnsembleStats>)> {
    let groups = table::by_ratio(rows);
    match ratio {
        Some(r) => groups
            .into_iter()
            .find(|(g, _)| (g - r).abs() < 1e-9)
            .ok_or_else(|| CliError::Validation(format!("no rows with T/L = {r}"))),
        None if groups.len() == 1 => Ok(groups.into_iter().next().expect("one group")),
        None => Err(CliError::Validation(format!(
            "input has {} T/L values; pick one with --ratio",
            groups.len()
        ))),
    }
}

/// Builds the collapse input. Points outside `window` or without a positive
/// finite error are skipped.
pub fn dataset(rows: &[EnsembleStats], quantity: Quantity, ansatz: Ansatz, window: Option<(f64, f64)>) -> Result<FssDataset> {
    let mut sizes: Vec<usize> = rows.iter().map(|s| s.key.sites).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let series = sizes
        .iter()
        .map(|&l| {
            let mut points: Vec<FssPoint> = rows
                .iter()
                .filter(|s| s.key.sites == l)
                .filter(|s| window.map_or(true, |(lo, hi)| (lo..=hi).contains(&s.key.p)))
                .map(|s| {
                    let (y, dy) = quantity.of(s);
                    FssPoint { p: s.key.p, y, dy }
                })
                .filter(|q| q.dy > 0.0 && q.dy.is_finite() && q.y.is_finite())
                .collect();
            points.sort_by(|a, b| a.p.total_cmp(&b.p));
            FssSeries::new(l, points)
        })
        .collect::<resetsim::Result<Vec<_>>>()?;
    Ok(FssDataset::new(series, ansatz)?)
}

#[derive(Clone, Debug)]
pub struct CollapseArgs {
    pub input: PathBuf,
    pub quantity: Quantity,
    pub ansatz: Option<Ansatz>,
    pub ratio: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub bounds: FitBounds,
    pub init: Option<(f64, f64)>,
    pub zeta: f64,
    pub bootstrap: usize,
    pub seed: u64,
    /// Output directory; defaults to the input's directory.
    pub out: Option<PathBuf>,
}

impl CollapseArgs {
    pub fn new(input: impl Into<PathBuf>, quantity: Quantity) -> Self {
        Self {
            input: input.into(),
            quantity,
            ansatz: None,
            ratio: None,
            window: None,
            bounds: FitBounds { p_c: (0.05, 0.45), nu: (0.3, 4.0) },
            init: None,
            zeta: 0.0,
            bootstrap: 40,
            seed: 0,
            out: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub quantity: Quantity,
    pub ansatz: Ansatz,
    pub ratio: f64,
    pub sizes: Vec<usize>,
    pub zeta: f64,
    pub converged: bool,
    pub fit: FssFit,
}

fn out_dir(out: &Option<PathBuf>, input: &Path) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn collapse_plot(ds: &FssDataset, fit: &FssFit, label: &str) -> Result<Plot> {
    let mut plot = Plot::new(
        format!("collapse: p_c = {:.4}, nu = {:.3}", fit.p_c, fit.nu),
        "L^(1/nu) (p - p_c)",
        match ds.ansatz {
            Ansatz::Variance => format!("{label}(p) - {label}(p_c)"),
            Ansatz::Bare => label.to_string(),
        },
    );
    for s in rescale(ds, fit.p_c, fit.nu)? {
        let pts = s.points.iter().map(|&(x, y, _)| (x, y)).collect();
        let err = s.points.iter().map(|&(_, _, e)| e).collect();
        plot.add(Series::new(format!("L = {}", s.size), pts).with_errors(err));
    }
    Ok(plot)
}

/// Fits the collapse and writes `collapse_<quantity>.json` and `.svg`. A
/// fit that fails to converge still writes its best point, then errors.
pub fn collapse(args: &CollapseArgs) -> Result<CollapseReport> {
    let rows = table::load(&args.input)?;
    let (ratio, rows) = select_ratio(&rows, args.ratio)?;
    let ansatz = args.ansatz.unwrap_or_else(|| args.quantity.default_ansatz());
    let ds = dataset(&rows, args.quantity, ansatz, args.window)?.with_zeta(args.zeta);
    let b = args.bounds;
    let init = args.init.unwrap_or(((b.p_c.0 + b.p_c.1) / 2.0, (b.nu.0 + b.nu.1) / 2.0));
    let opts = FitOptions { bootstrap: args.bootstrap, seed: args.seed, ..FitOptions::new(b) };
    let (fit, converged) = match fit(&ds, init, &opts) {
        Ok(f) => (f, true),
        Err(resetsim::Error::NotConverged { best }) => (*best, false),
        Err(e) => return Err(e.into()),
    };
    let report = CollapseReport {
        quantity: args.quantity,
        ansatz,
        ratio,
        sizes: ds.series.iter().map(|s| s.size).collect(),
        zeta: args.zeta,
        converged,
        fit,
    };
    let dir = out_dir(&args.out, &args.input)?;
    let stem = format!("collapse_{}", args.quantity.name());
    write(&dir.join(format!("{stem}.json")), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    if fit.p_c.is_finite() && fit.nu > 0.0 {
        if let Ok(plot) = collapse_plot(&ds, &fit, args.quantity.label()) {
            write(&dir.join(format!("{stem}.svg")), &plot.render())?;
        }
    }
    if !converged {
        return Err(CliError::NotConverged { p_c: fit.p_c, nu: fit.nu, quality: fit.quality });
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRow {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub p: f64,
    pub d2: f64,
}

/// Largest `|d²y/dp²|` of one `(L, T)` curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub p_peak: f64,
    pub peak: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub quantity: Quantity,
    pub rows: Vec<DerivativeRow>,
    pub peaks: Vec<Peak>,
    /// Exponent `a` of `p_peak ∝ (T/L)^a` for the largest size, when more
    /// than one `T/L` is present.
    pub boundary_exponent: Option<f64>,
}

pub fn derivative_report(rows: &[EnsembleStats], quantity: Quantity, method: DerivativeMethod) -> Result<DerivativeReport> {
    let mut out = Vec::new();
    let mut peaks = Vec::new();
    for (_, group) in table::by_ratio(rows) {
        let mut sizes: Vec<usize> = group.iter().map(|s| s.key.sites).collect();
        sizes.dedup();
        for l in sizes {
            let curve: Vec<(f64, f64)> = group.iter().filter(|s| s.key.sites == l).map(|s| (s.key.p, quantity.of(s).0)).collect();
            let steps = group.iter().find(|s| s.key.sites == l).expect("size present").key.steps;
            let d2 = second_derivative(&curve, method).map_err(|e| CliError::Validation(format!("L = {l}, T = {steps}: {e}")))?;
            let best = d2.iter().copied().filter(|(_, v)| v.is_finite()).fold(None::<(f64, f64)>, |acc, (p, v)| match acc {
                Some((_, b)) if b.abs() >= v.abs() => acc,
                _ => Some((p, v)),
            });
            if let Some((p_peak, peak)) = best {
                peaks.push(Peak { sites: l, steps, p_peak, peak });
            }
            out.extend(d2.into_iter().map(|(p, d2)| DerivativeRow { sites: l, steps, p, d2 }));
        }
    }
    let boundary_exponent = boundary_exponent(&peaks);
    Ok(DerivativeReport { quantity, rows: out, peaks, boundary_exponent })
}

/// Log-log slope of the peak location against `T/L` at the largest size.
fn boundary_exponent(peaks: &[Peak]) -> Option<f64> {
    let lmax = peaks.iter().map(|p| p.sites).max()?;
    let pts: Vec<(f64, f64)> = peaks
        .iter()
        .filter(|p| p.sites == lmax && p.p_peak > 0.0)
        .map(|p| ((p.steps as f64 / p.sites as f64).ln(), p.p_peak.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

fn csv_string<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

/// Writes `derivative_<quantity>.csv`, `derivative_<quantity>_peaks.csv`,
/// a JSON summary and an SVG of the curves.
pub fn write_derivative(input: &Path, quantity: Quantity, method: DerivativeMethod, out: &Option<PathBuf>) -> Result<DerivativeReport> {
    let rows = table::load(input)?;
    let report = derivative_report(&rows, quantity, method)?;
    let dir = out_dir(out, input)?;
    let stem = format!("derivative_{}", quantity.name());
    write(&dir.join(format!("{stem}.csv")), &csv_string(&report.rows))?;
    write(&dir.join(format!("{stem}_peaks.csv")), &csv_string(&report.peaks))?;
    write(&dir.join(format!("{stem}.json")), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    let mut plot = Plot::new(format!("second derivative of {}", quantity.label()), "p", format!("d2 {} / dp2", quantity.label()));
    for pk in &report.peaks {
        let pts = report.rows.iter().filter(|r| (r.sites, r.steps) == (pk.sites, pk.steps)).map(|r| (r.p, r.d2)).collect();
        plot.add(Series::new(format!("L = {}, T = {}", pk.sites, pk.steps), pts));
    }
    write(&dir.join(format!("{stem}.svg")), &plot.render())?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensionRow {
    pub ratio: f64,
    pub p: f64,
    /// `p/L`, for sweeps at fixed per-site rate; NaN at fixed `p`.
    pub q: f64,
    pub s0: f64,
    pub intercept: f64,
    pub sizes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub p: f64,
    pub observed_sp: f64,
    pub predicted_sp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictReport {
    pub p_c_ref: f64,
    pub tension: Vec<TensionRow>,
    pub overlay: Vec<OverlayRow>,
}

fn tension_groups(rows: &[EnsembleStats]) -> Vec<(f64, bool, Vec<EnsembleStats>)> {
    // (p or q, is_q, members): fixed-p groups first, then fixed-q for leftovers
    let mut out: Vec<(f64, bool, Vec<EnsembleStats>)> = Vec::new();
    for s in rows {
        match out.iter_mut().find(|g| g.0.to_bits() == s.key.p.to_bits()) {
            Some(g) => g.2.push(*s),
            None => out.push((s.key.p, false, vec![*s])),
        }
    }
    let (mut keep, single): (Vec<_>, Vec<_>) = out.into_iter().partition(|g| g.2.len() >= 2);
    let mut by_q: Vec<(f64, bool, Vec<EnsembleStats>)> = Vec::new();
    for s in single.into_iter().flat_map(|g| g.2) {
        let q = s.key.p / s.key.sites as f64;
        match by_q.iter_mut().find(|g| (g.0 - q).abs() <= 1e-12) {
            Some(g) => g.2.push(s),
            None => by_q.push((q, true, vec![s])),
        }
    }
    keep.extend(by_q.into_iter().filter(|g| g.2.len() >= 2));
    keep
}

/// Fits `S₀` wherever `p > p_c_ref` and at least two sizes share the point,
/// then overlays the large-`d` prediction on every row. `s0` overrides the
/// fitted tension when given.
pub fn predict(rows: &[EnsembleStats], p_c_ref: f64, s0: Option<f64>) -> Result<PredictReport> {
    let mut tension = Vec::new();
    let mut overlay = Vec::new();
    for (ratio, group) in table::by_ratio(rows) {
        let above: Vec<EnsembleStats> = group.iter().copied().filter(|s| s.key.p > p_c_ref).collect();
        let mut fitted: Vec<(EnsembleStats, f64)> = Vec::new();
        for (value, is_q, members) in tension_groups(&above) {
            let f = fit_tension(&members)?;
            tension.push(TensionRow {
                ratio,
                p: if is_q { f64::NAN } else { value },
                q: if is_q { value } else { f64::NAN },
                s0: f.s0,
                intercept: f.intercept,
                sizes: f.sizes,
            });
            fitted.extend(members.into_iter().map(|m| (m, f.s0)));
        }
        for s in &group {
            let tension_here = s0.or_else(|| fitted.iter().find(|(m, _)| m.key == s.key).map(|&(_, v)| v)).unwrap_or(f64::NAN);
            let params = SpinModelParams::qubits(s.key.steps, s.key.sites, s.key.p, p_c_ref);
            overlay.push(OverlayRow { sites: s.key.sites, steps: s.key.steps, p: s.key.p, observed_sp: s.mean_sp, predicted_sp: predict_sp(&params, tension_here) });
        }
    }
    Ok(PredictReport { p_c_ref, tension, overlay })
}

pub fn write_predict(input: &Path, p_c_ref: f64, s0: Option<f64>, out: &Option<PathBuf>) -> Result<PredictReport> {
    let rows = table::load(input)?;
    let report = predict(&rows, p_c_ref, s0)?;
    let dir = out_dir(out, input)?;
    write(&dir.join("predict.csv"), &csv_string(&report.overlay))?;
    write(&dir.join("tension.csv"), &csv_string(&report.tension))?;
    let mut plot = Plot::new(format!("S_p against the large-d curve (p_c = {p_c_ref})"), "p", "S_p");
    let mut keys: Vec<(usize, usize)> = report.overlay.iter().map(|r| (r.sites, r.steps)).collect();
    keys.dedup();
    for (l, t) in keys {
        let rows: Vec<&OverlayRow> = report.overlay.iter().filter(|r| (r.sites, r.steps) == (l, t)).collect();
        plot.add(Series::new(format!("L = {l}, T = {t}"), rows.iter().map(|r| (r.p, r.observed_sp)).collect()));
        plot.add(Series::new(format!("prediction L = {l}"), rows.iter().map(|r| (r.p, r.predicted_sp)).collect()).dashed());
    }
    write(&dir.join("predict.svg"), &plot.render())?;
    Ok(report)
}
