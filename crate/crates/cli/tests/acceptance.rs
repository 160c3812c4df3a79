//! Acceptance criteria. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::time::Instant;

use resetsim::circuit::step;
use resetsim::fss::{fit, synthetic_dataset, FitBounds, FitOptions};
use resetsim::oracle::bell_reset_sequence;
use resetsim::spinmodel::extract_s0;
use resetsim::{log_purity, negativity, CircuitConfig, Cut, EnsembleStats, RandomSource, StabilizerState};
use resetsim_cli::analysis::{dataset, Quantity};
use resetsim_cli::oracle_check::{oracle_check, OracleArgs};
use resetsim_cli::sweep::{delete_cells, run_sweep, RunOptions};
use resetsim_cli::{PGrid, SweepSpec};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: usize, name: &str, outcome: Result<String, String>) {
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("[FAIL] {id} {name}: {detail}");
            }
        }
    }
}

fn verdict(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn quiet() -> RunOptions {
    RunOptions { quiet: true, ..RunOptions::default() }
}

fn sweep(dir: &Path, name: &str, spec: SweepSpec) -> Vec<EnsembleStats> {
    let spec = SweepSpec { out: dir.join(name), ..spec };
    run_sweep(&spec, &quiet()).unwrap_or_else(|e| panic!("{name} sweep failed: {e}")).rows
}

fn at(rows: &[EnsembleStats], sites: usize, steps: usize, p: f64) -> &EnsembleStats {
    rows.iter().find(|s| s.key.sites == sites && s.key.steps == steps && (s.key.p - p).abs() < 1e-12).expect("cell present")
}

fn oracle_equivalence() -> Result<String, String> {
    let t0 = Instant::now();
    let report = oracle_check(&OracleArgs { max_sites: 6, cases: 1000, seed: 1, p_values: vec![0.1, 0.25, 0.5], steps_per_site: 4 }).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let worst = report.sizes.iter().map(|s| s.max_sp_error.max(s.max_en_error)).fold(0.0, f64::max);
    let total: usize = report.sizes.iter().map(|s| s.cases).sum();
    verdict(
        report.passed() && secs < 120.0,
        format!("{total} circuits over L = 2..6, {} mismatches, max |ΔS_p|, |ΔE_N| = {worst:.1e}, {secs:.1} s", report.mismatches()),
    )
}

fn bell_fixture() -> Result<String, String> {
    let stages = bell_reset_sequence().map_err(|e| e.to_string())?;
    let exact = stages.iter().all(|s| s.dense.max_abs_diff(&s.expected) == 0.0)
        && stages.iter().all(|s| resetsim::oracle::dense_stabilizer_state(&s.stabilizer).is_ok_and(|d| d.max_abs_diff(&s.expected) == 0.0));
    let sps: Vec<usize> = stages.iter().map(|s| s.stabilizer_sp).collect();
    let dense: Vec<f64> = stages.iter().map(|s| s.dense_sp).collect();
    verdict(
        exact && sps == [1, 0] && dense == [1.0, 0.0],
        format!("stabilizer S_p = {sps:?}, dense S_p = {dense:?}, final generators {:?}", stages[1].stabilizer.to_string().trim()),
    )
}

fn small_p_slope(dir: &Path) -> Result<String, String> {
    let rows = sweep(dir, "small-p", SweepSpec { seed: 3, ..SweepSpec::new(vec![64], vec![4], PGrid::List(vec![0.02, 0.05, 0.10]), 500) });
    let mut ok = true;
    let mut parts = Vec::new();
    for s in &rows {
        let tp = s.key.steps as f64 * s.key.p;
        let rel = (s.mean_sp - tp).abs() / tp;
        ok &= rel <= 0.10;
        parts.push(format!("p={}: {:.3} vs Tp={:.2} ({:.1}%)", s.key.p, s.mean_sp, tp, 100.0 * rel));
    }
    verdict(ok && rows.len() == 3, parts.join(", "))
}

/// `(p at max, max)` of `quantity` for one size.
fn peak(rows: &[EnsembleStats], sites: usize, quantity: Quantity) -> (f64, f64) {
    rows.iter()
        .filter(|s| s.key.sites == sites)
        .map(|s| (s.key.p, quantity.of(s).0))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn variance_peaks(desk: &[EnsembleStats]) -> Result<String, String> {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [Quantity::VarSp, Quantity::VarEn] {
        let peaks: Vec<(f64, f64)> = [16, 32, 64].iter().map(|&l| peak(desk, l, q)).collect();
        ok &= peaks.windows(2).all(|w| w[1].1 > w[0].1);
        ok &= peaks.iter().all(|&(p, _)| (0.15..=0.35).contains(&p));
        parts.push(format!("{}: {}", q.name(), peaks.iter().map(|(p, v)| format!("{v:.3}@{p}")).collect::<Vec<_>>().join(" < ")));
    }
    verdict(ok, parts.join("; "))
}

fn area_law(desk: &[EnsembleStats]) -> Result<String, String> {
    let mut ok = true;
    let mut worst = 0.0f64;
    for a in desk.iter().filter(|s| s.key.sites == 32 && s.key.p >= 0.35 - 1e-12) {
        let b = at(desk, 64, 256, a.key.p);
        let sigma = (a.se_mean_en.powi(2) + b.se_mean_en.powi(2)).sqrt();
        let z = (a.mean_en - b.mean_en).abs() / sigma.max(f64::MIN_POSITIVE);
        // two identical exact zeros agree trivially
        let agree = a.mean_en == b.mean_en || (a.mean_en - b.mean_en).abs() <= 2.0 * sigma;
        ok &= agree;
        if a.mean_en != b.mean_en {
            worst = worst.max(z);
        }
    }
    let mut exps = Vec::new();
    for p in desk.iter().filter(|s| s.key.sites == 16 && s.key.p <= 0.1 + 1e-12).map(|s| s.key.p) {
        let pts: Vec<(f64, f64)> = [16usize, 32, 64].iter().map(|&l| at(desk, l, 4 * l, p)).map(|s| ((s.key.sites as f64).ln(), s.mean_en)).collect();
        let grows = pts.windows(2).all(|w| w[1].1 > w[0].1);
        let b = if pts.iter().all(|q| q.1 > 0.0) { slope(&pts.iter().map(|&(x, y)| (x, y.ln())).collect::<Vec<_>>()) } else { f64::NAN };
        ok &= grows && (b - 1.0).abs() <= 0.2;
        exps.push(format!("{p}: b={b:.3}"));
    }
    verdict(ok, format!("p ≥ 0.35 worst |ΔE_N|/σ = {worst:.2}; p ≤ 0.1 exponents {}", exps.join(", ")))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

fn fss(desk: &[EnsembleStats]) -> Result<String, String> {
    let grid: Vec<f64> = (0..=25).map(|i| i as f64 * 0.02).collect();
    let synth = synthetic_dataset(|x| 1.0 + (x / 8.0).tanh(), 0.25, 1.0, &[8, 16, 32, 64], &grid, 0.02, 1e-3, 2024).map_err(|e| e.to_string())?;
    let bounds = FitBounds { p_c: (0.05, 0.45), nu: (0.3, 4.0) };
    let opts = FitOptions { bootstrap: 0, ..FitOptions::new(bounds) };
    let s = fit(&synth, (0.2, 1.5), &opts).map_err(|e| format!("synthetic fit: {e}"))?;
    let synth_ok = (s.p_c - 0.25).abs() <= 0.01 && (s.nu - 1.0).abs() <= 0.1;

    let var = dataset(desk, Quantity::VarSp, Quantity::VarSp.default_ansatz(), None).and_then(|ds| fit(&ds, (0.25, 1.0), &opts).map_err(Into::into));
    let bare = dataset(desk, Quantity::En, Quantity::En.default_ansatz(), None).and_then(|ds| fit(&ds, (0.25, 2.0), &opts).map_err(Into::into));
    let (var, bare) = match (var, bare) {
        (Ok(v), Ok(b)) => (v, b),
        (v, b) => return Err(format!("desk fits failed: var {:?}, bare {:?}", v.err().map(|e| e.to_string()), b.err().map(|e| e.to_string()))),
    };
    let ok = synth_ok && (0.15..=0.30).contains(&var.p_c) && bare.nu > var.nu;
    verdict(
        ok,
        format!(
            "synthetic (p_c, ν) = ({:.4}, {:.4}); desk Var(S_p) (p_c, ν) = ({:.4}, {:.3}) Q={:.2}; bare E_N (p_c, ν) = ({:.4}, {:.3}) Q={:.2}",
            s.p_c, s.nu, var.p_c, var.nu, var.quality, bare.p_c, bare.nu, bare.quality
        ),
    )
}

fn tension_band(dir: &Path) -> Result<String, String> {
    let rows = sweep(dir, "tension", SweepSpec { seed: 7, ..SweepSpec::new(vec![32, 48, 64], vec![4], PGrid::List(vec![0.28, 0.40, 0.48]), 500) });
    let mut s0 = Vec::new();
    for p in [0.28, 0.40, 0.48] {
        let group: Vec<EnsembleStats> = rows.iter().copied().filter(|s| s.key.p == p).collect();
        s0.push(extract_s0(&group).map_err(|e| e.to_string())?);
    }
    let ok = s0.iter().all(|v| (0.93..=1.00).contains(v)) && s0.windows(2).all(|w| w[1] <= w[0]);
    verdict(ok, format!("S0 at p = 0.28, 0.40, 0.48: {}", s0.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")))
}

fn saturation(dir: &Path) -> Result<String, String> {
    let rows = sweep(dir, "tl-saturation", SweepSpec { seed: 5, ..SweepSpec::preset("tl-saturation").unwrap() });
    let (a, b) = (at(&rows, 32, 6 * 32, 0.25), at(&rows, 32, 8 * 32, 0.25));
    let dsp = (b.mean_sp - a.mean_sp).abs() / a.mean_sp;
    let den = (b.mean_en - a.mean_en).abs() / a.mean_en;
    let curve: Vec<String> = rows.iter().map(|s| format!("{:.2}/{:.2}", s.mean_sp, s.mean_en)).collect();
    verdict(dsp < 0.02 && den < 0.02, format!("T/L 6→8: ΔS_p {:.2}%, ΔE_N {:.2}%; S_p/E_N over T/L=1..8: {}", 100.0 * dsp, 100.0 * den, curve.join(" ")))
}

fn all_reset_limit() -> Result<String, String> {
    let mut count = 0;
    for sites in [2usize, 8, 16, 32] {
        let cfg = CircuitConfig::new(sites, 4 * sites, sites as f64, 11);
        let cut = Cut::half_chain(sites).map_err(|e| e.to_string())?;
        let zero = StabilizerState::zero(sites);
        for stream in 0..200 {
            let mut s = StabilizerState::zero(sites);
            let mut rng = RandomSource::new(cfg.seed, stream);
            for _ in 0..cfg.steps {
                step(&mut s, &cfg, &mut rng).map_err(|e| e.to_string())?;
            }
            let canonical = s.canonicalize().map_err(|e| e.to_string())?;
            if canonical != zero || log_purity(&s) != 0 || negativity(&s, &cut).map_err(|e| e.to_string())? != 0 {
                return Err(format!("L = {sites}, trajectory {stream} ended in\n{s}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} trajectories over L = 2, 8, 16, 32 all end in {{+Z_i}} with S_p = E_N = 0"))
}

fn determinism(dir: &Path, desk_dir: &Path) -> Result<String, String> {
    let spec = SweepSpec { seed: 21, ..SweepSpec::new(vec![8, 16], vec![2, 4], PGrid::List(vec![0.1, 0.3, 0.5]), 40) };
    let a = run_sweep(&SweepSpec { out: dir.join("det-a"), ..spec.clone() }, &quiet()).map_err(|e| e.to_string())?;
    let b = run_sweep(&SweepSpec { out: dir.join("det-b"), ..spec.clone() }, &quiet()).map_err(|e| e.to_string())?;
    let bytes_a = std::fs::read(&a.csv).map_err(|e| e.to_string())?;
    let same = bytes_a == std::fs::read(&b.csv).map_err(|e| e.to_string())?;

    let desk_csv = desk_dir.join("sweep.csv");
    let before = std::fs::read(&desk_csv).map_err(|e| e.to_string())?;
    let drop = [(32, 128, 0.24), (64, 256, 0.5), (16, 64, 0.0)];
    delete_cells(&desk_csv, &drop).map_err(|e| e.to_string())?;
    let desk_spec = SweepSpec { out: desk_dir.to_path_buf(), ..SweepSpec::preset("desk").unwrap() };
    let redo = run_sweep(&desk_spec, &quiet()).map_err(|e| e.to_string())?;
    let regenerated = std::fs::read(&desk_csv).map_err(|e| e.to_string())? == before;
    verdict(
        same && regenerated && redo.computed.len() == drop.len(),
        format!("repeat run identical: {same}; {} deleted desk cells regenerated byte-identically: {regenerated}", redo.computed.len()),
    )
}

fn main() {
    let mut report = Report { failures: 0 };
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir = tmp.path();
    let started = Instant::now();

    report.check(1, "oracle equivalence", oracle_equivalence());
    report.check(2, "Bell pair reset fixture", bell_fixture());
    report.check(3, "small-p slope S_p ≈ Tp", small_p_slope(dir));

    let desk_spec = SweepSpec { out: dir.join("desk"), ..SweepSpec::preset("desk").unwrap() };
    let desk = run_sweep(&desk_spec, &quiet()).expect("desk sweep").rows;
    report.check(4, "variance peaks grow with L", variance_peaks(&desk));
    report.check(5, "area law above, volume law below", area_law(&desk));
    report.check(6, "finite-size-scaling collapse", fss(&desk));
    report.check(7, "tension S0 band", tension_band(dir));
    report.check(8, "T/L saturation", saturation(dir));
    report.check(9, "q = 1 limit", all_reset_limit());
    report.check(10, "determinism and resume", determinism(dir, &desk_spec.out));

    println!("{} failed, {:.0} s total", report.failures, started.elapsed().as_secs_f64());
    if report.failures > 0 {
        std::process::exit(1);
    }
}
