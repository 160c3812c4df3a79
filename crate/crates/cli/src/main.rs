use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use resetsim::fss::FitBounds;
use resetsim::stats::DerivativeMethod;
use resetsim::Ansatz;
use resetsim_cli::analysis::{self, CollapseArgs, Quantity};
use resetsim_cli::oracle_check::{oracle_check, OracleArgs};
use resetsim_cli::{run_sweep, CliError, RunOptions, SweepSpec};

#[derive(Parser)]
#[command(name = "resetsim", version, about = "Random Clifford circuits with reset channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnsatzArg {
    Variance,
    Bare,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) an ensemble sweep and write sweep.csv + manifest.json.
    RunSweep {
        /// TOML config; may name a preset to start from.
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// One of smoke, desk, tl-saturation, boundary, broad-q.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        /// Overwrite outputs of a different sweep in the same directory.
        #[arg(long)]
        fresh: bool,
        /// Print the resolved spec as TOML and exit.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Finite-size-scaling collapse fit of one sweep column.
    Collapse {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "var-sp")]
        quantity: Quantity,
        /// Defaults to variance for var-* quantities, bare otherwise.
        #[arg(long, value_enum)]
        ansatz: Option<AnsatzArg>,
        /// T/L to use when the CSV holds several.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        p_window: Option<Vec<f64>>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.05, 0.45])]
        pc_bounds: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.3, 4.0])]
        nu_bounds: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        zeta: f64,
        #[arg(long, default_value_t = 40)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Second derivative in p per (L, T) with peak locations.
    Derivative {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "sp")]
        quantity: Quantity,
        /// Fit a local quadratic over 2w+1 points instead of three-point differences.
        #[arg(long)]
        half_width: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Co-simulate random circuits on the stabilizer and dense engines.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        max_l: usize,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.5])]
        p: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        steps_per_site: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Overlay the large-d prediction and fit the tension S0 above p_c.
    Predict {
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        p_c_ref: f64,
        /// Fixed tension instead of fitting it.
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RunSweep { config, preset, seed, threads, out, samples, fresh, dry_run, quiet } => {
            let mut spec = match (config, preset) {
                (Some(path), _) => SweepSpec::from_file(&path)?,
                (None, Some(name)) => SweepSpec::preset(&name)?,
                (None, None) => return Err(CliError::Validation("give --config or --preset".into())),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(o) = out {
                spec.out = o;
            }
            if let Some(n) = samples {
                spec.n_samples = n;
            }
            spec.validate()?;
            if dry_run {
                print!("{}", spec.to_toml());
                return Ok(());
            }
            let done = run_sweep(&spec, &RunOptions { threads, fresh, quiet })?;
            println!("{} rows ({} computed, {} reused) -> {}", done.rows.len(), done.computed.len(), done.reused, done.csv.display());
        }
        Command::Collapse { input, quantity, ansatz, ratio, p_window, pc_bounds, nu_bounds, zeta, bootstrap, seed, out } => {
            let args = CollapseArgs {
                ansatz: ansatz.map(|a| match a {
                    AnsatzArg::Variance => Ansatz::Variance,
                    AnsatzArg::Bare => Ansatz::Bare,
                }),
                ratio,
                window: p_window.map(|w| (w[0], w[1])),
                bounds: FitBounds { p_c: (pc_bounds[0], pc_bounds[1]), nu: (nu_bounds[0], nu_bounds[1]) },
                zeta,
                bootstrap,
                seed,
                out,
                ..CollapseArgs::new(input, quantity)
            };
            let r = analysis::collapse(&args)?;
            println!(
                "p_c = {:.4} ± {:.4}, nu = {:.4} ± {:.4}, quality = {:.4} (sizes {:?}, T/L = {})",
                r.fit.p_c, r.fit.p_c_err, r.fit.nu, r.fit.nu_err, r.fit.quality, r.sizes, r.ratio
            );
        }
        Command::Derivative { input, quantity, half_width, out } => {
            let method = half_width.map_or(DerivativeMethod::ThreePoint, |w| DerivativeMethod::LocalQuadratic { half_width: w });
            let r = analysis::write_derivative(&input, quantity, method, &out)?;
            println!("L,T,p_peak,peak");
            for pk in &r.peaks {
                println!("{},{},{},{}", pk.sites, pk.steps, pk.p_peak, pk.peak);
            }
            if let Some(a) = r.boundary_exponent {
                println!("p_peak ~ (T/L)^{a:.3}");
            }
        }
        Command::OracleCheck { max_l, cases, seed, p, steps_per_site, threads } => {
            let args = OracleArgs { max_sites: max_l, cases, seed, p_values: p, steps_per_site };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build().map_err(|e| CliError::Validation(e.to_string()))?;
            let report = pool.install(|| oracle_check(&args))?;
            println!("bell fixture: {}", if report.bell_fixture { "ok" } else { "MISMATCH" });
            for s in &report.sizes {
                println!(
                    "L={}: {} cases, S_p {}/{}, E_N {}/{}, state {}/{} (max errors {:.1e}, {:.1e}, {:.1e})",
                    s.sites, s.cases, s.sp_matches, s.cases, s.en_matches, s.cases, s.state_matches, s.cases, s.max_sp_error, s.max_en_error, s.max_state_diff
                );
            }
            if !report.passed() {
                return Err(CliError::OracleMismatch(format!("{} mismatching cases", report.mismatches())));
            }
        }
        Command::Predict { input, p_c_ref, s0, out } => {
            let r = analysis::write_predict(&input, p_c_ref, s0, &out)?;
            println!("T/L,p,q,s0,intercept,sizes");
            for t in &r.tension {
                println!("{},{},{},{:.4},{:.4},{}", t.ratio, t.p, t.q, t.s0, t.intercept, t.sizes);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
