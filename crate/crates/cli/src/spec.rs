//! Sweep specifications, presets and config-file loading.

use std::path::{Path, PathBuf};

use resetsim::rng::derive_seed;
use resetsim::{CircuitConfig, CutPolicy};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// The p axis, either listed or as an inclusive arithmetic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl PGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            PGrid::List(ref v) => Ok(v.clone()),
            PGrid::Range { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(CliError::Validation(format!("bad p range {start}..={stop} step {step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // round away accumulated binary noise so 0.06 prints as 0.06
                Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
            }
        }
    }
}

/// Whether `p_grid` holds `p` itself or the per-site rate `q = p/L`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridUnits {
    #[default]
    P,
    Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    /// `T/L` values.
    #[serde(default = "default_ratios")]
    pub ratios: Vec<usize>,
    pub p_grid: PGrid,
    #[serde(default)]
    pub grid_units: GridUnits,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cut: CutPolicy,
    /// Bootstrap resamples for the standard errors.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_ratios() -> Vec<usize> {
    vec![4]
}

fn default_samples() -> usize {
    500
}

fn default_bootstrap() -> usize {
    200
}

fn default_out() -> PathBuf {
    PathBuf::from("resetsim-out")
}

/// One `(L, T, p)` point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub p: f64,
    pub seed: u64,
    /// Trajectories use streams `streams.0 .. streams.1`.
    pub streams: (u64, u64),
}

impl Cell {
    pub fn config(&self) -> CircuitConfig {
        CircuitConfig::new(self.sites, self.steps, self.p, self.seed)
    }

    pub fn key(&self) -> (usize, usize, u64) {
        (self.sites, self.steps, self.p.to_bits())
    }
}

pub const PRESETS: [&str; 5] = ["smoke", "desk", "tl-saturation", "boundary", "broad-q"];

impl SweepSpec {
    pub fn new(sizes: Vec<usize>, ratios: Vec<usize>, p_grid: PGrid, n_samples: usize) -> Self {
        Self {
            sizes,
            ratios,
            p_grid,
            grid_units: GridUnits::P,
            n_samples,
            seed: 0,
            cut: CutPolicy::HalfChain,
            bootstrap: default_bootstrap(),
            out: default_out(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let range = |start, stop, step| PGrid::Range { start, stop, step };
        let spec = match name {
            "smoke" => Self::new(vec![8], vec![4], PGrid::List(vec![0.0, 0.5]), 10),
            "desk" => Self::new(vec![16, 32, 64], vec![4], range(0.0, 0.5, 0.02), 500),
            "tl-saturation" => Self::new(vec![32], (1..=8).collect(), PGrid::List(vec![0.25]), 500),
            // p_c drifts down as T/L grows, so the grid is dense at small p
            "boundary" => Self::new(
                vec![8, 16, 24],
                (1..=10).map(|i| 4 * i).collect(),
                PGrid::List(vec![0.005, 0.01, 0.015, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4]),
                200,
            ),
            "broad-q" => Self {
                grid_units: GridUnits::Q,
                ..Self::new(vec![8, 16, 32], vec![4], PGrid::List(vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]), 200)
            },
            other => return Err(CliError::Validation(format!("unknown preset {other:?}; known: {}", PRESETS.join(", ")))),
        };
        Ok(Self { out: PathBuf::from(name), ..spec })
    }

    /// Parses a TOML config. A `preset = "..."` key supplies defaults that the
    /// remaining keys override.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| CliError::Validation(format!("config: {e}")))?;
        let merged = match table.remove("preset") {
            Some(toml::Value::String(name)) => {
                let mut base = toml::Table::try_from(Self::preset(&name)?).expect("spec serializes to a table");
                base.extend(table);
                base
            }
            Some(other) => return Err(CliError::Validation(format!("config: preset must be a string, got {other}"))),
            None => table,
        };
        let spec: Self = merged.try_into().map_err(|e| CliError::Validation(format!("config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if self.sizes.is_empty() || self.ratios.is_empty() || self.p_grid.values()?.is_empty() {
            return bad("sizes, ratios and p_grid must all be nonempty".into());
        }
        if self.n_samples < 2 {
            return bad(format!("n_samples = {} but at least 2 are needed", self.n_samples));
        }
        if self.ratios.contains(&0) {
            return bad("T/L ratios must be positive".into());
        }
        for (name, dup) in [("sizes", has_duplicates(&self.sizes)), ("ratios", has_duplicates(&self.ratios))] {
            if dup {
                return bad(format!("{name} contains duplicates"));
            }
        }
        let mut ps = self.p_grid.values()?;
        ps.sort_by(f64::total_cmp);
        if ps.windows(2).any(|w| w[0] == w[1]) {
            return bad("p_grid contains duplicates".into());
        }
        for cell in self.cells()? {
            let cfg = CircuitConfig { cut: self.cut.clone(), ..cell.config() };
            cfg.validate()?;
        }
        Ok(())
    }

    /// All cells in output order: `L`, then `T/L`, then `p`, each ascending.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable();
        let mut ratios = self.ratios.clone();
        ratios.sort_unstable();
        let mut grid = self.p_grid.values()?;
        grid.sort_by(f64::total_cmp);
        let mut cells = Vec::new();
        for &sites in &sizes {
            for &ratio in &ratios {
                let mut ps: Vec<f64> = grid
                    .iter()
                    .map(|&v| match self.grid_units {
                        GridUnits::P => v,
                        GridUnits::Q => v * sites as f64,
                    })
                    .collect();
                ps.sort_by(f64::total_cmp);
                for p in ps {
                    let steps = ratio * sites;
                    let seed = derive_seed(self.seed, &[sites as u64, steps as u64, p.to_bits()]);
                    cells.push(Cell { sites, steps, p, seed, streams: (0, self.n_samples as u64) });
                }
            }
        }
        Ok(cells)
    }
}

fn has_duplicates(v: &[usize]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.windows(2).any(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_is_clean() {
        let g = PGrid::Range { start: 0.0, stop: 0.5, step: 0.02 }.values().unwrap();
        assert_eq!(g.len(), 26);
        assert_eq!(g[3], 0.06);
        assert_eq!(g[25], 0.5);
        assert!(PGrid::Range { start: 0.0, stop: 0.5, step: 0.0 }.values().is_err());
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            SweepSpec::preset(name).unwrap().validate().unwrap();
        }
        assert!(SweepSpec::preset("nope").is_err());
        let desk = SweepSpec::preset("desk").unwrap();
        assert_eq!(desk.cells().unwrap().len(), 78);
    }

    #[test]
    fn cell_order_and_seeds() {
        let spec = SweepSpec::new(vec![16, 8], vec![2, 1], PGrid::List(vec![0.5, 0.1]), 4);
        let cells = spec.cells().unwrap();
        let keys: Vec<_> = cells.iter().map(|c| (c.sites, c.steps, c.p)).collect();
        assert_eq!(keys[..4], [(8, 8, 0.1), (8, 8, 0.5), (8, 16, 0.1), (8, 16, 0.5)]);
        assert_eq!(keys[4], (16, 16, 0.1));
        let mut seeds: Vec<_> = cells.iter().map(|c| c.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), cells.len());
    }

    #[test]
    fn q_units_scale_with_size() {
        let spec = SweepSpec::preset("broad-q").unwrap();
        let cells = spec.cells().unwrap();
        assert!(cells.iter().any(|c| c.sites == 32 && c.p == 32.0));
        assert!(cells.iter().any(|c| c.sites == 8 && c.p == 0.8));
    }

    #[test]
    fn config_files_and_presets_merge() {
        let spec = SweepSpec::from_toml("preset = \"desk\"\nn_samples = 20\nseed = 7\n").unwrap();
        assert_eq!((spec.n_samples, spec.seed, spec.sizes.clone()), (20, 7, vec![16, 32, 64]));
        let spec = SweepSpec::from_toml("sizes = [4]\np_grid = { start = 0.0, stop = 0.2, step = 0.1 }\n").unwrap();
        assert_eq!(spec.p_grid.values().unwrap(), [0.0, 0.1, 0.2]);
        assert_eq!((spec.n_samples, spec.ratios.clone()), (500, vec![4]));
        let round = SweepSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(round, spec);
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            "sizes = []\np_grid = [0.1]",
            "sizes = [4]\np_grid = [0.1]\nn_samples = 1",
            "sizes = [5]\np_grid = [0.1]",
            "sizes = [4]\np_grid = [5.0]",
            "sizes = [4, 4]\np_grid = [0.1]",
            "sizes = [4]\np_grid = [0.1, 0.1]",
            "sizes = [4]\np_grid = [0.1]\nbogus = 1",
            "preset = 3",
        ] {
            assert!(matches!(SweepSpec::from_toml(text), Err(CliError::Validation(_)) | Err(CliError::Core(_))), "{text}");
        }
    }
}
