//! The sweep CSV format.

use std::io::{Read, Write};
use std::path::Path;

use resetsim::stats::EnsembleKey;
use resetsim::EnsembleStats;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const HEADER: &str = "L,T,p,n_samples,mean_sp,var_sp,se_mean_sp,se_var_sp,mean_en,var_en,se_mean_en,se_var_en";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Row {
    #[serde(rename = "L")]
    sites: usize,
    #[serde(rename = "T")]
    steps: usize,
    p: f64,
    n_samples: usize,
    mean_sp: f64,
    var_sp: f64,
    se_mean_sp: f64,
    se_var_sp: f64,
    mean_en: f64,
    var_en: f64,
    se_mean_en: f64,
    se_var_en: f64,
}

impl From<&EnsembleStats> for Row {
    fn from(s: &EnsembleStats) -> Self {
        Row {
            sites: s.key.sites,
            steps: s.key.steps,
            p: s.key.p,
            n_samples: s.n_samples,
            mean_sp: s.mean_sp,
            var_sp: s.var_sp,
            se_mean_sp: s.se_mean_sp,
            se_var_sp: s.se_var_sp,
            mean_en: s.mean_en,
            var_en: s.var_en,
            se_mean_en: s.se_mean_en,
            se_var_en: s.se_var_en,
        }
    }
}

impl From<Row> for EnsembleStats {
    fn from(r: Row) -> Self {
        EnsembleStats {
            key: EnsembleKey { sites: r.sites, steps: r.steps, p: r.p },
            n_samples: r.n_samples,
            mean_sp: r.mean_sp,
            var_sp: r.var_sp,
            se_mean_sp: r.se_mean_sp,
            se_var_sp: r.se_var_sp,
            mean_en: r.mean_en,
            var_en: r.var_en,
            se_mean_en: r.se_mean_en,
            se_var_en: r.se_var_en,
        }
    }
}

pub fn write_stats<W: Write>(out: W, rows: &[EnsembleStats]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER.split(','))?;
    for s in rows {
        w.serialize(Row::from(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn stats_to_string(rows: &[EnsembleStats]) -> String {
    let mut buf = Vec::new();
    write_stats(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_stats<R: Read>(input: R) -> std::result::Result<Vec<EnsembleStats>, String> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.iter().collect::<Vec<_>>().join(",");
    if header != HEADER {
        return Err(format!("unexpected header {header:?}"));
    }
    r.deserialize::<Row>().map(|row| row.map(EnsembleStats::from).map_err(|e| e.to_string())).collect()
}

pub fn load(path: &Path) -> Result<Vec<EnsembleStats>> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    read_stats(std::io::BufReader::new(file)).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated table behind.
pub fn save(path: &Path, rows: &[EnsembleStats]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let file = std::fs::File::create(&tmp).map_err(CliError::io(&tmp))?;
    write_stats(std::io::BufWriter::new(file), rows).map_err(CliError::csv(&tmp))?;
    std::fs::rename(&tmp, path).map_err(CliError::io(path))
}

/// Rows grouped by `T/L`, each group sorted by `(L, p)`.
pub fn by_ratio(rows: &[EnsembleStats]) -> Vec<(f64, Vec<EnsembleStats>)> {
    let mut groups: Vec<(f64, Vec<EnsembleStats>)> = Vec::new();
    for s in rows {
        let ratio = s.key.steps as f64 / s.key.sites as f64;
        match groups.iter_mut().find(|(r, _)| (*r - ratio).abs() < 1e-12) {
            Some((_, g)) => g.push(*s),
            None => groups.push((ratio, vec![*s])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, g) in &mut groups {
        g.sort_by(|a, b| a.key.sites.cmp(&b.key.sites).then(a.key.p.total_cmp(&b.key.p)));
    }
    groups
}
