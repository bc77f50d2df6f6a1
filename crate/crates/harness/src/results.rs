//! Result rows, per-cell summaries and their CSV encodings.
//!
//! `results.csv` columns, in order:
//!
//! ```text
//! experiment,algorithm,sweep_value,seed,sample,warmup,R,per_user,iterations,wall_time_us
//! ```
//!
//! `per_user` holds the user rates joined by `;`. `iterations` is the WMMSE
//! outer iteration count, the inner iteration count for GLNN, and empty for
//! metadata rows. Phase-boundary rows leave `R`, `per_user`, `iterations`
//! and `wall_time_us` empty.
//!
//! `summary.csv` columns:
//!
//! ```text
//! experiment,algorithm,sweep_value,samples,mean_R,mean_per_user,mean_iterations,median_wall_time_us
//! ```
//!
//! Averages skip warm-up rows. Columns whose name contains `wall_time` are
//! the only ones that may differ between runs with the same seed and config.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use anyhow::Result;

use crate::settings::{Algorithm, ExperimentKind};

pub const SCHEMA_VERSION: &str = "glnn-lab-results/1";

pub const RESULTS_HEADER: &str = "experiment,algorithm,sweep_value,seed,sample,warmup,R,per_user,iterations,wall_time_us";
pub const SUMMARY_HEADER: &str =
    "experiment,algorithm,sweep_value,samples,mean_R,mean_per_user,mean_iterations,median_wall_time_us";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub algorithm: Algorithm,
    pub sweep_value: f64,
    pub seed: u64,
    pub sample: usize,
    pub warmup: bool,
    /// Sum SE on the true channel; `None` on metadata rows.
    pub rate: Option<f64>,
    pub per_user: Vec<f64>,
    pub iterations: Option<usize>,
    pub wall_time_us: Option<f64>,
}

impl ResultRow {
    fn sort_key(&self, other: &Self) -> Ordering {
        self.experiment
            .cmp(&other.experiment)
            .then(self.algorithm.cmp(&other.algorithm))
            .then(self.sweep_value.total_cmp(&other.sweep_value))
            .then(self.seed.cmp(&other.seed))
            .then(self.sample.cmp(&other.sample))
    }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| a.sort_key(b));
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join_rates(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// Writes the header comments, column names and rows.
pub fn write_results<W: Write>(out: &mut W, rows: &[ResultRow], comments: &[String]) -> Result<()> {
    writeln!(out, "# schema: {SCHEMA_VERSION}")?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.algorithm,
            r.sweep_value,
            r.seed,
            r.sample,
            u8::from(r.warmup),
            opt(r.rate),
            join_rates(&r.per_user),
            opt(r.iterations),
            r.wall_time_us.map(|t| format!("{t:.3}")).unwrap_or_default(),
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub experiment: ExperimentKind,
    pub algorithm: Algorithm,
    pub sweep_value: f64,
    pub samples: usize,
    pub mean_rate: f64,
    pub mean_per_user: Vec<f64>,
    pub mean_iterations: f64,
    pub median_wall_time_us: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Aggregates non-warm-up rows into one summary per `(algorithm, key)`,
/// where `key` maps a row to its grouping value.
pub fn summarize_by<F>(rows: &[ResultRow], key: F) -> Vec<SummaryRow>
where
    F: Fn(&ResultRow) -> f64,
{
    let mut groups: BTreeMap<(Algorithm, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.warmup && r.rate.is_some()) {
        let k = key(r);
        groups.entry((r.algorithm, k.to_bits())).or_default().push(r);
    }
    let mut out: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((algorithm, bits), group)| {
            let n = group.len() as f64;
            let users = group[0].per_user.len();
            let mut per_user = vec![0.0; users];
            for r in &group {
                for (acc, v) in per_user.iter_mut().zip(&r.per_user) {
                    *acc += v;
                }
            }
            per_user.iter_mut().for_each(|v| *v /= n);
            let mut times: Vec<f64> = group.iter().filter_map(|r| r.wall_time_us).collect();
            SummaryRow {
                experiment: group[0].experiment,
                algorithm,
                sweep_value: f64::from_bits(bits),
                samples: group.len(),
                mean_rate: group.iter().map(|r| r.rate.unwrap_or(0.0)).sum::<f64>() / n,
                mean_per_user: per_user,
                mean_iterations: group.iter().map(|r| r.iterations.unwrap_or(0) as f64).sum::<f64>() / n,
                median_wall_time_us: median(&mut times),
            }
        })
        .collect();
    out.sort_by(|a, b| a.algorithm.cmp(&b.algorithm).then(a.sweep_value.total_cmp(&b.sweep_value)));
    out
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    summarize_by(rows, |r| r.sweep_value)
}

pub fn write_summary<W: Write>(out: &mut W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "# schema: {SCHEMA_VERSION}")?;
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3}",
            s.experiment,
            s.algorithm,
            s.sweep_value,
            s.samples,
            s.mean_rate,
            join_rates(&s.mean_per_user),
            s.mean_iterations,
            s.median_wall_time_us
        )?;
    }
    Ok(())
}

/// Drops every column whose header contains `wall_time`, plus comment lines.
///
/// What remains is the part of a CSV that must be identical across runs.
pub fn strip_timing_columns(csv: &str) -> String {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let Some(header) = lines.next() else {
        return String::new();
    };
    let keep: Vec<bool> = header.split(',').map(|c| !c.contains("wall_time")).collect();
    let filter = |line: &str| -> String {
        line.split(',')
            .zip(keep.iter().chain(std::iter::repeat(&true)))
            .filter(|(_, k)| **k)
            .map(|(c, _)| c)
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = filter(header);
    out.push('\n');
    for l in lines {
        out.push_str(&filter(l));
        out.push('\n');
    }
    out
}
