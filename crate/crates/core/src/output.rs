//! CSV output for plotting.
//!
//! Columns are `experiment,policy,series,t,cum_regret,per_individual_regret`.
//! `series` is `mean`, `std`, or a replicate index. Floats are written in
//! Rust's shortest round-trip form, so re-parsing recovers them exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::harness::AggregateResult;

pub const CSV_HEADER: &str = "experiment,policy,series,t,cum_regret,per_individual_regret";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{experiment}/{policy}: non-finite value at t = {t}")]
    NonFinite {
        experiment: String,
        policy: String,
        t: usize,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTraceRow {
    pub experiment: String,
    pub policy: String,
    pub series: String,
    pub t: usize,
    pub cum_regret: f64,
    pub per_individual_regret: f64,
}

/// Rounds kept under `stride`: every `stride`-th round plus the last one.
pub fn thinned_rounds(horizon: usize, stride: usize) -> impl Iterator<Item = usize> {
    let stride = stride.max(1);
    (1..=horizon).filter(move |&t| t % stride == 0 || t == horizon)
}

fn push_series(
    out: &mut String,
    r: &AggregateResult,
    series: &str,
    cum: &[f64],
    per: &[f64],
    stride: usize,
) -> Result<(), OutputError> {
    for t in thinned_rounds(cum.len(), stride) {
        let (c, p) = (cum[t - 1], per[t - 1]);
        if !(c.is_finite() && p.is_finite()) {
            return Err(OutputError::NonFinite {
                experiment: r.experiment.clone(),
                policy: r.policy.clone(),
                t,
            });
        }
        let _ = writeln!(out, "{},{},{},{},{},{}", r.experiment, r.policy, series, t, c, p);
    }
    Ok(())
}

/// Renders results as CSV text.
pub fn render_csv(results: &[AggregateResult], stride: usize) -> Result<String, OutputError> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        push_series(&mut out, r, "mean", &r.mean, &r.per_individual_mean, stride)?;
        push_series(&mut out, r, "std", &r.std, &r.per_individual_std, stride)?;
        if let Some(reps) = &r.replicates {
            for (k, (cum, &d)) in reps.iter().zip(&r.dims).enumerate() {
                let per: Vec<f64> = cum.iter().map(|c| c / d as f64).collect();
                push_series(&mut out, r, &k.to_string(), cum, &per, stride)?;
            }
        }
    }
    Ok(out)
}

/// Writes `results` to `path`; an empty slice yields a header-only file.
pub fn emit_csv(results: &[AggregateResult], path: &Path, stride: usize) -> Result<(), OutputError> {
    let text = render_csv(results, stride)?;
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses CSV text produced by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvTraceRow>, OutputError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => {
            return Err(OutputError::Malformed {
                line: 1,
                reason: "missing header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let bad = |reason: String| OutputError::Malformed { line: i + 1, reason };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(format!("expected 6 fields, got {}", f.len())));
            }
            Ok(CsvTraceRow {
                experiment: f[0].to_string(),
                policy: f[1].to_string(),
                series: f[2].to_string(),
                t: f[3].parse().map_err(|e| bad(format!("t: {e}")))?,
                cum_regret: f[4].parse().map_err(|e| bad(format!("cum_regret: {e}")))?,
                per_individual_regret: f[5].parse().map_err(|e| bad(format!("per_individual_regret: {e}")))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(mean: Vec<f64>) -> AggregateResult {
        let n = mean.len();
        AggregateResult {
            experiment: "e".into(),
            policy: "nse".into(),
            per_individual_mean: mean.iter().map(|x| x / 4.0).collect(),
            mean,
            std: vec![0.0; n],
            per_individual_std: vec![0.0; n],
            finals: vec![],
            dims: vec![4],
            replicates: None,
        }
    }

    #[test]
    fn empty_results_give_header_only() {
        assert_eq!(render_csv(&[], 1).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn stride_keeps_last_round() {
        assert_eq!(thinned_rounds(10, 4).collect::<Vec<_>>(), vec![4, 8, 10]);
        assert_eq!(thinned_rounds(3, 1).count(), 3);
    }

    #[test]
    fn round_trip() {
        let r = result(vec![0.1, 0.30000000000000004, 1e-17, 12345.678]);
        let rows = parse_csv(&render_csv(std::slice::from_ref(&r), 1).unwrap()).unwrap();
        assert_eq!(rows.len(), 8);
        for (row, want) in rows.iter().zip(&r.mean) {
            assert_eq!(row.cum_regret, *want);
        }
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(matches!(
            render_csv(&[result(vec![1.0, f64::NAN])], 1),
            Err(OutputError::NonFinite { t: 2, .. })
        ));
    }
}
