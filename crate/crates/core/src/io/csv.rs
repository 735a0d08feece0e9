//! Plain CSV writers and readers for sources, detections and scores.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::detect::{DetectionResult, MatchReport};
use crate::error::{Error, Result};
use crate::physics::PointSource;

pub const TRUTH_HEADER: &str = "m,n,rate,t_start,t_stop";
pub const DETECTIONS_HEADER: &str = "m,n,score";
pub const METRICS_HEADER: &str = "tp,fp,fn,precision,recall,f1";
pub const PAIRS_HEADER: &str = "det_m,det_n,truth_m,truth_n,distance";

pub fn truth_csv(sources: &[PointSource]) -> String {
    let mut s = format!("{TRUTH_HEADER}\n");
    for p in sources {
        let _ = writeln!(s, "{},{},{},{},{}", p.m, p.n, p.rate, p.t_start, p.t_stop);
    }
    s
}

fn parse_rows(path: &Path, min_cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, message: String| Error::Format { path: path.to_path_buf(), message: format!("line {line}: {message}") };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| bad(i + 1, format!("{f:?}: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() < min_cols {
            return Err(bad(i + 1, format!("expected at least {min_cols} columns")));
        }
        rows.push(vals);
    }
    Ok(rows)
}

/// Sources from a truth file written by [`truth_csv`].
pub fn read_truth_sources(path: &Path) -> Result<Vec<PointSource>> {
    parse_rows(path, 5)?
        .into_iter()
        .map(|r| {
            if r[0] < 0.0 || r[1] < 0.0 || r[0].fract() != 0.0 || r[1].fract() != 0.0 {
                return Err(Error::Format { path: path.to_path_buf(), message: "source pixel must be a non-negative integer".into() });
            }
            Ok(PointSource { m: r[0] as usize, n: r[1] as usize, rate: r[2], t_start: r[3], t_stop: r[4] })
        })
        .collect()
}

/// Locations from the first two columns of any CSV with a header line.
pub fn read_locations(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(parse_rows(path, 2)?.into_iter().map(|r| (r[0], r[1])).collect())
}

pub fn detections_csv(d: &DetectionResult) -> String {
    let mut s = format!("{DETECTIONS_HEADER}\n");
    for l in &d.locations {
        let _ = writeln!(s, "{},{},{}", l.m, l.n, l.score);
    }
    s
}

pub fn metrics_csv(r: &MatchReport) -> String {
    format!(
        "{METRICS_HEADER}\n{},{},{},{},{},{}\n",
        r.true_positives, r.false_positives, r.false_negatives, r.precision, r.recall, r.f1
    )
}

pub fn pairs_csv(r: &MatchReport, detected: &DetectionResult, truth: &[(f64, f64)]) -> String {
    let mut s = format!("{PAIRS_HEADER}\n");
    for p in &r.pairs {
        let d = detected.locations[p.detection];
        let t = truth[p.truth];
        let _ = writeln!(s, "{},{},{},{},{}", d.m, d.n, t.0, t.1, p.distance);
    }
    s
}
