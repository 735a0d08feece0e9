//! Source maps, peak picking and scoring against ground truth.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::operator::{PsdrTensor, SigmaGrid};

pub const DEFAULT_REL_THRESHOLD: f64 = 0.05;
pub const DEFAULT_MIN_SEPARATION: usize = 4;
pub const DEFAULT_MATCH_RADIUS: f64 = 4.0;

/// Per-pixel released mass over the regularized bins,
/// `sum_{k in S} sqrt(width_k) a_{m,n,k}`.
pub fn aggregate_map(a: &PsdrTensor, grid: &SigmaGrid) -> Result<Array2<f64>> {
    let (m, n, k) = a.dims();
    if k != grid.len() {
        return Err(Error::DimensionMismatch { expected: vec![m, n, grid.len()], actual: vec![m, n, k] });
    }
    let weights: Vec<f64> = grid
        .widths()
        .iter()
        .enumerate()
        .map(|(b, w)| if grid.in_support(b) { w.sqrt() } else { 0.0 })
        .collect();
    Ok(a.data().map_axis(Axis(2), |lane| lane.iter().zip(&weights).map(|(x, w)| x * w).sum()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub m: usize,
    pub n: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Descending by score, ties in `(m, n)` order.
    pub locations: Vec<Detection>,
    /// Absolute score threshold that was applied.
    pub threshold: f64,
}

fn is_local_max(map: &Array2<f64>, m: usize, n: usize) -> bool {
    let (rows, cols) = map.dim();
    let v = map[[m, n]];
    for i in m.saturating_sub(1)..=(m + 1).min(rows - 1) {
        for j in n.saturating_sub(1)..=(n + 1).min(cols - 1) {
            if (i, j) != (m, n) && map[[i, j]] > v {
                return false;
            }
        }
    }
    true
}

/// Local maxima (not exceeded by any of the 8 neighbours) above
/// `rel_threshold * max(map)`, thinned greedily so that no two kept peaks
/// are within Chebyshev distance `min_separation`.
pub fn find_sources(map: &Array2<f64>, rel_threshold: f64, min_separation: usize) -> Result<DetectionResult> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::invalid(format!("rel_threshold must lie in (0, 1), got {rel_threshold}")));
    }
    if min_separation == 0 {
        return Err(Error::invalid("min_separation must be positive"));
    }
    if map.iter().any(|v| !(*v >= 0.0) || v.is_infinite()) {
        return Err(Error::invalid("source map must be finite and >= 0"));
    }
    let max = map.iter().copied().fold(0.0, f64::max);
    let threshold = rel_threshold * max;
    if max == 0.0 {
        return Ok(DetectionResult { locations: Vec::new(), threshold });
    }
    let mut candidates: Vec<Detection> = map
        .indexed_iter()
        .filter(|&((m, n), &v)| v > threshold && is_local_max(map, m, n))
        .map(|((m, n), &score)| Detection { m, n, score })
        .collect();
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then((a.m, a.n).cmp(&(b.m, b.n))));
    let mut kept: Vec<Detection> = Vec::new();
    for c in candidates {
        let clear = kept.iter().all(|k| k.m.abs_diff(c.m).max(k.n.abs_diff(c.n)) > min_separation);
        if clear {
            kept.push(c);
        }
    }
    Ok(DetectionResult { locations: kept, threshold })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    /// Index into the detection list.
    pub detection: usize,
    /// Index into the truth list.
    pub truth: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pairs: Vec<MatchPair>,
}

impl MatchReport {
    /// Scores from counts. With no detections precision is 1, with no
    /// truth recall is 1; F1 is 0 whenever nothing matched unless both
    /// lists are empty.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, pairs: Vec<MatchPair>) -> Self {
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if tp > 0 {
            2.0 * precision * recall / (precision + recall)
        } else if fp == 0 && fn_ == 0 {
            1.0
        } else {
            0.0
        };
        MatchReport { true_positives: tp, false_positives: fp, false_negatives: fn_, precision, recall, f1, pairs }
    }
}

/// Greedy matching in descending score order: each detection takes the
/// nearest unmatched truth point within Euclidean distance `radius`.
pub fn match_and_score(detected: &DetectionResult, truth: &[(f64, f64)], radius: f64) -> Result<MatchReport> {
    if !(radius > 0.0) || radius.is_infinite() {
        return Err(Error::invalid(format!("match radius must be finite and > 0, got {radius}")));
    }
    let mut taken = vec![false; truth.len()];
    let mut pairs = Vec::new();
    for (di, d) in detected.locations.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (ti, &(tm, tn)) in truth.iter().enumerate() {
            if taken[ti] {
                continue;
            }
            let dist = (d.m as f64 - tm).hypot(d.n as f64 - tn);
            if dist <= radius && best.is_none_or(|(_, b)| dist < b) {
                best = Some((ti, dist));
            }
        }
        if let Some((ti, distance)) = best {
            taken[ti] = true;
            pairs.push(MatchPair { detection: di, truth: ti, distance });
        }
    }
    let tp = pairs.len();
    Ok(MatchReport::from_counts(tp, detected.locations.len() - tp, truth.len() - tp, pairs))
}
