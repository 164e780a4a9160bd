use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

fn check(scores: &[f64], positive: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != positive.len() {
        return Err(Error::DimensionMismatch {
            what: "scores vs labels",
            expected: scores.len(),
            got: positive.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::invalid("scores", format!("{s}")));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((n_pos, n_neg))
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auroc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let (n_pos, n_neg) = check(scores, positive)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // midranks (1-based) over tie groups
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| positive[i]).count();
        rank_sum_pos += midrank * pos_in_group as f64;
        start = end;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Empirical operating points. A sample is accepted as positive when its
/// score is `>=` the threshold. Thresholds run from `-inf` through every
/// distinct score to `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fnr: Vec<f64>,
}

impl RocCurve {
    pub fn new(scores: &[f64], positive: &[bool]) -> Result<Self> {
        let (n_pos, n_neg) = check(scores, positive)?;
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

        let mut curve = RocCurve {
            thresholds: vec![f64::NEG_INFINITY],
            fpr: vec![1.0],
            tpr: vec![1.0],
            fnr: vec![0.0],
        };
        // samples strictly below the current threshold
        let (mut pos_below, mut neg_below) = (0usize, 0usize);
        let mut k = 0;
        while k < idx.len() {
            let thr = scores[idx[k]];
            curve.push(thr, n_pos, n_neg, pos_below, neg_below);
            while k < idx.len() && scores[idx[k]] == thr {
                if positive[idx[k]] {
                    pos_below += 1;
                } else {
                    neg_below += 1;
                }
                k += 1;
            }
        }
        curve.push(f64::INFINITY, n_pos, n_neg, pos_below, neg_below);
        Ok(curve)
    }

    fn push(&mut self, thr: f64, n_pos: usize, n_neg: usize, pos_below: usize, neg_below: usize) {
        let fnr = pos_below as f64 / n_pos as f64;
        self.thresholds.push(thr);
        self.fpr.push((n_neg - neg_below) as f64 / n_neg as f64);
        self.fnr.push(fnr);
        self.tpr.push(1.0 - fnr);
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Equal error rate and its threshold. Where FPR and FNR cross between two
    /// operating points, both are interpolated linearly.
    pub fn eer(&self) -> (f64, f64) {
        let b = (0..self.len())
            .find(|&i| self.fnr[i] >= self.fpr[i])
            .expect("the +inf endpoint always has fnr >= fpr");
        if b == 0 {
            return (self.fpr[0], self.thresholds[0]);
        }
        let a = b - 1;
        let da = self.fpr[a] - self.fnr[a];
        let db = self.fpr[b] - self.fnr[b];
        let t = da / (da - db);
        let rate = self.fpr[a] + t * (self.fpr[b] - self.fpr[a]);
        let (ta, tb) = (self.thresholds[a], self.thresholds[b]);
        let thr = match (ta.is_finite(), tb.is_finite()) {
            (true, true) => ta + t * (tb - ta),
            (false, _) => tb,
            (true, false) => ta,
        };
        (rate, thr)
    }

    /// `threshold,fpr,tpr,fnr`, one row per operating point.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "threshold,fpr,tpr,fnr").map_err(io)?;
        for i in 0..self.len() {
            writeln!(out, "{},{},{},{}", self.thresholds[i], self.fpr[i], self.tpr[i], self.fnr[i]).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// `(eer, threshold)` from the empirical ROC.
pub fn eer(scores: &[f64], positive: &[bool]) -> Result<(f64, f64)> {
    Ok(RocCurve::new(scores, positive)?.eer())
}
