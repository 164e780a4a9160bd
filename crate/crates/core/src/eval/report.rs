use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KernelStructureReport, RocCurve};
use crate::error::{Error, Result};
use crate::kernel::KernelKind;

pub const SCHEMA_VERSION: u32 = 1;

/// Dev-split evaluation of one kernel. Scores are oriented so that higher
/// means more likely bona fide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub kind: KernelKind,
    pub positive_class: String,
    pub n_train: usize,
    pub n_dev: usize,
    pub auroc: f64,
    pub eer: f64,
    pub eer_threshold: f64,
    pub svm_iterations: usize,
    pub svm_converged: bool,
    pub n_support: usize,
    pub kernel_structure: KernelStructureReport,
    pub config: serde_json::Value,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl EvalReport {
    /// Write the JSON report and the ROC points. Nothing is written unless
    /// the metrics are present and finite.
    pub fn write(&self, json_path: &Path, roc: &RocCurve, roc_path: &Path) -> Result<()> {
        if roc.is_empty() || self.n_dev == 0 {
            return Err(Error::EmptyMetrics("no dev scores"));
        }
        if !(self.auroc.is_finite() && self.eer.is_finite()) {
            return Err(Error::EmptyMetrics("auroc/eer not computed"));
        }
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: json_path.to_path_buf(),
            source,
        })?;
        write_atomic(json_path, (text + "\n").as_bytes())?;
        roc.write_csv(roc_path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        crate::kernel::read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::kernel_structure;
    use ndarray::Array2;

    fn sample(auroc: f64) -> EvalReport {
        EvalReport {
            schema_version: SCHEMA_VERSION,
            kind: KernelKind::Quantum,
            positive_class: "bonafide".into(),
            n_train: 2,
            n_dev: 4,
            auroc,
            eer: 0.25,
            eer_threshold: 0.1,
            svm_iterations: 3,
            svm_converged: true,
            n_support: 2,
            kernel_structure: kernel_structure(&Array2::ones((0, 0)), &[], &[]).unwrap(),
            config: serde_json::json!({"seed": 1}),
        }
    }

    #[test]
    fn round_trip_and_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let (j, r) = (dir.path().join("r.json"), dir.path().join("roc.csv"));
        let scores = [0.9, 0.1, 0.4, 0.4];
        let roc = RocCurve::new(&scores, &[true, false, true, false]).unwrap();
        let rep = sample(0.875);
        rep.write(&j, &roc, &r).unwrap();
        let back = EvalReport::read(&j).unwrap();
        assert_eq!(back.auroc, rep.auroc);
        assert_eq!(back.eer, rep.eer);
        assert_eq!(back.kind, rep.kind);
        let rows = std::fs::read_to_string(&r).unwrap().lines().count() - 1;
        assert_eq!(rows, 3 + 2);
    }

    #[test]
    fn empty_metrics_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let (j, r) = (dir.path().join("r.json"), dir.path().join("roc.csv"));
        let roc = RocCurve::new(&[0.9, 0.1], &[true, false]).unwrap();
        assert!(matches!(sample(f64::NAN).write(&j, &roc, &r), Err(Error::EmptyMetrics(_))));
        assert!(!j.exists() && !r.exists());
    }

    #[test]
    fn unwritable_path() {
        let roc = RocCurve::new(&[0.9, 0.1], &[true, false]).unwrap();
        let p = Path::new("/nonexistent-dir/r.json");
        assert!(sample(0.5).write(p, &roc, Path::new("/nonexistent-dir/roc.csv")).is_err());
    }
}
