use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spoof::Label;

/// Summary of one group of kernel entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub comparison: String,
    /// NaN (`null` in JSON) for an empty group.
    #[serde(deserialize_with = "null_as_nan")]
    pub mean: f64,
    /// Population standard deviation.
    #[serde(deserialize_with = "null_as_nan")]
    pub std: f64,
    pub count: usize,
    /// `100 * (mean - 1)`: change relative to perfect self-similarity.
    #[serde(deserialize_with = "null_as_nan")]
    pub delta_pct: f64,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl GroupStat {
    fn from_values(comparison: &str, v: &[f64]) -> Self {
        let n = v.len();
        let (mean, std) = if n == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let m = v.iter().sum::<f64>() / n as f64;
            (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt())
        };
        Self {
            comparison: comparison.to_string(),
            mean,
            std,
            count: n,
            delta_pct: 100.0 * (mean - 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelStructureReport {
    pub groups: Vec<GroupStat>,
}

impl KernelStructureReport {
    pub fn group(&self, comparison: &str) -> Option<&GroupStat> {
        self.groups.iter().find(|g| g.comparison == comparison)
    }
}

pub const BONAFIDE_SAME: &str = "bonafide-bonafide (same sample)";
pub const SPOOF_SAME: &str = "spoof-spoof (same sample)";
pub const BONAFIDE_DIFFERENT: &str = "bonafide-bonafide (different)";
pub const SPOOF_DIFFERENT: &str = "spoof-spoof (different)";
pub const CROSS: &str = "bonafide-spoof";

pub fn cross_patch_name(slot: usize) -> String {
    format!("bonafide-spoof (patch {})", slot + 1)
}

fn check_square(k: &Array2<f64>, n: usize) -> Result<()> {
    if k.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "kernel matrix vs labels",
            expected: n,
            got: k.nrows(),
        });
    }
    Ok(())
}

/// Group kernel entries by class relation. Diagonal entries form the
/// same-sample groups; off-diagonal within-class pairs are counted once
/// (`i < j`); cross-class covers every bona fide/spoof pair. `slot_kernels`
/// are optional per-patch kernels, each reported as a cross-class group.
pub fn kernel_structure(
    k: &Array2<f64>,
    labels: &[Label],
    slot_kernels: &[Array2<f64>],
) -> Result<KernelStructureReport> {
    let n = labels.len();
    check_square(k, n)?;
    for s in slot_kernels {
        check_square(s, n)?;
    }

    let of = |l: Label| -> Vec<usize> { (0..n).filter(|&i| labels[i] == l).collect() };
    let (bona, spoof) = (of(Label::Bonafide), of(Label::Spoof));

    let diag = |idx: &[usize]| idx.iter().map(|&i| k[[i, i]]).collect::<Vec<_>>();
    let within = |idx: &[usize]| {
        let mut v = Vec::new();
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                v.push(k[[i, j]]);
            }
        }
        v
    };
    let cross = |m: &Array2<f64>| {
        bona.iter()
            .flat_map(|&i| spoof.iter().map(move |&j| m[[i, j]]))
            .collect::<Vec<_>>()
    };

    let mut groups = vec![
        GroupStat::from_values(BONAFIDE_SAME, &diag(&bona)),
        GroupStat::from_values(SPOOF_SAME, &diag(&spoof)),
        GroupStat::from_values(BONAFIDE_DIFFERENT, &within(&bona)),
        GroupStat::from_values(SPOOF_DIFFERENT, &within(&spoof)),
        GroupStat::from_values(CROSS, &cross(k)),
    ];
    for (s, m) in slot_kernels.iter().enumerate() {
        groups.push(GroupStat::from_values(&cross_patch_name(s), &cross(m)));
    }
    Ok(KernelStructureReport { groups })
}
