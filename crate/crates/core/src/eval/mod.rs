//! Detection metrics, kernel-structure statistics and report files.

mod metrics;
mod report;
mod structure;

pub use metrics::{auroc, eer, RocCurve};
pub use report::{EvalReport, SCHEMA_VERSION};
pub use structure::{
    cross_patch_name, kernel_structure, GroupStat, KernelStructureReport, BONAFIDE_DIFFERENT, BONAFIDE_SAME, CROSS,
    SPOOF_DIFFERENT, SPOOF_SAME,
};
