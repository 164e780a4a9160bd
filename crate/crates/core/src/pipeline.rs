//! Experiment configuration and the restartable pipeline stages.
//!
//! Every stage reads its declared inputs from the work directory and writes
//! its declared outputs there:
//!
//! | stage        | reads                         | writes                                   |
//! |--------------|-------------------------------|------------------------------------------|
//! | `synth`      | bona fide WAVs                | `spoof/*.wav`, `manifest.csv`            |
//! | `features`   | `manifest.csv`, WAVs          | `features.csv`                           |
//! | `kernel`     | `features.csv`                | `kernels/<kind>_{train,cross}.{csv,json}`|
//! | `train-eval` | `features.csv`, kernels       | `models/`, `reports/`                    |

use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dsp::{read_wav, FrontEnd, FrontEndConfig};
use crate::error::{Error, Result};
use crate::eval::{kernel_structure, EvalReport, RocCurve, SCHEMA_VERSION};
use crate::kernel::{
    build_gram_with, cross_kernel, read_json, read_matrix_csv, write_json, write_matrix_csv, GammaPolicy,
    GramMatrix, KernelKind, KernelSpec,
};
use crate::par::{map_slice, Execution};
use crate::patch::{extract_features, FeatureVector, PatchLocation, DEFAULT_PATCH_SIZE, DEFAULT_TOP_K};
use crate::quantum::{EmbeddingConfig, STATS_PER_PATCH};
use crate::spoof::{build_dataset, DatasetCounts, DatasetManifest, Label, Split, SpoofConfig};
use crate::svm::{train_svm, SvmParams};
use crate::synth::write_synthetic_corpus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatchConfig {
    pub size: usize,
    pub k: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            size: DEFAULT_PATCH_SIZE,
            k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpoofParams {
    #[serde(with = "crate::spoof::snr_serde")]
    pub snr_db: f64,
    pub tilt_range: (f64, f64),
}

impl Default for SpoofParams {
    fn default() -> Self {
        let d = SpoofConfig::default();
        Self {
            snr_db: d.snr_db,
            tilt_range: d.tilt_range,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SvmConfig {
    #[serde(flatten)]
    pub params: SvmParams,
    pub gamma: GammaPolicy,
}

/// Everything one run depends on. Loaded from JSON; missing fields take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Directory of bona fide WAVs. Ignored when `synthetic_audio` is set.
    pub input_dir: Option<PathBuf>,
    /// Generate this many stand-in bona fide utterances instead of reading
    /// `input_dir`.
    pub synthetic_audio: Option<usize>,
    pub work_dir: PathBuf,
    pub seed: u64,
    pub dataset: DatasetCounts,
    pub frontend: FrontEndConfig,
    pub patch: PatchConfig,
    pub circuit: EmbeddingConfig,
    pub spoof: SpoofParams,
    pub svm: SvmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input_dir: None,
            synthetic_audio: None,
            work_dir: PathBuf::from("qpatch-work"),
            seed: 0,
            dataset: DatasetCounts::default(),
            frontend: FrontEndConfig::default(),
            patch: PatchConfig::default(),
            circuit: EmbeddingConfig::default(),
            spoof: SpoofParams::default(),
            svm: SvmConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn spoof_config(&self) -> SpoofConfig {
        SpoofConfig {
            snr_db: self.spoof.snr_db,
            tilt_range: self.spoof.tilt_range,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spoof_config().validate()?;
        self.dataset.validate()?;
        if self.patch.k == 0 {
            return Err(Error::invalid("patch.k", "must be at least 1"));
        }
        if self.patch.k > 2 && self.patch.k % 2 == 1 {
            return Err(Error::invalid(
                "patch.k",
                format!("{} patches cannot be grouped into pairs", self.patch.k),
            ));
        }
        crate::quantum::FeatureMap::new(self.circuit)?;
        FrontEnd::new(self.frontend.clone())?;
        Ok(())
    }

    /// Parameters echoed into reports: everything except filesystem paths.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("input_dir");
            obj.remove("work_dir");
        }
        v
    }

    pub fn bonafide_dir(&self) -> Result<PathBuf> {
        match (self.synthetic_audio, &self.input_dir) {
            (Some(_), _) => Ok(self.work_dir.join("bonafide")),
            (None, Some(dir)) => Ok(dir.clone()),
            (None, None) => Err(Error::invalid("input_dir", "no input directory and no synthetic audio requested")),
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.work_dir.join("manifest.csv")
    }

    pub fn features_path(&self) -> PathBuf {
        self.work_dir.join("features.csv")
    }

    pub fn train_gram_path(&self, kind: KernelKind) -> PathBuf {
        self.work_dir.join("kernels").join(format!("{kind}_train.csv"))
    }

    pub fn cross_gram_path(&self, kind: KernelKind) -> PathBuf {
        self.work_dir.join("kernels").join(format!("{kind}_cross.csv"))
    }

    pub fn model_path(&self, kind: KernelKind) -> PathBuf {
        self.work_dir.join("models").join(format!("{kind}_model.json"))
    }

    pub fn report_path(&self, kind: KernelKind) -> PathBuf {
        self.work_dir.join("reports").join(format!("{kind}_report.json"))
    }

    pub fn roc_path(&self, kind: KernelKind) -> PathBuf {
        self.work_dir.join("reports").join(format!("{kind}_roc.csv"))
    }

    pub fn scores_path(&self, kind: KernelKind) -> PathBuf {
        self.work_dir.join("reports").join(format!("{kind}_dev_scores.csv"))
    }
}

fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn ensure_parent(p: &Path) -> Result<()> {
    p.parent().map_or(Ok(()), ensure_dir)
}

/// Build (or rebuild) the spoofed dataset and its manifest.
pub fn run_synth(cfg: &ExperimentConfig) -> Result<DatasetManifest> {
    cfg.validate()?;
    ensure_dir(&cfg.work_dir)?;
    let mut counts = cfg.dataset;
    let bona_dir = cfg.bonafide_dir()?;
    if let Some(n) = cfg.synthetic_audio {
        counts.n_bonafide = n;
        counts.validate()?;
        info!("writing {n} synthetic bona fide utterances to {}", bona_dir.display());
        write_synthetic_corpus(&bona_dir, n, cfg.seed)?;
    } else if !bona_dir.is_dir() {
        return Err(Error::io(
            &bona_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input directory does not exist"),
        ));
    }
    let manifest = build_dataset(&bona_dir, &cfg.work_dir.join("spoof"), &cfg.spoof_config(), counts)?;
    manifest.write_csv(&cfg.manifest_path())?;
    info!(
        "manifest: {} train / {} dev",
        manifest.split(Split::Train).count(),
        manifest.split(Split::Dev).count()
    );
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub label: Label,
    pub split: Split,
    pub features: FeatureVector,
}

/// One feature row per utterance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn select(&self, split: Split) -> Vec<&FeatureRow> {
        self.rows.iter().filter(|r| r.split == split).collect()
    }

    /// Header: `id,label,split,x0..x{4k-1},tau0,f0,...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let dim = self.rows.first().map_or(0, |r| r.features.len());
        let k = self.rows.first().map_or(0, |r| r.features.n_patches());
        let mut header = vec!["id".to_string(), "label".into(), "split".into()];
        header.extend((0..dim).map(|i| format!("x{i}")));
        for j in 0..k {
            header.push(format!("tau{j}"));
            header.push(format!("f{j}"));
        }
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.id.clone(),
                r.label.as_str().to_string(),
                match r.split {
                    Split::Train => "train".to_string(),
                    Split::Dev => "dev".to_string(),
                },
            ];
            rec.extend(r.features.values.iter().map(|v| v.to_string()));
            for l in &r.features.patch_order {
                rec.push(l.time_index.to_string());
                rec.push(l.freq_index.to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let malformed = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            reason,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.clone();
        let dim = header.iter().filter(|h| h.starts_with('x')).count();
        let k = header.iter().filter(|h| h.starts_with("tau")).count();
        if header.len() != 3 + dim + 2 * k {
            return Err(malformed(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let label = match &rec[1] {
                "bonafide" => Label::Bonafide,
                "spoof" => Label::Spoof,
                other => return Err(malformed(format!("label {other:?}"))),
            };
            let split = match &rec[2] {
                "train" => Split::Train,
                "dev" => Split::Dev,
                other => return Err(malformed(format!("split {other:?}"))),
            };
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| malformed(format!("column {i}: {e}")))
            };
            let values = (0..dim).map(|i| num(3 + i)).collect::<Result<Vec<_>>>()?;
            let patch_order = (0..k)
                .map(|j| {
                    let at = |c: usize| rec[c].parse::<usize>().map_err(|e| malformed(format!("column {c}: {e}")));
                    Ok(PatchLocation {
                        index: 0,
                        time_index: at(3 + dim + 2 * j)?,
                        freq_index: at(4 + dim + 2 * j)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(FeatureRow {
                id: rec[0].to_string(),
                label,
                split,
                features: FeatureVector { values, patch_order },
            });
        }
        Ok(Self { rows })
    }
}

/// Outcome of the feature stage: the table plus ids that could not be read.
#[derive(Debug, Clone)]
pub struct FeatureRun {
    pub table: FeatureTable,
    pub skipped: Vec<(String, String)>,
}

pub fn extract_table(manifest: &DatasetManifest, cfg: &ExperimentConfig, exec: Execution) -> Result<FeatureRun> {
    let fe = FrontEnd::new(cfg.frontend.clone())?;
    let results = map_slice(&manifest.entries, exec, |e| -> Result<FeatureRow> {
        let spec = fe.process(&read_wav(&e.path)?)?;
        Ok(FeatureRow {
            id: e.id.clone(),
            label: e.label,
            split: e.split,
            features: extract_features(&spec, cfg.patch.size, cfg.patch.k)?,
        })
    });
    let mut run = FeatureRun {
        table: FeatureTable::default(),
        skipped: Vec::new(),
    };
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(row) => run.table.rows.push(row),
            Err(err) => {
                warn!("skipping {}: {err}", e.id);
                run.skipped.push((e.id.clone(), err.to_string()));
            }
        }
    }
    Ok(run)
}

/// Compute features for every manifest entry and write `features.csv`.
pub fn run_features(cfg: &ExperimentConfig) -> Result<FeatureRun> {
    cfg.validate()?;
    let manifest = DatasetManifest::read_csv(&cfg.manifest_path(), cfg.seed)?;
    let run = extract_table(&manifest, cfg, Execution::default())?;
    run.table.write_csv(&cfg.features_path())?;
    info!("features: {} rows, {} skipped", run.table.rows.len(), run.skipped.len());
    Ok(run)
}

/// Resolve the kernel for `kind` against the training features.
pub fn kernel_spec(cfg: &ExperimentConfig, kind: KernelKind, train: &[&[f64]]) -> Result<KernelSpec> {
    Ok(match kind {
        KernelKind::Quantum => KernelSpec::Quantum(cfg.circuit),
        KernelKind::Rbf => KernelSpec::Rbf {
            gamma: cfg.svm.gamma.resolve(train)?,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CrossSidecar {
    kernel: KernelSpec,
    train_ids: Vec<String>,
    dev_ids: Vec<String>,
}

fn feature_slices<'a>(rows: &[&'a FeatureRow]) -> Vec<&'a [f64]> {
    rows.iter().map(|r| r.features.values.as_slice()).collect()
}

/// Train Gram matrix and dev-vs-train block for `kind`.
pub fn run_kernel(cfg: &ExperimentConfig, kind: KernelKind) -> Result<(GramMatrix, Array2<f64>)> {
    let table = FeatureTable::read_csv(&cfg.features_path())?;
    let (train, dev) = (table.select(Split::Train), table.select(Split::Dev));
    if train.is_empty() {
        return Err(Error::invalid("features", "no training rows"));
    }
    let (xt, xd) = (feature_slices(&train), feature_slices(&dev));
    let spec = kernel_spec(cfg, kind, &xt)?;
    let gram = build_gram_with(&xt, &spec, Execution::default())?;
    let cross = cross_kernel(&xd, &xt, &spec, Execution::default())?;

    let (gp, cp) = (cfg.train_gram_path(kind), cfg.cross_gram_path(kind));
    ensure_parent(&gp)?;
    gram.write_csv(&gp)?;
    write_matrix_csv(&cp, &cross)?;
    write_json(
        &cp.with_extension("json"),
        &CrossSidecar {
            kernel: spec,
            train_ids: train.iter().map(|r| r.id.clone()).collect(),
            dev_ids: dev.iter().map(|r| r.id.clone()).collect(),
        },
    )?;
    info!("{kind} kernel: {}x{} train, {}x{} cross", gram.len(), gram.len(), cross.nrows(), cross.ncols());
    Ok((gram, cross))
}

/// Per-patch kernels over the training rows: slot `s` uses features
/// `4s..4s+4` alone (four qubits for the quantum kernel).
pub fn slot_kernels(train: &[&[f64]], spec: &KernelSpec) -> Result<Vec<Array2<f64>>> {
    let dim = train.first().map_or(0, |x| x.len());
    (0..dim / STATS_PER_PATCH)
        .map(|s| {
            let sliced: Vec<&[f64]> = train
                .iter()
                .map(|x| &x[s * STATS_PER_PATCH..(s + 1) * STATS_PER_PATCH])
                .collect();
            Ok(build_gram_with(&sliced, spec, Execution::default())?.values().clone())
        })
        .collect()
}

/// Train the SVM on the stored Gram matrix, score the dev split and write
/// the model, scores, ROC and report.
pub fn run_train_eval(cfg: &ExperimentConfig, kind: KernelKind) -> Result<EvalReport> {
    let table = FeatureTable::read_csv(&cfg.features_path())?;
    let (train, dev) = (table.select(Split::Train), table.select(Split::Dev));
    let gram = GramMatrix::read_csv(cfg.train_gram_path(kind))?;
    let cp = cfg.cross_gram_path(kind);
    let cross = read_matrix_csv(&cp)?;
    let side: CrossSidecar = read_json(&cp.with_extension("json"))?;

    let train_ids: Vec<String> = train.iter().map(|r| r.id.clone()).collect();
    let dev_ids: Vec<String> = dev.iter().map(|r| r.id.clone()).collect();
    if side.train_ids != train_ids || side.dev_ids != dev_ids || gram.len() != train.len() {
        return Err(Error::Malformed {
            path: cp,
            reason: "kernel files do not match features.csv; rerun the kernel stage".into(),
        });
    }

    let y: Vec<f64> = train.iter().map(|r| r.label.sign()).collect();
    let mut model = train_svm(gram.values(), &y, cfg.svm.params)?;
    model.kernel = Some(*gram.spec());
    model.feature_snapshot = Some(cfg.features_path());
    let mp = cfg.model_path(kind);
    ensure_parent(&mp)?;
    model.save(&mp)?;

    let scores = model.decision_scores(&cross)?;
    let positive: Vec<bool> = dev.iter().map(|r| r.label == Label::Bonafide).collect();
    let roc = RocCurve::new(&scores, &positive)?;
    let (eer, eer_threshold) = roc.eer();
    let auroc = crate::eval::auroc(&scores, &positive)?;

    let labels: Vec<Label> = train.iter().map(|r| r.label).collect();
    let slots = slot_kernels(&feature_slices(&train), gram.spec())?;
    let structure = kernel_structure(gram.values(), &labels, &slots)?;

    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        kind,
        positive_class: Label::Bonafide.as_str().into(),
        n_train: train.len(),
        n_dev: dev.len(),
        auroc,
        eer,
        eer_threshold,
        svm_iterations: model.iterations,
        svm_converged: model.converged,
        n_support: model.support_indices.len(),
        kernel_structure: structure,
        config: cfg.echo(),
    };
    let rp = cfg.report_path(kind);
    ensure_parent(&rp)?;
    report.write(&rp, &roc, &cfg.roc_path(kind))?;
    write_scores(&cfg.scores_path(kind), &dev, &scores)?;
    info!("{kind}: dev AUROC {auroc:.3}, EER {:.1}%", 100.0 * eer);
    Ok(report)
}

fn write_scores(path: &Path, dev: &[&FeatureRow], scores: &[f64]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["id", "label", "score"]).map_err(csv_err)?;
    for (r, s) in dev.iter().zip(scores) {
        w.write_record([r.id.as_str(), r.label.as_str(), &s.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Results of a full run.
#[derive(Debug, Clone)]
pub struct RunAll {
    pub manifest: DatasetManifest,
    pub features: FeatureRun,
    pub quantum: EvalReport,
    pub rbf: EvalReport,
}

pub fn run_all(cfg: &ExperimentConfig) -> Result<RunAll> {
    let manifest = run_synth(cfg)?;
    let features = run_features(cfg)?;
    let mut reports = Vec::new();
    for kind in [KernelKind::Quantum, KernelKind::Rbf] {
        run_kernel(cfg, kind)?;
        reports.push(run_train_eval(cfg, kind)?);
    }
    let rbf = reports.pop().expect("two reports");
    let quantum = reports.pop().expect("two reports");
    Ok(RunAll {
        manifest,
        features,
        quantum,
        rbf,
    })
}
