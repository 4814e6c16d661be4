//! Workload, attention and error-recognition pipelines: calibrate on the
//! calibration tasks, score the game sessions, and turn scores into
//! normalized indices or error counts.

mod erp;
mod workload;

pub use erp::{
    attention_index, count_errors, erp_scores, train_attention, train_error, ErpData, ErpEpochs, ErpModel,
    ErrorCount, ERP_DECIMATION, ERP_EPOCH_SEC,
};
pub use workload::{
    train_workload, workload_index, workload_scores, BandMoments, WorkloadData, WorkloadModel, HOP_SEC,
    WORKLOAD_EPOCH_SEC,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classify::{cross_validate, CvReport, LdaOptions, TrainSet};
use crate::error::{Error, Result};
use crate::protocols::Technique;
use crate::session::{Construct, EventLog, LevelSpan};
use crate::sigproc::PowerScale;
use crate::spatial::{REFSF_GAMMA, SSCSP_NU};
use crate::stats::grubbs_filter;

/// Smallest class size accepted for training.
pub const MIN_CLASS_EPOCHS: usize = 10;
pub const GRUBBS_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub nu: f64,
    pub gamma: f64,
    pub power: PowerScale,
    pub lda: LdaOptions,
    pub folds: usize,
    pub cv_seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            nu: SSCSP_NU,
            gamma: REFSF_GAMMA,
            power: PowerScale::Log,
            lda: LdaOptions::default(),
            folds: 4,
            cv_seed: 0,
        }
    }
}

pub(crate) fn check_classes(labels: &[bool], what: &str) -> Result<()> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos < MIN_CLASS_EPOCHS || neg < MIN_CLASS_EPOCHS {
        return Err(Error::InsufficientData(format!(
            "{what}: need at least {MIN_CLASS_EPOCHS} epochs per class, have {pos} positive and {neg} negative"
        )));
    }
    Ok(())
}

/// Classifier scores of one session before outlier removal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawScores {
    pub t_sec: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Normalized index of one session, outliers removed.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub construct: Construct,
    pub t_sec: Vec<f64>,
    pub values: Vec<f64>,
    pub removed: usize,
}

impl IndexSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Mean of the points falling inside `span`, if any.
    pub fn mean_within(&self, span: &LevelSpan) -> Option<f64> {
        let v: Vec<f64> = self
            .t_sec
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| span.contains(**t))
            .map(|(_, v)| *v)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Maps `x` from `[lo, hi]` onto `[-1, 1]`; a degenerate range maps to 0.
pub fn min_max(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|x| (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)).collect()
}

/// Pools the scores of several sessions, removes outliers with iterated
/// Grubbs tests, min-max normalizes the survivors to `[-1, 1]` and splits
/// them back per session.
pub fn normalize_scores(construct: Construct, sessions: &[RawScores]) -> Result<Vec<IndexSeries>> {
    let pooled: Vec<f64> = sessions.iter().flat_map(|s| s.scores.iter().copied()).collect();
    if pooled.len() < 3 {
        return Err(Error::InsufficientData(format!("{} scores, need at least 3", pooled.len())));
    }
    let keep = grubbs_filter(&pooled, GRUBBS_ALPHA)?;
    if keep.len() < 3 {
        return Err(Error::InsufficientData("fewer than 3 scores survive outlier removal".into()));
    }
    let normalized = min_max(&keep.iter().map(|&i| pooled[i]).collect::<Vec<_>>());
    let mut out: Vec<IndexSeries> = sessions
        .iter()
        .map(|s| IndexSeries {
            construct,
            t_sec: Vec::new(),
            values: Vec::new(),
            removed: s.scores.len(),
        })
        .collect();
    let mut bounds = Vec::with_capacity(sessions.len());
    let mut acc = 0;
    for s in sessions {
        acc += s.scores.len();
        bounds.push(acc);
    }
    for (&i, v) in keep.iter().zip(normalized) {
        let s = bounds.iter().position(|&b| i < b).expect("index in range");
        let local = i - if s == 0 { 0 } else { bounds[s - 1] };
        out[s].t_sec.push(sessions[s].t_sec[local]);
        out[s].values.push(v);
        out[s].removed -= 1;
    }
    Ok(out)
}

/// Per-participant index or error-count contrast, keyboard minus touch.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    /// Mean index (or error proportion) per technique.
    pub by_technique: [f64; 2],
    /// Mean index per technique and difficulty; NaN for error counts.
    pub by_level: [[f64; 4]; 2],
}

impl ConditionSummary {
    pub fn contrast(&self) -> f64 {
        self.by_technique[Technique::Keyboard.index()] - self.by_technique[Technique::Touch.index()]
    }
}

/// Level means of two jointly normalized game indices.
pub fn summarize_indices(series: &[IndexSeries; 2], logs: [&EventLog; 2]) -> ConditionSummary {
    use crate::protocols::Difficulty;
    let mut by_level = [[f64::NAN; 4]; 2];
    let mut by_technique = [f64::NAN; 2];
    for t in 0..2 {
        let spans = logs[t].level_spans();
        let mut all = Vec::new();
        for d in Difficulty::ALL {
            let mut vals = Vec::new();
            for span in spans.iter().filter(|s| s.difficulty == d.as_str()) {
                for (time, v) in series[t].t_sec.iter().zip(&series[t].values) {
                    if span.contains(*time) {
                        vals.push(*v);
                    }
                }
            }
            if !vals.is_empty() {
                by_level[t][d.index()] = vals.iter().sum::<f64>() / vals.len() as f64;
            }
            all.extend(vals);
        }
        if !all.is_empty() {
            by_technique[t] = all.iter().sum::<f64>() / all.len() as f64;
        }
    }
    ConditionSummary { by_technique, by_level }
}

/// Calibration and game data of one construct for one participant, cached
/// so that retraining never re-filters signals.
pub enum ConstructData {
    Workload(WorkloadData),
    Erp(ErpData),
}

impl ConstructData {
    pub fn construct(&self) -> Construct {
        match self {
            ConstructData::Workload(_) => Construct::Workload,
            ConstructData::Erp(d) => d.construct,
        }
    }

    pub fn labels(&self) -> &[bool] {
        match self {
            ConstructData::Workload(d) => &d.labels,
            ConstructData::Erp(d) => &d.calib.labels,
        }
    }

    /// Stratified k-fold AUROC on the calibration task.
    pub fn cross_validate(&self, opts: &PipelineOptions) -> Result<CvReport> {
        let pipeline = |train: TrainSet<'_>, test: &[usize]| -> Result<Vec<f64>> {
            match self {
                ConstructData::Workload(d) => d.fit_score(train.indices, train.labels, test, opts),
                ConstructData::Erp(d) => d.fit_score(train.indices, train.labels, test, opts),
            }
        };
        cross_validate(self.labels(), opts.folds, opts.cv_seed, &pipeline)
    }

    /// Trains on the given calibration labels and summarizes both games.
    pub fn summarize_with(&self, labels: &[bool], opts: &PipelineOptions) -> Result<ConditionSummary> {
        let all: Vec<usize> = (0..labels.len()).collect();
        match self {
            ConstructData::Workload(d) => d.summarize(&d.fit(&all, labels, opts)?),
            ConstructData::Erp(d) => d.summarize(&d.fit(&all, labels, opts)?),
        }
    }

    pub fn summarize(&self, opts: &PipelineOptions) -> Result<ConditionSummary> {
        self.summarize_with(self.labels(), opts)
    }
}

/// Keyboard-minus-touch contrasts after retraining on randomly permuted
/// calibration labels, one per shuffle.
pub fn shuffle_control(data: &ConstructData, n_shuffles: usize, seed: u64, opts: &PipelineOptions) -> Result<Vec<f64>> {
    shuffle_summaries(data, n_shuffles, seed, opts).map(|v| v.iter().map(ConditionSummary::contrast).collect())
}

/// Condition summaries after label permutation, one per shuffle.
pub fn shuffle_summaries(
    data: &ConstructData,
    n_shuffles: usize,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<Vec<ConditionSummary>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = data.labels().to_vec();
    (0..n_shuffles)
        .map(|_| {
            labels.shuffle(&mut rng);
            data.summarize_with(&labels, opts)
        })
        .collect()
}
