use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{auroc, lda_train, LabeledFeatures, LdaOptions};
use crate::error::{Error, Result};

/// What a fold pipeline may see while fitting: the training trial indices
/// and their labels. Test labels are never passed in.
#[derive(Debug, Clone, Copy)]
pub struct TrainSet<'a> {
    pub indices: &'a [usize],
    pub labels: &'a [bool],
}

/// Fits on the training trials and scores the test trials, in `test` order.
pub trait FoldPipeline {
    fn fit_score(&self, train: TrainSet<'_>, test: &[usize]) -> Result<Vec<f64>>;
}

impl<F> FoldPipeline for F
where
    F: Fn(TrainSet<'_>, &[usize]) -> Result<Vec<f64>>,
{
    fn fit_score(&self, train: TrainSet<'_>, test: &[usize]) -> Result<Vec<f64>> {
        self(train, test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<Vec<usize>>,
    pub fold_auroc: Vec<f64>,
    pub mean_auroc: f64,
}

/// Splits trial indices into `k` folds with the class ratio preserved.
/// Fold sizes differ by at most one; each fold is sorted.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("folds", "need at least 2 folds"));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.len() < k || neg.len() < k {
        return Err(Error::InsufficientData(format!(
            "{k}-fold split needs at least {k} trials per class (have {} and {})",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (slot, idx) in pos.into_iter().chain(neg).enumerate() {
        folds[slot % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Stratified k-fold AUROC of an arbitrary pipeline.
pub fn cross_validate<P: FoldPipeline + ?Sized>(
    labels: &[bool],
    k: usize,
    seed: u64,
    pipeline: &P,
) -> Result<CvReport> {
    let folds = stratified_folds(labels, k, seed)?;
    let mut fold_auroc = Vec::with_capacity(k);
    for f in 0..k {
        let train: Vec<usize> = (0..k).filter(|&g| g != f).flat_map(|g| folds[g].iter().copied()).collect();
        let train_labels: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let test = &folds[f];
        let scores = pipeline.fit_score(
            TrainSet {
                indices: &train,
                labels: &train_labels,
            },
            test,
        )?;
        let test_labels: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
        fold_auroc.push(auroc(&scores, &test_labels)?);
    }
    let mean_auroc = fold_auroc.iter().sum::<f64>() / k as f64;
    Ok(CvReport {
        folds,
        fold_auroc,
        mean_auroc,
    })
}

/// Cross-validates plain shrinkage LDA on a fixed feature matrix.
pub fn cross_validate_features(
    data: &LabeledFeatures,
    k: usize,
    seed: u64,
    opts: LdaOptions,
) -> Result<CvReport> {
    let pipeline = |train: TrainSet<'_>, test: &[usize]| -> Result<Vec<f64>> {
        let fit = LabeledFeatures::new(data.x.select_rows(train.indices), train.labels.to_vec())?;
        lda_train(&fit, opts)?.score_rows(&data.x.select_rows(test))
    };
    cross_validate(&data.y, k, seed, &pipeline)
}
