use nalgebra::{DMatrix, DVector};

use super::{check_classes, normalize_scores, summarize_indices, ConditionSummary, IndexSeries, PipelineOptions, RawScores};
use crate::classify::{lda_train, LabeledFeatures, LdaModel};
use crate::error::{Error, Result};
use crate::session::{Construct, EventKind, EventLog, ModelFile, Recording};
use crate::sigproc::{bandpass, event_ranges, extract, window_ranges, Band, PowerScale, SampleRange};
use crate::spatial::{class_covariance_from, sscsp, FilterMethod, SpatialFilterBank, TrialMoments, CSP_FILTERS_PER_SIDE};

pub const WORKLOAD_EPOCH_SEC: f64 = 2.0;
pub const HOP_SEC: f64 = 1.0;

/// Per-band second moments of a set of trials, `trials[band][trial]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMoments {
    pub bands: Vec<Band>,
    pub trials: Vec<Vec<TrialMoments>>,
    /// Center time of each trial.
    pub t_sec: Vec<f64>,
}

fn add_moments(a: &TrialMoments, b: &TrialMoments) -> TrialMoments {
    TrialMoments {
        outer: &a.outer + &b.outer,
        sum: &a.sum + &b.sum,
        n: a.n + b.n,
    }
}

impl BandMoments {
    /// Moments of arbitrary ranges, each band filtered once over the whole
    /// recording.
    pub fn for_ranges(rec: &Recording, bands: &[Band], ranges: &[SampleRange]) -> Result<Self> {
        let fs = rec.sample_rate_hz();
        let mut trials = Vec::with_capacity(bands.len());
        for band in bands {
            let filtered = bandpass(rec, band)?;
            trials.push(ranges.iter().map(|r| TrialMoments::from_matrix(&extract(&filtered, *r))).collect());
        }
        Ok(Self {
            bands: bands.to_vec(),
            trials,
            t_sec: ranges.iter().map(|r| (r.start as f64 + r.len as f64 / 2.0) / fs).collect(),
        })
    }

    /// Sliding windows of `len_sec` every `hop_sec`. When the length is a
    /// whole number of hops, per-hop blocks are summed instead of
    /// recomputing overlapping products.
    pub fn sliding(rec: &Recording, bands: &[Band], len_sec: f64, hop_sec: f64) -> Result<Self> {
        let fs = rec.sample_rate_hz();
        let ranges = window_ranges(rec.n_samples(), fs, len_sec, hop_sec)?;
        let hop = (hop_sec * fs).round() as usize;
        let len = ranges[0].len;
        if len % hop != 0 {
            return Self::for_ranges(rec, bands, &ranges);
        }
        let per = len / hop;
        let n_blocks = ranges.len() + per - 1;
        let blocks: Vec<SampleRange> = (0..n_blocks).map(|k| SampleRange { start: k * hop, len: hop }).collect();
        let block_moments = Self::for_ranges(rec, bands, &blocks)?;
        let trials = block_moments
            .trials
            .iter()
            .map(|b| {
                (0..ranges.len())
                    .map(|k| (1..per).fold(b[k].clone(), |acc, j| add_moments(&acc, &b[k + j])))
                    .collect()
            })
            .collect();
        Ok(Self {
            bands: bands.to_vec(),
            trials,
            t_sec: ranges.iter().map(|r| (r.start as f64 + r.len as f64 / 2.0) / fs).collect(),
        })
    }

    pub fn n_trials(&self) -> usize {
        self.t_sec.len()
    }

    /// Mean trace-normalized covariance per band over every trial.
    pub fn pooled_covariances<'a>(sets: impl IntoIterator<Item = &'a BandMoments> + Clone, n_bands: usize) -> Result<Vec<DMatrix<f64>>> {
        (0..n_bands)
            .map(|b| Ok(class_covariance_from(sets.clone().into_iter().flat_map(|s| s.trials[b].iter()))?.sigma))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadModel {
    pub sample_rate_hz: f64,
    pub bands: Vec<Band>,
    /// One SSCSP bank per band.
    pub filters: Vec<SpatialFilterBank>,
    pub lda: LdaModel,
    pub power: PowerScale,
    pub nu: f64,
}

impl WorkloadModel {
    pub fn n_channels(&self) -> usize {
        self.filters[0].n_channels()
    }

    pub fn n_features(&self) -> usize {
        self.filters.iter().map(SpatialFilterBank::n_filters).sum()
    }

    /// Log band power of every spatially filtered signal, band-major.
    pub fn features(&self, moments: &BandMoments, trial: usize) -> Vec<f64> {
        features_with(&self.filters, self.power, moments, trial)
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut m = ModelFile::new(Construct::Workload);
        m.set_scalar("sample_rate_hz", self.sample_rate_hz);
        m.set_scalar("n_bands", self.bands.len() as f64);
        m.set_scalar("nu", self.nu);
        m.set_scalar("log_power", f64::from(u8::from(self.power == PowerScale::Log)));
        m.set_scalar("lda_bias", self.lda.b);
        m.set_scalar("lda_shrinkage", self.lda.shrinkage);
        m.set_matrix("lda_w", DMatrix::from_column_slice(self.lda.w.len(), 1, self.lda.w.as_slice()));
        for (i, (band, bank)) in self.bands.iter().zip(&self.filters).enumerate() {
            m.set_scalar(&format!("band{i}_low_hz"), band.low_hz);
            m.set_scalar(&format!("band{i}_high_hz"), band.high_hz);
            m.set_matrix(&format!("band{i}_filters"), bank.w.clone());
        }
        m
    }

    pub fn from_model_file(m: &ModelFile) -> Result<Self> {
        if m.construct != Construct::Workload {
            return Err(Error::invalid("model file", format!("expected workload model, found {}", m.construct)));
        }
        let n_bands = m.scalar("n_bands")? as usize;
        let mut bands = Vec::with_capacity(n_bands);
        let mut filters = Vec::with_capacity(n_bands);
        for i in 0..n_bands {
            let (lo, hi) = (m.scalar(&format!("band{i}_low_hz"))?, m.scalar(&format!("band{i}_high_hz"))?);
            let band = Band::CANONICAL
                .iter()
                .find(|b| b.low_hz == lo && b.high_hz == hi)
                .copied()
                .ok_or_else(|| Error::invalid("model file", format!("unknown band {lo}-{hi} Hz")))?;
            bands.push(band);
            let w = m.matrix(&format!("band{i}_filters"))?.clone();
            if i > 0 && w.ncols() != filters.first().map_or(0, |f: &SpatialFilterBank| f.n_channels()) {
                return Err(Error::invalid("model file", "filter banks disagree on channel count"));
            }
            filters.push(SpatialFilterBank {
                eigenvalues: vec![f64::NAN; w.nrows()],
                w,
                method: FilterMethod::Sscsp,
            });
        }
        let n_feat: usize = filters.iter().map(SpatialFilterBank::n_filters).sum();
        let w = m.matrix_shaped("lda_w", n_feat, 1)?;
        Ok(Self {
            sample_rate_hz: m.scalar("sample_rate_hz")?,
            bands,
            filters,
            lda: LdaModel {
                w: DVector::from_column_slice(w.as_slice()),
                b: m.scalar("lda_bias")?,
                shrinkage: m.scalar("lda_shrinkage")?,
            },
            power: if m.scalar("log_power")? != 0.0 { PowerScale::Log } else { PowerScale::Linear },
            nu: m.scalar("nu")?,
        })
    }
}

fn features_with(filters: &[SpatialFilterBank], power: PowerScale, moments: &BandMoments, trial: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(30);
    for (bank, band_trials) in filters.iter().zip(&moments.trials) {
        let m = &band_trials[trial];
        let proj = &bank.w * &m.outer;
        for r in 0..bank.n_filters() {
            let p = proj.row(r).dot(&bank.w.row(r)) / m.n as f64;
            out.push(power.apply(p));
        }
    }
    out
}

/// Cached calibration epochs and game windows of one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadData {
    pub sample_rate_hz: f64,
    pub calib: BandMoments,
    /// True for 2-back epochs.
    pub labels: Vec<bool>,
    /// Use-context covariance per band, pooled over every game window.
    pub use_cov: Vec<DMatrix<f64>>,
    pub games: Vec<(BandMoments, EventLog)>,
}

impl WorkloadData {
    /// Epochs of every letter of the N-back log, windows of every game.
    pub fn prepare(calib: &Recording, calib_log: &EventLog, games: &[(&Recording, &EventLog)]) -> Result<Self> {
        let bands = Band::CANONICAL.to_vec();
        let (ranges, skipped) = event_ranges(calib, calib_log, |e| e.kind == EventKind::Letter, (0.0, WORKLOAD_EPOCH_SEC))?;
        if !skipped.is_empty() {
            return Err(Error::invalid("workload calibration", format!("{} letter epochs overrun the recording", skipped.len())));
        }
        let labels: Vec<bool> = ranges
            .iter()
            .map(|(i, _)| calib_log.events()[*i].str_attr("label") == Some("high"))
            .collect();
        check_classes(&labels, "workload calibration")?;
        let sample_ranges: Vec<SampleRange> = ranges.iter().map(|(_, r)| *r).collect();
        let moments = BandMoments::for_ranges(calib, &bands, &sample_ranges)?;
        let mut game_moments = Vec::with_capacity(games.len());
        for (rec, log) in games {
            if rec.sample_rate_hz() != calib.sample_rate_hz() || rec.n_channels() != calib.n_channels() {
                return Err(Error::invalid("workload", "game and calibration recordings differ in rate or montage"));
            }
            game_moments.push((BandMoments::sliding(rec, &bands, WORKLOAD_EPOCH_SEC, HOP_SEC)?, (*log).clone()));
        }
        let use_cov = if game_moments.is_empty() {
            BandMoments::pooled_covariances([&moments], bands.len())?
        } else {
            BandMoments::pooled_covariances(game_moments.iter().map(|g| &g.0), bands.len())?
        };
        Ok(Self {
            sample_rate_hz: calib.sample_rate_hz(),
            calib: moments,
            labels,
            use_cov,
            games: game_moments,
        })
    }

    pub fn fit(&self, idx: &[usize], labels: &[bool], opts: &PipelineOptions) -> Result<WorkloadModel> {
        check_classes(labels, "workload training")?;
        let mut filters = Vec::with_capacity(self.calib.bands.len());
        for (b, band_trials) in self.calib.trials.iter().enumerate() {
            let pick = |want: bool| idx.iter().zip(labels).filter(move |(_, &l)| l == want).map(|(&i, _)| &band_trials[i]);
            let high = class_covariance_from(pick(true))?;
            let low = class_covariance_from(pick(false))?;
            filters.push(sscsp(&high.sigma, &low.sigma, &self.use_cov[b], opts.nu, CSP_FILTERS_PER_SIDE)?);
        }
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| features_with(&filters, opts.power, &self.calib, i)).collect();
        let lda = lda_train(&LabeledFeatures::from_rows(&rows, labels.to_vec())?, opts.lda)?;
        Ok(WorkloadModel {
            sample_rate_hz: self.sample_rate_hz,
            bands: self.calib.bands.clone(),
            filters,
            lda,
            power: opts.power,
            nu: opts.nu,
        })
    }

    pub(crate) fn fit_score(&self, train: &[usize], labels: &[bool], test: &[usize], opts: &PipelineOptions) -> Result<Vec<f64>> {
        let model = self.fit(train, labels, opts)?;
        test.iter().map(|&i| model.lda.score(&model.features(&self.calib, i))).collect()
    }

    pub fn game_scores(&self, model: &WorkloadModel) -> Result<Vec<RawScores>> {
        self.games.iter().map(|(m, _)| score_moments(model, m)).collect()
    }

    pub fn indices(&self, model: &WorkloadModel) -> Result<Vec<IndexSeries>> {
        normalize_scores(Construct::Workload, &self.game_scores(model)?)
    }

    pub(crate) fn summarize(&self, model: &WorkloadModel) -> Result<ConditionSummary> {
        if self.games.len() != 2 {
            return Err(Error::invalid("workload", "condition summary needs keyboard and touch games"));
        }
        let idx = self.indices(model)?;
        Ok(summarize_indices(&[idx[0].clone(), idx[1].clone()], [&self.games[0].1, &self.games[1].1]))
    }
}

fn score_moments(model: &WorkloadModel, m: &BandMoments) -> Result<RawScores> {
    let scores = (0..m.n_trials()).map(|i| model.lda.score(&model.features(m, i))).collect::<Result<_>>()?;
    Ok(RawScores {
        t_sec: m.t_sec.clone(),
        scores,
    })
}

/// Trains on every N-back letter epoch (2-back positive), with the use
/// context pooled from `use_ctx`.
pub fn train_workload(calib: &Recording, calib_log: &EventLog, use_ctx: &[&Recording], opts: &PipelineOptions) -> Result<WorkloadModel> {
    let empty = EventLog::default();
    let games: Vec<(&Recording, &EventLog)> = use_ctx.iter().map(|r| (*r, &empty)).collect();
    let data = WorkloadData::prepare(calib, calib_log, &games)?;
    let all: Vec<usize> = (0..data.labels.len()).collect();
    data.fit(&all, &data.labels, opts)
}

fn check_rate(model: &WorkloadModel, rec: &Recording) -> Result<()> {
    if model.sample_rate_hz != rec.sample_rate_hz() {
        return Err(Error::invalid(
            "workload scoring",
            format!("model trained at {} Hz, recording is {} Hz", model.sample_rate_hz, rec.sample_rate_hz()),
        ));
    }
    if model.n_channels() != rec.n_channels() {
        return Err(Error::Dimension {
            expected: model.n_channels(),
            got: rec.n_channels(),
        });
    }
    Ok(())
}

/// Raw classifier score of every 2 s window, 1 s hop.
pub fn workload_scores(model: &WorkloadModel, game: &Recording) -> Result<RawScores> {
    check_rate(model, game)?;
    score_moments(model, &BandMoments::sliding(game, &model.bands, WORKLOAD_EPOCH_SEC, HOP_SEC)?)
}

/// Window scores with outliers removed and min-max normalized.
pub fn workload_index(model: &WorkloadModel, game: &Recording) -> Result<IndexSeries> {
    Ok(normalize_scores(Construct::Workload, &[workload_scores(model, game)?])?.remove(0))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::session::Event;
    use crate::synth::{gen_noise, ForwardModelConfig, Preset};

    fn letters(n_per_class: usize) -> EventLog {
        let events = (0..2 * n_per_class)
            .map(|i| {
                let high = (i / 5) % 2 == 1;
                Event::new(1.0 + 2.0 * i as f64, EventKind::Letter)
                    .with("letter", "K")
                    .with("label", if high { "high" } else { "low" })
                    .with("is_target", false)
            })
            .collect();
        EventLog::new(events).unwrap()
    }

    fn noise(dur: f64, seed: u64) -> Recording {
        gen_noise(&ForwardModelConfig::preset(Preset::PaperLike), dur, seed).unwrap()
    }

    #[test]
    fn thirty_features_per_window() {
        let log = letters(20);
        let calib = noise(84.0, 1);
        let game = noise(30.0, 2);
        let model = train_workload(&calib, &log, &[&game], &PipelineOptions::default()).unwrap();
        assert_eq!(model.n_features(), 30);
        assert_eq!(model.lda.w.len(), 30);
        let moments = BandMoments::sliding(&game, &model.bands, WORKLOAD_EPOCH_SEC, HOP_SEC).unwrap();
        assert_eq!(model.features(&moments, 0).len(), 30);
        let scores = workload_scores(&model, &game).unwrap();
        assert_eq!(scores.scores.len(), 29);
        assert_relative_eq!(scores.t_sec[0], 1.0);
        assert_relative_eq!(scores.t_sec[28], 29.0);
    }

    #[test]
    fn summed_blocks_equal_direct_windows() {
        let rec = noise(12.0, 3);
        let bands = &Band::CANONICAL[..2];
        let summed = BandMoments::sliding(&rec, bands, 2.0, 1.0).unwrap();
        let ranges = window_ranges(rec.n_samples(), rec.sample_rate_hz(), 2.0, 1.0).unwrap();
        let direct = BandMoments::for_ranges(&rec, bands, &ranges).unwrap();
        assert_eq!(summed.n_trials(), direct.n_trials());
        for (a, b) in summed.trials.iter().flatten().zip(direct.trials.iter().flatten()) {
            assert_eq!(a.n, b.n);
            assert!((&a.outer - &b.outer).abs().max() <= 1e-9 * b.outer.abs().max());
            assert!((&a.sum - &b.sum).abs().max() <= 1e-9 * (1.0 + b.sum.abs().max()));
        }
        // 1.5 s windows are not a whole number of hops and go the direct route.
        let odd = BandMoments::sliding(&rec, bands, 1.5, 1.0).unwrap();
        assert_eq!(odd.trials[0][0].n, 768);
    }

    #[test]
    fn model_file_round_trip_keeps_scores() {
        let log = letters(20);
        let calib = noise(84.0, 4);
        let model = train_workload(&calib, &log, &[], &PipelineOptions::default()).unwrap();
        let text = model.to_model_file().to_text();
        let back = WorkloadModel::from_model_file(&ModelFile::parse(&text).unwrap()).unwrap();
        let game = noise(10.0, 5);
        let a = workload_scores(&model, &game).unwrap();
        let b = workload_scores(&back, &game).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_small_classes_and_rate_mismatch() {
        let log = letters(20);
        let calib = noise(84.0, 6);
        let short = EventLog::new(log.events()[..15].to_vec()).unwrap();
        assert!(matches!(
            train_workload(&calib, &short, &[], &PipelineOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        let model = train_workload(&calib, &log, &[], &PipelineOptions::default()).unwrap();
        let mut cfg = ForwardModelConfig::preset(Preset::PaperLike);
        cfg.sample_rate_hz = 256.0;
        let slow = gen_noise(&cfg, 10.0, 7).unwrap();
        assert!(workload_scores(&model, &slow).is_err());
    }

    #[test]
    fn identical_statistics_are_near_chance() {
        let log = crate::protocols::gen_nback(&crate::protocols::NbackConfig::default(), 8);
        let calib = noise(log.last_time() + 3.0, 8);
        let data = WorkloadData::prepare(&calib, &log, &[]).unwrap();
        assert_eq!(data.labels.len(), 360);
        assert_eq!(data.labels.iter().filter(|&&l| l).count(), 180);
        let cv = super::super::ConstructData::Workload(data).cross_validate(&PipelineOptions::default()).unwrap();
        assert!((0.4..=0.6).contains(&cv.mean_auroc), "auroc {}", cv.mean_auroc);
    }
}
