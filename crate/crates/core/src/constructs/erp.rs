use nalgebra::{DMatrix, DVector};

use super::{check_classes, normalize_scores, summarize_indices, ConditionSummary, IndexSeries, PipelineOptions, RawScores};
use crate::classify::{lda_train, LabeledFeatures, LdaModel};
use crate::error::{Error, Result};
use crate::session::{Construct, Event, EventKind, EventLog, ModelFile, Recording};
use crate::sigproc::{decimate_matrix, decimation_filter, event_ranges, extract};
use crate::spatial::{refsf_from_scatter, ErpScatter, FilterMethod, SpatialFilterBank, REFSF_FILTERS};

pub const ERP_EPOCH_SEC: f64 = 1.0;
pub const ERP_DECIMATION: usize = 32;

/// Decides which events start an epoch and their label.
fn calibration_event(construct: Construct, e: &Event) -> Option<bool> {
    match (construct, e.kind) {
        (Construct::Attention, EventKind::Sound) => e.bool_attr("is_target"),
        (Construct::Error, EventKind::Movement) => e.bool_attr("is_error"),
        _ => None,
    }
}

fn game_event(construct: Construct, e: &Event) -> bool {
    match construct {
        Construct::Attention => e.kind == EventKind::Sound && e.bool_attr("is_target") == Some(true),
        Construct::Error => e.kind == EventKind::Selection,
        Construct::Workload => false,
    }
}

/// One-second epochs with the statistics REFSF needs and their decimated
/// form (decimation commutes with spatial filtering).
#[derive(Debug, Clone, PartialEq)]
pub struct ErpEpochs {
    pub raw: Vec<DMatrix<f64>>,
    pub outer: Vec<DMatrix<f64>>,
    pub decimated: Vec<DMatrix<f64>>,
    pub labels: Vec<bool>,
    pub t_sec: Vec<f64>,
}

impl ErpEpochs {
    fn collect<F, L>(rec: &Recording, log: &EventLog, select: F, label: L, keep_raw: bool) -> Result<Self>
    where
        F: Fn(&Event) -> bool,
        L: Fn(&Event) -> bool,
    {
        let (ranges, _skipped) = event_ranges(rec, log, &select, (0.0, ERP_EPOCH_SEC))?;
        let sos = decimation_filter(ERP_DECIMATION);
        let mut out = Self {
            raw: Vec::new(),
            outer: Vec::new(),
            decimated: Vec::with_capacity(ranges.len()),
            labels: Vec::with_capacity(ranges.len()),
            t_sec: Vec::with_capacity(ranges.len()),
        };
        for (i, r) in ranges {
            let x = extract(rec, r);
            out.decimated.push(decimate_matrix(&x, ERP_DECIMATION, &sos));
            let ev = &log.events()[i];
            out.labels.push(label(ev));
            out.t_sec.push(ev.t_sec);
            if keep_raw {
                out.outer.push(&x * x.transpose());
                out.raw.push(x);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErpModel {
    pub construct: Construct,
    pub sample_rate_hz: f64,
    pub decimation: usize,
    pub filters: SpatialFilterBank,
    pub lda: LdaModel,
}

impl ErpModel {
    /// Points per filtered signal after decimation.
    pub fn points_per_filter(&self) -> usize {
        (self.sample_rate_hz * ERP_EPOCH_SEC).round() as usize / self.decimation
    }

    pub fn n_features(&self) -> usize {
        self.filters.n_filters() * self.points_per_filter()
    }

    /// Filter-major concatenation of the decimated filtered signals.
    pub fn features(&self, decimated: &DMatrix<f64>) -> Vec<f64> {
        features_with(&self.filters, decimated)
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut m = ModelFile::new(self.construct);
        m.set_scalar("sample_rate_hz", self.sample_rate_hz);
        m.set_scalar("decimation", self.decimation as f64);
        m.set_scalar("epoch_sec", ERP_EPOCH_SEC);
        m.set_scalar("lda_bias", self.lda.b);
        m.set_scalar("lda_shrinkage", self.lda.shrinkage);
        m.set_matrix("filters", self.filters.w.clone());
        m.set_matrix("lda_w", DMatrix::from_column_slice(self.lda.w.len(), 1, self.lda.w.as_slice()));
        m
    }

    pub fn from_model_file(m: &ModelFile) -> Result<Self> {
        if m.construct == Construct::Workload {
            return Err(Error::invalid("model file", "expected an attention or error model"));
        }
        let w = m.matrix("filters")?.clone();
        let mut model = Self {
            construct: m.construct,
            sample_rate_hz: m.scalar("sample_rate_hz")?,
            decimation: m.scalar("decimation")? as usize,
            filters: SpatialFilterBank {
                eigenvalues: vec![f64::NAN; w.nrows()],
                w,
                method: FilterMethod::Refsf,
            },
            lda: LdaModel {
                w: DVector::zeros(0),
                b: m.scalar("lda_bias")?,
                shrinkage: m.scalar("lda_shrinkage")?,
            },
        };
        let lw = m.matrix_shaped("lda_w", model.n_features(), 1)?;
        model.lda.w = DVector::from_column_slice(lw.as_slice());
        Ok(model)
    }
}

fn features_with(filters: &SpatialFilterBank, decimated: &DMatrix<f64>) -> Vec<f64> {
    let y = &filters.w * decimated;
    y.transpose().as_slice().to_vec()
}

/// Cached ERP calibration and game epochs of one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpData {
    pub construct: Construct,
    pub sample_rate_hz: f64,
    pub calib: ErpEpochs,
    pub games: Vec<(ErpEpochs, EventLog)>,
}

impl ErpData {
    pub fn prepare(construct: Construct, calib: &Recording, calib_log: &EventLog, games: &[(&Recording, &EventLog)]) -> Result<Self> {
        if construct == Construct::Workload {
            return Err(Error::invalid("erp pipeline", "workload is not an ERP construct"));
        }
        let epochs = ErpEpochs::collect(
            calib,
            calib_log,
            |e| calibration_event(construct, e).is_some(),
            |e| calibration_event(construct, e).unwrap_or(false),
            true,
        )?;
        check_classes(&epochs.labels, &format!("{construct} calibration"))?;
        let mut g = Vec::with_capacity(games.len());
        for (rec, log) in games {
            if rec.sample_rate_hz() != calib.sample_rate_hz() || rec.n_channels() != calib.n_channels() {
                return Err(Error::invalid(construct.as_str(), "game and calibration recordings differ in rate or montage"));
            }
            let e = ErpEpochs::collect(rec, log, |e| game_event(construct, e), |_| false, false)?;
            g.push((e, (*log).clone()));
        }
        Ok(Self {
            construct,
            sample_rate_hz: calib.sample_rate_hz(),
            calib: epochs,
            games: g,
        })
    }

    pub fn fit(&self, idx: &[usize], labels: &[bool], opts: &PipelineOptions) -> Result<ErpModel> {
        check_classes(labels, &format!("{} training", self.construct))?;
        let first = &self.calib.raw[idx[0]];
        let mut scatter = ErpScatter::new(first.nrows(), first.ncols());
        for (&i, &l) in idx.iter().zip(labels) {
            scatter.add(usize::from(!l), &self.calib.raw[i], &self.calib.outer[i])?;
        }
        let filters = refsf_from_scatter(&scatter, REFSF_FILTERS, opts.gamma)?;
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| features_with(&filters, &self.calib.decimated[i])).collect();
        let lda = lda_train(&LabeledFeatures::from_rows(&rows, labels.to_vec())?, opts.lda)?;
        Ok(ErpModel {
            construct: self.construct,
            sample_rate_hz: self.sample_rate_hz,
            decimation: ERP_DECIMATION,
            filters,
            lda,
        })
    }

    pub(crate) fn fit_score(&self, train: &[usize], labels: &[bool], test: &[usize], opts: &PipelineOptions) -> Result<Vec<f64>> {
        let model = self.fit(train, labels, opts)?;
        test.iter().map(|&i| model.lda.score(&model.features(&self.calib.decimated[i]))).collect()
    }

    pub fn game_scores(&self, model: &ErpModel) -> Result<Vec<RawScores>> {
        self.games.iter().map(|(e, _)| score_epochs(model, e)).collect()
    }

    pub(crate) fn summarize(&self, model: &ErpModel) -> Result<ConditionSummary> {
        if self.games.len() != 2 {
            return Err(Error::invalid(self.construct.as_str(), "condition summary needs keyboard and touch games"));
        }
        let scores = self.game_scores(model)?;
        match self.construct {
            Construct::Error => {
                let mut by_technique = [0.0; 2];
                for (t, s) in scores.iter().enumerate() {
                    by_technique[t] = error_count_from(s)?.proportion;
                }
                Ok(ConditionSummary {
                    by_technique,
                    by_level: [[f64::NAN; 4]; 2],
                })
            }
            _ => {
                let idx = normalize_scores(self.construct, &scores)?;
                Ok(summarize_indices(&[idx[0].clone(), idx[1].clone()], [&self.games[0].1, &self.games[1].1]))
            }
        }
    }
}

fn score_epochs(model: &ErpModel, e: &ErpEpochs) -> Result<RawScores> {
    let scores = e.decimated.iter().map(|d| model.lda.score(&model.features(d))).collect::<Result<_>>()?;
    Ok(RawScores {
        t_sec: e.t_sec.clone(),
        scores,
    })
}

fn train(construct: Construct, calib: &Recording, log: &EventLog, opts: &PipelineOptions) -> Result<ErpModel> {
    let data = ErpData::prepare(construct, calib, log, &[])?;
    let all: Vec<usize> = (0..data.calib.len()).collect();
    data.fit(&all, &data.calib.labels, opts)
}

/// Oddball sounds, targets positive.
pub fn train_attention(calib: &Recording, log: &EventLog, opts: &PipelineOptions) -> Result<ErpModel> {
    train(Construct::Attention, calib, log, opts)
}

/// Robot movements, erroneous ones positive.
pub fn train_error(calib: &Recording, log: &EventLog, opts: &PipelineOptions) -> Result<ErpModel> {
    train(Construct::Error, calib, log, opts)
}

/// Scores of the game epochs the model's construct is read from: target
/// sounds for attention, selections for errors.
pub fn erp_scores(model: &ErpModel, game: &Recording, log: &EventLog) -> Result<RawScores> {
    if model.sample_rate_hz != game.sample_rate_hz() {
        return Err(Error::invalid(
            "erp scoring",
            format!("model trained at {} Hz, recording is {} Hz", model.sample_rate_hz, game.sample_rate_hz()),
        ));
    }
    if model.filters.n_channels() != game.n_channels() {
        return Err(Error::Dimension {
            expected: model.filters.n_channels(),
            got: game.n_channels(),
        });
    }
    let construct = model.construct;
    let epochs = ErpEpochs::collect(game, log, |e| game_event(construct, e), |_| false, false)?;
    score_epochs(model, &epochs)
}

pub fn attention_index(model: &ErpModel, game: &Recording, log: &EventLog) -> Result<IndexSeries> {
    let scores = erp_scores(model, game, log)?;
    if scores.scores.is_empty() {
        return Err(Error::InsufficientData("no target sounds in game log".into()));
    }
    Ok(normalize_scores(Construct::Attention, &[scores])?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCount {
    pub n_error_labeled: usize,
    pub n_interactions: usize,
    pub proportion: f64,
}

fn error_count_from(s: &RawScores) -> Result<ErrorCount> {
    if s.scores.is_empty() {
        return Err(Error::InsufficientData("no selection events in game log".into()));
    }
    let n_error_labeled = s.scores.iter().filter(|v| **v > 0.0).count();
    Ok(ErrorCount {
        n_error_labeled,
        n_interactions: s.scores.len(),
        proportion: n_error_labeled as f64 / s.scores.len() as f64,
    })
}

/// Selections whose post-selection epoch scores above zero.
pub fn count_errors(model: &ErpModel, game: &Recording, log: &EventLog) -> Result<ErrorCount> {
    error_count_from(&erp_scores(model, game, log)?)
}


#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::protocols::{gen_oddball, OddballConfig};
    use crate::sigproc::decimate_matrix;
    use crate::synth::{gen_noise, inject_erps, ForwardModelConfig, Preset};

    fn oddball(cfg: &ForwardModelConfig, seed: u64) -> (Recording, EventLog) {
        let log = gen_oddball(&OddballConfig::default(), seed);
        let base = gen_noise(cfg, log.last_time() + 2.0, seed).unwrap();
        (inject_erps(&base, &log, cfg, &|_| 1.0).unwrap(), log)
    }

    #[test]
    fn eighty_features_per_epoch() {
        let cfg = ForwardModelConfig::preset(Preset::PaperLike);
        let (rec, log) = oddball(&cfg, 1);
        let data = ErpData::prepare(Construct::Attention, &rec, &log, &[]).unwrap();
        assert_eq!(data.calib.len(), 350);
        assert_eq!(data.calib.labels.iter().filter(|&&l| l).count(), 70);
        let all: Vec<usize> = (0..350).collect();
        let model = data.fit(&all, &data.calib.labels, &PipelineOptions::default()).unwrap();
        assert_eq!(model.n_features(), 80);
        assert_eq!(model.features(&data.calib.decimated[0]).len(), 80);
        assert_eq!(model.lda.w.len(), 80);
    }

    #[test]
    fn other_rates_scale_the_feature_count() {
        let mut cfg = ForwardModelConfig::preset(Preset::PaperLike);
        cfg.sample_rate_hz = 256.0;
        let (rec, log) = oddball(&cfg, 2);
        let model = train_attention(&rec, &log, &PipelineOptions::default()).unwrap();
        assert_eq!(model.points_per_filter(), 8);
        assert_eq!(model.n_features(), 40);
    }

    #[test]
    fn features_are_decimated_filtered_signals() {
        let cfg = ForwardModelConfig::preset(Preset::PaperLike);
        let (rec, log) = oddball(&cfg, 3);
        let data = ErpData::prepare(Construct::Attention, &rec, &log, &[]).unwrap();
        let all: Vec<usize> = (0..data.calib.len()).collect();
        let model = data.fit(&all, &data.calib.labels, &PipelineOptions::default()).unwrap();
        let sos = decimation_filter(ERP_DECIMATION);
        for i in [0, 17, 349] {
            let direct = decimate_matrix(&(&model.filters.w * &data.calib.raw[i]), ERP_DECIMATION, &sos);
            let f = model.features(&data.calib.decimated[i]);
            for r in 0..direct.nrows() {
                for c in 0..direct.ncols() {
                    assert_relative_eq!(f[r * direct.ncols() + c], direct[(r, c)], epsilon = 1e-9, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn targets_outscore_distractors_and_round_trip() {
        let cfg = ForwardModelConfig::preset(Preset::PaperLike);
        let (rec, log) = oddball(&cfg, 4);
        let model = train_attention(&rec, &log, &PipelineOptions::default()).unwrap();
        let everything = ErpEpochs::collect(&rec, &log, |e| e.kind == EventKind::Sound, |e| e.bool_attr("is_target") == Some(true), false).unwrap();
        let s = score_epochs(&model, &everything).unwrap();
        let mean = |want: bool| {
            let v: Vec<f64> = s.scores.iter().zip(&everything.labels).filter(|(_, &l)| l == want).map(|(x, _)| *x).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(true) > mean(false));

        let back = ErpModel::from_model_file(&ModelFile::parse(&model.to_model_file().to_text()).unwrap()).unwrap();
        assert_eq!(back.construct, Construct::Attention);
        let t = score_epochs(&back, &everything).unwrap();
        for (a, b) in s.scores.iter().zip(&t.scores) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn identical_epochs_normalize_to_zero() {
        let cfg = ForwardModelConfig::preset(Preset::PaperLike);
        let (rec, log) = oddball(&cfg, 5);
        let model = train_attention(&rec, &log, &PipelineOptions::default()).unwrap();
        let flat = Recording::zeros(rec.sample_rate_hz(), rec.channel_labels().to_vec(), rec.n_samples()).unwrap();
        let idx = attention_index(&model, &flat, &log).unwrap();
        assert_eq!(idx.len(), 70);
        assert!(idx.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_events_are_errors() {
        let cfg = ForwardModelConfig::preset(Preset::PaperLike);
        let (rec, log) = oddball(&cfg, 6);
        let model = train_attention(&rec, &log, &PipelineOptions::default()).unwrap();
        let empty = EventLog::default();
        assert!(attention_index(&model, &rec, &empty).is_err());
        assert!(count_errors(&model, &rec, &empty).is_err());
        let few: Vec<Event> = log.events().iter().filter(|e| e.bool_attr("is_target") != Some(true)).cloned().collect();
        let few_log = EventLog::new(few).unwrap();
        assert!(matches!(train_attention(&rec, &few_log, &PipelineOptions::default()), Err(Error::InsufficientData(_))));
        assert!(ErpData::prepare(Construct::Workload, &rec, &log, &[]).is_err());
    }
}
