//! End-to-end checks of the construct pipelines on synthetic participants.

use neuroeval_core::constructs::*;
use neuroeval_core::session::{Construct, Event, EventKind, EventLog, Recording};
use neuroeval_core::synth::{LatentSeries, ParticipantPlan, Preset, SessionName, StudyConfig, LATENT_DT_SEC};
use neuroeval_core::stats::pearson;

fn participant(cfg: &StudyConfig, id: usize) -> ParticipantPlan {
    cfg.participant(id).unwrap()
}

fn workload_cv(plan: &ParticipantPlan) -> f64 {
    let nb = plan.session(SessionName::Nback).unwrap();
    let data = WorkloadData::prepare(&nb.recording, &nb.events, &[]).unwrap();
    ConstructData::Workload(data).cross_validate(&PipelineOptions::default()).unwrap().mean_auroc
}

#[test]
fn workload_recovered_and_monotone_in_modulation_depth() {
    let mut aucs = Vec::new();
    for gain in [0.0, 3.5, 7.0] {
        let mut cfg = StudyConfig::new(Preset::PaperLike, 1, 21);
        cfg.model.theta.gain = gain;
        cfg.model.alpha.gain = gain;
        aucs.push(workload_cv(&participant(&cfg, 0)));
    }
    assert!(aucs.windows(2).all(|w| w[1] >= w[0]), "{aucs:?}");
    assert!(aucs[2] >= 0.85, "{aucs:?}");
    assert!((0.4..=0.6).contains(&aucs[0]), "{aucs:?}");
}

#[test]
fn workload_index_tracks_a_ramp() {
    let cfg = StudyConfig::new(Preset::PaperLike, 1, 22);
    let plan = participant(&cfg, 0);
    let nb = plan.session(SessionName::Nback).unwrap();
    let dur = plan.duration_sec(SessionName::GameKeyboard);
    let n = (dur / LATENT_DT_SEC).ceil() as usize + 1;
    let ramp = LatentSeries {
        dt_sec: LATENT_DT_SEC,
        values: (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    };
    let game = plan
        .session_with(SessionName::GameKeyboard, ramp.clone(), LatentSeries::constant(dur, LATENT_DT_SEC, 1.0))
        .unwrap();
    let model = train_workload(&nb.recording, &nb.events, &[&game.recording], &PipelineOptions::default()).unwrap();
    let idx = workload_index(&model, &game.recording).unwrap();
    assert!(idx.values.iter().all(|v| (-1.0..=1.0).contains(v)));
    assert!(idx.t_sec.windows(2).all(|w| w[1] > w[0]));
    let latent: Vec<f64> = idx.t_sec.iter().map(|&t| ramp.at(t)).collect();
    let r = pearson(&idx.values, &latent);
    assert!(r >= 0.6, "r = {r}");
}

#[test]
fn attention_index_follows_p300_amplitude() {
    let cfg = StudyConfig::new(Preset::PaperLike, 1, 23);
    let plan = participant(&cfg, 0);
    let ob = plan.session(SessionName::Oddball).unwrap();
    let model = train_attention(&ob.recording, &ob.events, &PipelineOptions::default()).unwrap();
    let dur = plan.duration_sec(SessionName::GameKeyboard);
    let (w, _) = plan.latents(SessionName::GameKeyboard);
    let mut raw = Vec::new();
    for scale in [1.0, 0.2] {
        let g = plan
            .session_with(SessionName::GameKeyboard, w.clone(), LatentSeries::constant(dur, LATENT_DT_SEC, scale))
            .unwrap();
        raw.push(erp_scores(&model, &g.recording, &g.events).unwrap());
    }
    let idx = normalize_scores(Construct::Attention, &raw).unwrap();
    assert!(idx[0].mean() > idx[1].mean(), "{} vs {}", idx[0].mean(), idx[1].mean());
}

#[test]
fn error_counts_near_truth() {
    let cfg = StudyConfig::new(Preset::PaperLike, 1, 24);
    let plan = participant(&cfg, 0);
    let robot = plan.session(SessionName::Robot).unwrap();
    let model = train_error(&robot.recording, &robot.events, &PipelineOptions::default()).unwrap();
    let g = plan.session(SessionName::GameKeyboard).unwrap();
    let count = count_errors(&model, &g.recording, &g.events).unwrap();
    let truth = plan.truth.perceived_errors[0] as f64 / plan.truth.selections[0] as f64;
    assert_eq!(count.n_interactions, plan.truth.selections[0]);
    assert!((truth - 0.19).abs() < 0.01);
    assert!((count.proportion - truth).abs() <= 0.05, "{} vs {truth}", count.proportion);
}

#[test]
fn no_perceived_errors_gives_few_detections() {
    let mut cfg = StudyConfig::new(Preset::HighSnr, 1, 25);
    cfg.truth.perceived_error = [0.0, 0.0];
    let plan = participant(&cfg, 0);
    let robot = plan.session(SessionName::Robot).unwrap();
    let model = train_error(&robot.recording, &robot.events, &PipelineOptions::default()).unwrap();
    let g = plan.session(SessionName::GameTouch).unwrap();
    let count = count_errors(&model, &g.recording, &g.events).unwrap();
    assert!(count.proportion <= 0.05, "{}", count.proportion);
}

#[test]
fn interaction_count_equals_selection_events() {
    let cfg = StudyConfig::new(Preset::PaperLike, 1, 26);
    let plan = participant(&cfg, 0);
    let robot = plan.session(SessionName::Robot).unwrap();
    let model = train_error(&robot.recording, &robot.events, &PipelineOptions::default()).unwrap();
    let events: Vec<Event> = (0..388)
        .map(|i| Event::new(0.5 + 1.5 * i as f64, EventKind::Selection).with("correct", i % 5 != 0))
        .collect();
    let log = EventLog::new(events).unwrap();
    let rec = Recording::zeros(512.0, robot.recording.channel_labels().to_vec(), 512 * 590).unwrap();
    assert_eq!(count_errors(&model, &rec, &log).unwrap().n_interactions, 388);
}

#[test]
fn true_contrast_lies_outside_shuffle_distribution() {
    let mut cfg = StudyConfig::new(Preset::PaperLike, 1, 27);
    cfg.truth.touch_workload_offset = 0.3;
    let plan = participant(&cfg, 0);
    let nb = plan.session(SessionName::Nback).unwrap();
    let kb = plan.session(SessionName::GameKeyboard).unwrap();
    let tc = plan.session(SessionName::GameTouch).unwrap();
    let data = ConstructData::Workload(
        WorkloadData::prepare(&nb.recording, &nb.events, &[(&kb.recording, &kb.events), (&tc.recording, &tc.events)]).unwrap(),
    );
    let opts = PipelineOptions::default();
    let truth = data.summarize(&opts).unwrap().contrast();
    let null = shuffle_control(&data, 20, 5, &opts).unwrap();
    assert_eq!(null.len(), 20);
    assert_eq!(null, shuffle_control(&data, 20, 5, &opts).unwrap());
    let mut sorted = null.clone();
    sorted.sort_by(f64::total_cmp);
    // Outside the full range of 20 draws, hence outside its central 95%.
    assert!(truth < sorted[0] || truth > sorted[19], "truth {truth}, null {sorted:?}");
}
