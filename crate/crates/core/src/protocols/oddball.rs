use rand::seq::SliceRandom;
use rand::Rng;

use super::rng_for;
use crate::session::{Event, EventLog};

#[derive(Debug, Clone, PartialEq)]
pub struct OddballConfig {
    pub n_sounds: usize,
    pub p_odd: f64,
    pub isi_sec: f64,
    pub start_sec: f64,
    /// Longest allowed run of consecutive targets.
    pub max_run: usize,
    pub target_duration_sec: f64,
    pub distractor_duration_sec: f64,
}

impl Default for OddballConfig {
    fn default() -> Self {
        Self {
            n_sounds: 350,
            p_odd: 0.2,
            isi_sec: 1.0,
            start_sec: 0.0,
            max_run: 3,
            target_duration_sec: 0.2,
            distractor_duration_sec: 0.07,
        }
    }
}

fn longest_run(xs: &[bool]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for &x in xs {
        cur = if x { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

/// Exactly `round(p_odd * n)` targets at shuffled positions, reshuffled
/// until no run of targets exceeds `max_run`.
pub fn oddball_schedule<R: Rng>(n: usize, p_odd: f64, max_run: usize, rng: &mut R) -> Vec<bool> {
    let n_targets = (p_odd * n as f64).round() as usize;
    let mut seq: Vec<bool> = (0..n).map(|i| i < n_targets).collect();
    let feasible = max_run > 0 && n_targets <= (n - n_targets + 1) * max_run;
    loop {
        seq.shuffle(rng);
        if !feasible || longest_run(&seq) <= max_run {
            return seq;
        }
    }
}

pub fn gen_oddball(cfg: &OddballConfig, seed: u64) -> EventLog {
    let mut rng = rng_for(seed);
    let seq = oddball_schedule(cfg.n_sounds, cfg.p_odd, cfg.max_run, &mut rng);
    let events = seq
        .iter()
        .enumerate()
        .map(|(i, &target)| {
            let dur = if target { cfg.target_duration_sec } else { cfg.distractor_duration_sec };
            Event::sound(cfg.start_sec + i as f64 * cfg.isi_sec, target).with("duration_sec", dur)
        })
        .collect();
    EventLog::new(events).expect("sorted by construction")
}
