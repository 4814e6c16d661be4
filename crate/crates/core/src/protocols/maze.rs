use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{oddball_schedule, rng_for, Difficulty, SessionPlan};
use crate::error::{Error, Result};
use crate::session::{Event, EventKind, EventLog};

/// Learning loops, and again recall loops, per level.
pub const TUNNEL_PHASE_LOOPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MazeTiming {
    pub lead_sec: f64,
    /// Tunnel traversal time as a multiple of the response deadline.
    pub tunnel_factor: f64,
    pub level_gap_sec: f64,
    pub sound_isi_sec: f64,
    pub sound_p_odd: f64,
    /// First sound relative to the level start.
    pub sound_offset_sec: f64,
}

impl Default for MazeTiming {
    fn default() -> Self {
        Self {
            lead_sec: 2.0,
            tunnel_factor: 2.0,
            level_gap_sec: 4.0,
            sound_isi_sec: 1.0,
            sound_p_odd: 0.2,
            sound_offset_sec: 0.5,
        }
    }
}

/// Event schedule of one technique session: level markers, one tunnel
/// event per symbol appearance and the background oddball sounds.
pub fn gen_maze_session(plan: &SessionPlan, timing: &MazeTiming, seed: u64) -> EventLog {
    let mut rng = rng_for(seed);
    let technique = plan.technique.as_str();
    let mut events = Vec::new();
    let mut t0 = timing.lead_sec;
    for (level, p) in plan.levels.iter().enumerate() {
        let difficulty = p.name.as_str();
        let tunnel_sec = timing.tunnel_factor * p.response_time_sec;
        // correct symbol per tunnel, fixed for the whole level
        let path: Vec<usize> = (0..p.depth).map(|_| rng.random_range(0..p.n_directions)).collect();
        let marker = |kind| {
            Event::new(0.0, kind)
                .with("difficulty", difficulty)
                .with("technique", technique)
                .with("level", level)
        };
        let mut start = marker(EventKind::LevelStart);
        start.t_sec = t0;
        events.push(start);
        let mut t = t0;
        for lp in 0..plan.loops() {
            let phase = if lp < plan.learn_loops { "learn" } else { "recall" };
            for (k, &symbol) in path.iter().enumerate() {
                events.push(
                    Event::new(t, EventKind::Tunnel)
                        .with("deadline_sec", p.response_time_sec)
                        .with("difficulty", difficulty)
                        .with("technique", technique)
                        .with("n_directions", p.n_directions)
                        .with("orientation_change", rng.random_bool(p.orientation_prob))
                        .with("symbol", symbol)
                        .with("tunnel", k)
                        .with("loop", lp)
                        .with("phase", phase)
                        .with("level", level),
                );
                t += tunnel_sec;
            }
        }
        let end_t = t;
        let n_sounds = ((end_t - t0 - timing.sound_offset_sec) / timing.sound_isi_sec).floor().max(0.0) as usize + 1;
        for (j, target) in oddball_schedule(n_sounds, timing.sound_p_odd, 3, &mut rng).into_iter().enumerate() {
            let ts = t0 + timing.sound_offset_sec + j as f64 * timing.sound_isi_sec;
            if ts < end_t {
                events.push(Event::sound(ts, target).with("level", level).with("difficulty", difficulty));
            }
        }
        let mut end = marker(EventKind::LevelEnd);
        end.t_sec = end_t;
        events.push(end);
        t0 = end_t + timing.level_gap_sec;
    }
    events.sort_by(|a, b| a.t_sec.total_cmp(&b.t_sec));
    EventLog::new(events).expect("schema valid by construction")
}

/// Behavioral model of a player.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSkill {
    /// Indexed by difficulty.
    pub p_correct: [f64; 4],
    pub rt_mean_sec: [f64; 4],
    pub rt_sd_sec: [f64; 4],
    /// Share of selections whose system response the player perceives as
    /// wrong. Scheduled as an exact count over the session.
    pub p_perceived_error: f64,
    pub min_rt_sec: f64,
}

impl Default for PlayerSkill {
    fn default() -> Self {
        Self {
            p_correct: [0.95, 0.80, 0.70, 0.55],
            rt_mean_sec: [1.3, 1.2, 1.0, 0.7],
            rt_sd_sec: [0.35, 0.3, 0.25, 0.15],
            p_perceived_error: 0.2,
            min_rt_sec: 0.25,
        }
    }
}

impl PlayerSkill {
    fn validate(&self) -> Result<()> {
        let probs = self.p_correct.iter().chain(std::iter::once(&self.p_perceived_error));
        if probs.clone().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("player skill", "probabilities must lie in [0, 1]"));
        }
        if self.rt_sd_sec.iter().chain(&self.rt_mean_sec).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("player skill", "reaction-time parameters must be non-negative"));
        }
        Ok(())
    }
}

/// Adds one selection per tunnel at symbol time plus reaction time, the
/// latter truncated to `[min_rt_sec, deadline]`.
pub fn simulate_player(log: &EventLog, skill: &PlayerSkill, seed: u64) -> Result<EventLog> {
    skill.validate()?;
    let mut rng = rng_for(seed);
    let tunnels: Vec<&Event> = log.of_kind(EventKind::Tunnel).map(|(_, e)| e).collect();
    let n = tunnels.len();
    let n_perceived = (skill.p_perceived_error * n as f64).round() as usize;
    let mut perceived: Vec<bool> = (0..n).map(|i| i < n_perceived).collect();
    perceived.shuffle(&mut rng);

    let mut events = log.events().to_vec();
    for (ev, &perceived_error) in tunnels.iter().zip(&perceived) {
        let d: Difficulty = ev.str_attr("difficulty").unwrap_or("EASY").parse()?;
        let i = d.index();
        let deadline = ev.num_attr("deadline_sec").expect("tunnel schema");
        let rt = if skill.rt_sd_sec[i] > 0.0 {
            Normal::new(skill.rt_mean_sec[i], skill.rt_sd_sec[i])
                .map_err(|e| Error::invalid("player skill", e.to_string()))?
                .sample(&mut rng)
        } else {
            skill.rt_mean_sec[i]
        };
        let rt = rt.max(skill.min_rt_sec.min(deadline)).min(deadline);
        let correct = rng.random_bool(skill.p_correct[i]);
        let mut sel = Event::new(ev.t_sec + rt, EventKind::Selection)
            .with("correct", correct)
            .with("rt_sec", rt)
            .with("perceived_error", perceived_error);
        for key in ["difficulty", "technique", "level"] {
            if let Some(v) = ev.attrs.get(key) {
                sel.attrs.insert(key.to_owned(), v.clone());
            }
        }
        events.push(sel);
    }
    events.sort_by(|a, b| a.t_sec.total_cmp(&b.t_sec));
    EventLog::new(events)
}
