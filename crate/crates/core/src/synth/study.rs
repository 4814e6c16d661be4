use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Serialize;

use super::{gen_workload_eeg, inject_erps, stream_rng, ForwardModelConfig, LatentSeries, Preset, Segment, LATENT_DT_SEC};
use crate::error::{Error, Result};
use crate::protocols::{
    gen_errp_task, gen_maze_session, gen_nback, gen_oddball, simulate_player, Difficulty, MazeTiming, NbackConfig,
    OddballConfig, PlayerSkill, RobotConfig, SessionPlan, Technique,
};
use crate::session::{EventKind, EventLog, Recording};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SessionName {
    Nback,
    Oddball,
    Robot,
    GameKeyboard,
    GameTouch,
}

impl SessionName {
    pub const ALL: [SessionName; 5] = [
        SessionName::Nback,
        SessionName::Oddball,
        SessionName::Robot,
        SessionName::GameKeyboard,
        SessionName::GameTouch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SessionName::Nback => "nback",
            SessionName::Oddball => "oddball",
            SessionName::Robot => "robot",
            SessionName::GameKeyboard => "game_keyboard",
            SessionName::GameTouch => "game_touch",
        }
    }

    pub fn game(t: Technique) -> Self {
        match t {
            Technique::Keyboard => SessionName::GameKeyboard,
            Technique::Touch => SessionName::GameTouch,
        }
    }

    pub fn technique(self) -> Option<Technique> {
        match self {
            SessionName::GameKeyboard => Some(Technique::Keyboard),
            SessionName::GameTouch => Some(Technique::Touch),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SessionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SessionName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SessionName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::invalid("session", format!("unknown session {s:?}")))
    }
}

/// Latent constructs wired to the protocol conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrueParams {
    pub workload_by_difficulty: [f64; 4],
    pub touch_workload_offset: f64,
    pub nback_low: f64,
    pub nback_high: f64,
    /// Between game levels and during the oddball and robot tasks.
    pub rest_workload: f64,
    pub attention_by_difficulty: [f64; 4],
    /// Multiplies attention per technique (keyboard, touch).
    pub attention_technique_scale: [f64; 2],
    /// Perceived-error share per technique (keyboard, touch).
    pub perceived_error: [f64; 2],
}

impl Default for TrueParams {
    fn default() -> Self {
        Self {
            workload_by_difficulty: [0.11, 0.32, 0.43, 0.65],
            touch_workload_offset: 0.05,
            nback_low: 0.15,
            nback_high: 0.55,
            rest_workload: 0.2,
            attention_by_difficulty: [0.9, 0.8, 0.7, 0.45],
            attention_technique_scale: [1.0, 1.0],
            perceived_error: [0.19, 0.22],
        }
    }
}

impl TrueParams {
    pub fn workload(&self, d: Difficulty, t: Technique) -> f64 {
        self.workload_by_difficulty[d.index()] + if t == Technique::Touch { self.touch_workload_offset } else { 0.0 }
    }

    pub fn attention(&self, d: Difficulty, t: Technique) -> f64 {
        self.attention_by_difficulty[d.index()] * self.attention_technique_scale[t.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub seed: u64,
    pub n_participants: usize,
    pub preset: Preset,
    pub model: ForwardModelConfig,
    pub truth: TrueParams,
    pub skill: PlayerSkill,
    /// Log-normal spread of per-participant source amplitudes.
    pub variability: f64,
    pub latent_smoothing_sec: f64,
    /// Signal kept after the last event.
    pub tail_sec: f64,
    pub nback: NbackConfig,
    pub oddball: OddballConfig,
    pub robot: RobotConfig,
    pub maze: MazeTiming,
}

impl StudyConfig {
    pub fn new(preset: Preset, n_participants: usize, seed: u64) -> Self {
        Self {
            seed,
            n_participants,
            preset,
            model: ForwardModelConfig::preset(preset),
            truth: TrueParams::default(),
            skill: PlayerSkill::default(),
            variability: 0.15,
            latent_smoothing_sec: 2.0,
            tail_sec: 3.0,
            nback: NbackConfig::default(),
            oddball: OddballConfig::default(),
            robot: RobotConfig::default(),
            maze: MazeTiming::default(),
        }
    }

    pub fn participant(&self, id: usize) -> Result<ParticipantPlan> {
        ParticipantPlan::new(self, id)
    }
}

/// What the acceptance checks compare against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipantTruth {
    pub participant: usize,
    pub seed: u64,
    pub preset: String,
    pub params: TrueParams,
    pub amplitude_factors: AmplitudeFactors,
    /// Perceived-error selections per game (keyboard, touch).
    pub perceived_errors: [usize; 2],
    pub selections: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeFactors {
    pub noise: f64,
    pub theta: f64,
    pub alpha: f64,
    pub p300: f64,
    pub errp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionData {
    pub name: SessionName,
    pub recording: Recording,
    pub events: EventLog,
    pub workload: LatentSeries,
    pub attention: LatentSeries,
}

/// Event logs and per-participant model parameters; recordings are
/// synthesized on demand by [`ParticipantPlan::session`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantPlan {
    pub id: usize,
    pub seed: u64,
    pub model: ForwardModelConfig,
    pub truth: ParticipantTruth,
    logs: [EventLog; 5],
    smoothing_sec: f64,
    tail_sec: f64,
    epoch_sec: [f64; 5],
}

impl ParticipantPlan {
    fn new(cfg: &StudyConfig, id: usize) -> Result<Self> {
        let seed: u64 = stream_rng(cfg.seed, 1000 + id as u64).random();
        let mut rng = stream_rng(seed, 0);
        let sub = |k: u64| -> u64 { stream_rng(seed, 10 + k).random() };
        let jitter = LogNormal::new(0.0, cfg.variability.max(1e-12))
            .map_err(|e| Error::invalid("variability", e.to_string()))?;
        let mut factor = || if cfg.variability > 0.0 { jitter.sample(&mut rng) } else { 1.0 };
        let factors = AmplitudeFactors {
            noise: factor(),
            theta: factor(),
            alpha: factor(),
            p300: factor(),
            errp: factor(),
        };
        let mut model = cfg.model.clone();
        model.noise_amp_uv *= factors.noise;
        model.theta.amp_uv *= factors.theta;
        model.alpha.amp_uv *= factors.alpha;
        model.p300.amp_uv *= factors.p300;
        model.errp.amp_uv *= factors.errp;

        let nback = gen_nback(&cfg.nback, sub(0));
        let oddball = gen_oddball(&cfg.oddball, sub(1));
        let robot = gen_errp_task(&cfg.robot, sub(2));
        let mut games = Vec::with_capacity(2);
        let mut perceived = [0; 2];
        let mut selections = [0; 2];
        for t in Technique::ALL {
            let k = 3 + 2 * t.index() as u64;
            let plan = SessionPlan::randomized(t, sub(k));
            let schedule = gen_maze_session(&plan, &cfg.maze, sub(k));
            let skill = PlayerSkill {
                p_perceived_error: cfg.truth.perceived_error[t.index()],
                ..cfg.skill.clone()
            };
            let log = simulate_player(&schedule, &skill, sub(k + 1))?;
            for (_, e) in log.of_kind(EventKind::Selection) {
                selections[t.index()] += 1;
                perceived[t.index()] += usize::from(e.bool_attr("perceived_error") == Some(true));
            }
            games.push(log);
        }
        let touch = games.pop().expect("two games");
        let keyboard = games.pop().expect("two games");
        Ok(Self {
            id,
            seed,
            model,
            truth: ParticipantTruth {
                participant: id,
                seed,
                preset: cfg.preset.as_str().to_owned(),
                params: cfg.truth.clone(),
                amplitude_factors: factors,
                perceived_errors: perceived,
                selections,
            },
            logs: [nback, oddball, robot, keyboard, touch],
            smoothing_sec: cfg.latent_smoothing_sec,
            tail_sec: cfg.tail_sec,
            epoch_sec: [2.0, 1.0, 1.0, 1.0, 1.0],
        })
    }

    pub fn events(&self, name: SessionName) -> &EventLog {
        &self.logs[name.index()]
    }

    pub fn duration_sec(&self, name: SessionName) -> f64 {
        self.events(name).last_time() + self.epoch_sec[name.index()] + self.tail_sec
    }

    /// Workload and attention latents of one session.
    pub fn latents(&self, name: SessionName) -> (LatentSeries, LatentSeries) {
        let log = self.events(name);
        let dur = self.duration_sec(name);
        let p = &self.truth.params;
        match name {
            SessionName::Nback => {
                let mut segs = Vec::new();
                let letters: Vec<_> = log.of_kind(EventKind::Letter).map(|(_, e)| e).collect();
                for block in letters.chunk_by(|a, b| a.num_attr("block") == b.num_attr("block")) {
                    let high = block[0].str_attr("label") == Some("high");
                    segs.push(Segment {
                        start_sec: block[0].t_sec - 1.0,
                        end_sec: block[block.len() - 1].t_sec + 3.0,
                        value: if high { p.nback_high } else { p.nback_low },
                    });
                }
                (
                    LatentSeries::from_segments(dur, LATENT_DT_SEC, p.rest_workload, &segs, self.smoothing_sec),
                    LatentSeries::constant(dur, LATENT_DT_SEC, 1.0),
                )
            }
            SessionName::Oddball | SessionName::Robot => (
                LatentSeries::constant(dur, LATENT_DT_SEC, p.rest_workload),
                LatentSeries::constant(dur, LATENT_DT_SEC, 1.0),
            ),
            SessionName::GameKeyboard | SessionName::GameTouch => {
                let tech = name.technique().expect("game session");
                let mut w = Vec::new();
                let mut a = Vec::new();
                for span in log.level_spans() {
                    let d: Difficulty = span.difficulty.parse().unwrap_or(Difficulty::Easy);
                    let seg = |value| Segment {
                        start_sec: span.start_sec,
                        end_sec: span.end_sec,
                        value,
                    };
                    w.push(seg(p.workload(d, tech)));
                    a.push(seg(p.attention(d, tech)));
                }
                (
                    LatentSeries::from_segments(dur, LATENT_DT_SEC, p.rest_workload, &w, self.smoothing_sec),
                    LatentSeries::from_segments(dur, LATENT_DT_SEC, 1.0, &a, 0.0),
                )
            }
        }
    }

    /// Synthesizes one session's recording.
    pub fn session(&self, name: SessionName) -> Result<SessionData> {
        let (workload, attention) = self.latents(name);
        self.session_with(name, workload, attention)
    }

    /// Synthesizes one session's recording with the given latents in place
    /// of the planned ones; the noise and source draws are unchanged.
    pub fn session_with(&self, name: SessionName, workload: LatentSeries, attention: LatentSeries) -> Result<SessionData> {
        let seed: u64 = stream_rng(self.seed, 100 + name.index() as u64).random();
        let is_game = name.technique().is_some();
        let base = gen_workload_eeg(&self.model, &workload, self.duration_sec(name), seed, is_game)?;
        let events = self.events(name).clone();
        let recording = inject_erps(&base, &events, &self.model, &|t| attention.at(t))?;
        Ok(SessionData {
            name,
            recording,
            events,
            workload,
            attention,
        })
    }
}

/// Plans for every participant; recordings are generated lazily.
pub fn gen_participant_study(cfg: &StudyConfig) -> Result<Vec<ParticipantPlan>> {
    (0..cfg.n_participants).map(|i| cfg.participant(i)).collect()
}

#[derive(Serialize)]
struct LatentLine<'a> {
    kind: &'static str,
    participant: usize,
    session: &'a str,
    construct: &'a str,
    dt_sec: f64,
    values: &'a [f64],
}

#[derive(Serialize)]
struct RatesLine<'a> {
    kind: &'static str,
    #[serde(flatten)]
    truth: &'a ParticipantTruth,
}

/// JSON lines: one `rates` record, then `latent` series per game session.
pub fn save_truth(plan: &ParticipantPlan, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let json = |e: serde_json::Error| Error::invalid("truth", e.to_string());
    writeln!(w, "{}", serde_json::to_string(&RatesLine { kind: "rates", truth: &plan.truth }).map_err(json)?).map_err(io)?;
    for name in SessionName::ALL {
        let (wl, at) = plan.latents(name);
        for (construct, s) in [("workload", &wl), ("attention", &at)] {
            let line = LatentLine {
                kind: "latent",
                participant: plan.id,
                session: name.as_str(),
                construct,
                dt_sec: s.dt_sec,
                values: &s.values,
            };
            writeln!(w, "{}", serde_json::to_string(&line).map_err(json)?).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
