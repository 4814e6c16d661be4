use rand::Rng;

use super::rng_for;
use crate::session::{Event, EventKind, EventLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    fn delta(self) -> i64 {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub total_interactions: usize,
    pub p_error: f64,
    pub positions: usize,
    pub max_attempts: usize,
    /// Key press to movement.
    pub latency_sec: f64,
    /// Movement to next allowed key press.
    pub lockout_sec: f64,
    pub start_sec: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            total_interactions: 350,
            p_error: 0.2,
            positions: 7,
            max_attempts: 10,
            latency_sec: 1.0,
            lockout_sec: 1.0,
            start_sec: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobotState {
    pub position: usize,
    pub target: usize,
    pub attempts: usize,
    pub positions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobotStep {
    pub commanded: Direction,
    pub executed: Direction,
    pub from: usize,
    pub to: usize,
    /// The executed move would have left the track.
    pub clamped: bool,
}

impl RobotState {
    /// Fresh trial with distinct robot and target positions.
    pub fn new_trial<R: Rng>(positions: usize, rng: &mut R) -> Self {
        let position = rng.random_range(0..positions);
        let mut target = rng.random_range(0..positions - 1);
        if target >= position {
            target += 1;
        }
        Self {
            position,
            target,
            attempts: 0,
            positions,
        }
    }

    pub fn toward_target(&self) -> Direction {
        if self.target < self.position {
            Direction::Left
        } else {
            Direction::Right
        }
    }

    /// Executes one command, optionally inverted, clamping at the ends.
    pub fn apply(&mut self, commanded: Direction, invert: bool) -> RobotStep {
        let executed = if invert { commanded.flipped() } else { commanded };
        let from = self.position;
        let raw = from as i64 + executed.delta();
        let to = raw.clamp(0, self.positions as i64 - 1) as usize;
        self.position = to;
        self.attempts += 1;
        RobotStep {
            commanded,
            executed,
            from,
            to,
            clamped: raw != to as i64,
        }
    }

    pub fn finished(&self, max_attempts: usize) -> bool {
        self.position == self.target || self.attempts >= max_attempts
    }
}

/// The simulated operator always presses toward the target; each movement
/// is inverted with probability `p_error`.
pub fn gen_errp_task(cfg: &RobotConfig, seed: u64) -> EventLog {
    let mut rng = rng_for(seed);
    let mut state = RobotState::new_trial(cfg.positions, &mut rng);
    let mut trial = 0usize;
    let mut events = Vec::with_capacity(cfg.total_interactions);
    let mut press = cfg.start_sec;
    for _ in 0..cfg.total_interactions {
        let invert = rng.random_bool(cfg.p_error);
        let target = state.target;
        let step = state.apply(state.toward_target(), invert);
        let t = press + cfg.latency_sec;
        events.push(
            Event::new(t, EventKind::Movement)
                .with("is_error", invert)
                .with("commanded", step.commanded.as_str())
                .with("executed", step.executed.as_str())
                .with("from", step.from)
                .with("position", step.to)
                .with("target", target)
                .with("clamped", step.clamped)
                .with("trial", trial),
        );
        press = t + cfg.lockout_sec;
        if state.finished(cfg.max_attempts) {
            state = RobotState::new_trial(cfg.positions, &mut rng);
            trial += 1;
        }
    }
    EventLog::new(events).expect("sorted by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(s: &str) -> Direction {
        if s == "left" {
            Direction::Left
        } else {
            Direction::Right
        }
    }

    #[test]
    fn clamps_at_track_ends() {
        let mut s = RobotState {
            position: 0,
            target: 3,
            attempts: 0,
            positions: 7,
        };
        let step = s.apply(Direction::Left, false);
        assert_eq!((step.to, step.clamped), (0, true));
        let step = s.apply(Direction::Right, true);
        assert_eq!((step.to, step.clamped), (0, true));
        s.position = 6;
        assert!(s.apply(Direction::Right, false).clamped);
        assert_eq!(s.position, 6);
    }

    #[test]
    fn protocol_counts_and_replay() {
        let cfg = RobotConfig::default();
        let log = gen_errp_task(&cfg, 2);
        let moves: Vec<&Event> = log.of_kind(EventKind::Movement).map(|(_, e)| e).collect();
        assert_eq!(moves.len(), 350);
        let errors = moves.iter().filter(|e| e.bool_attr("is_error").unwrap()).count();
        // binomial(350, 0.2) 99% interval
        assert!((51..=89).contains(&errors), "{errors}");
        let mut prev_trial = None;
        let mut attempts = 0;
        for (i, e) in moves.iter().enumerate() {
            assert_eq!(e.t_sec, 3.0 + 2.0 * i as f64);
            let trial = e.num_attr("trial").unwrap();
            if prev_trial != Some(trial) {
                attempts = 0;
            }
            prev_trial = Some(trial);
            attempts += 1;
            assert!(attempts <= 10);
            let from = e.num_attr("from").unwrap() as usize;
            let target = e.num_attr("target").unwrap() as usize;
            let commanded = dir(e.str_attr("commanded").unwrap());
            assert_ne!(from, target);
            assert_eq!(commanded, if target < from { Direction::Left } else { Direction::Right });
            let mut s = RobotState {
                position: from,
                target,
                attempts: 0,
                positions: 7,
            };
            let step = s.apply(commanded, e.bool_attr("is_error").unwrap());
            assert_eq!(step.to as f64, e.num_attr("position").unwrap());
            assert!(step.to < 7);
            if i + 1 < moves.len() && moves[i + 1].num_attr("trial") == Some(trial) {
                assert_eq!(moves[i + 1].num_attr("from"), e.num_attr("position"));
            }
        }
    }
}
