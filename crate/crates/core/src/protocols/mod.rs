//! Seeded event generators for the calibration tasks and the maze game.

mod maze;
mod nback;
mod oddball;
mod robot;

use std::fmt;
use std::str::FromStr;

pub use maze::{gen_maze_session, simulate_player, MazeTiming, PlayerSkill, TUNNEL_PHASE_LOOPS};
pub use nback::{gen_nback, NbackConfig, CONSONANTS};
pub use oddball::{gen_oddball, oddball_schedule, OddballConfig};
pub use robot::{gen_errp_task, Direction, RobotConfig, RobotState, RobotStep};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
    Ultra,
}

impl Difficulty {
    pub const ALL: [Difficulty; 4] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard, Difficulty::Ultra];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "EASY",
            Difficulty::Medium => "MEDIUM",
            Difficulty::Hard => "HARD",
            Difficulty::Ultra => "ULTRA",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn params(self) -> DifficultyParams {
        DIFFICULTY_TABLE[self.index()]
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Difficulty::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("difficulty", format!("unknown difficulty {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    Keyboard,
    Touch,
}

impl Technique {
    pub const ALL: [Technique; 2] = [Technique::Keyboard, Technique::Touch];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Keyboard => "keyboard",
            Technique::Touch => "touch",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("technique", format!("unknown technique {s:?}")))
    }
}

/// Maze parameters of one difficulty level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyParams {
    pub name: Difficulty,
    /// Tunnels from entrance to exit.
    pub depth: usize,
    /// Branches offered at each tunnel.
    pub n_directions: usize,
    pub response_time_sec: f64,
    /// Chance that the maze orientation changes in a tunnel.
    pub orientation_prob: f64,
}

pub const DIFFICULTY_TABLE: [DifficultyParams; 4] = [
    DifficultyParams {
        name: Difficulty::Easy,
        depth: 2,
        n_directions: 2,
        response_time_sec: 3.0,
        orientation_prob: 0.0,
    },
    DifficultyParams {
        name: Difficulty::Medium,
        depth: 4,
        n_directions: 3,
        response_time_sec: 2.5,
        orientation_prob: 0.30,
    },
    DifficultyParams {
        name: Difficulty::Hard,
        depth: 5,
        n_directions: 4,
        response_time_sec: 2.0,
        orientation_prob: 0.60,
    },
    DifficultyParams {
        name: Difficulty::Ultra,
        depth: 5,
        n_directions: 4,
        response_time_sec: 1.0,
        orientation_prob: 1.0,
    },
];

/// Level order for one technique session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPlan {
    pub technique: Technique,
    pub levels: Vec<DifficultyParams>,
    pub learn_loops: usize,
    pub recall_loops: usize,
}

pub const LEVEL_REPEATS: usize = 2;

impl SessionPlan {
    pub fn new(technique: Technique, levels: Vec<DifficultyParams>) -> Result<Self> {
        for d in Difficulty::ALL {
            let n = levels.iter().filter(|p| p.name == d).count();
            if n != LEVEL_REPEATS {
                return Err(Error::invalid(
                    "session plan",
                    format!("{d} appears {n} times, expected {LEVEL_REPEATS}"),
                ));
            }
        }
        if let Some(p) = levels.iter().find(|p| **p != p.name.params()) {
            return Err(Error::invalid("session plan", format!("{} parameters differ from the table", p.name)));
        }
        Ok(Self {
            technique,
            levels,
            learn_loops: TUNNEL_PHASE_LOOPS,
            recall_loops: TUNNEL_PHASE_LOOPS,
        })
    }

    /// Each difficulty twice, in a seeded random order.
    pub fn randomized(technique: Technique, seed: u64) -> Self {
        let mut levels: Vec<DifficultyParams> = DIFFICULTY_TABLE
            .iter()
            .flat_map(|p| std::iter::repeat_n(*p, LEVEL_REPEATS))
            .collect();
        levels.shuffle(&mut rng_for(seed));
        Self::new(technique, levels).expect("balanced by construction")
    }

    pub fn loops(&self) -> usize {
        self.learn_loops + self.recall_loops
    }
}
