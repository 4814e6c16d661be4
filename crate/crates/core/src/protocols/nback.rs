use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::rng_for;
use crate::session::{Event, EventKind, EventLog};

pub const CONSONANTS: [char; 20] = [
    'B', 'C', 'D', 'F', 'G', 'H', 'J', 'K', 'L', 'M', 'N', 'P', 'Q', 'R', 'S', 'T', 'V', 'W', 'X', 'Z',
];

#[derive(Debug, Clone, PartialEq)]
pub struct NbackConfig {
    /// Blocks per level; levels alternate 0-back and 2-back.
    pub blocks_per_level: usize,
    pub letters_per_block: usize,
    pub target_rate: f64,
    /// Letter onset to next onset (0.5 s display, 1.5 s gap).
    pub letter_spacing_sec: f64,
    pub block_gap_sec: f64,
    pub start_sec: f64,
}

impl Default for NbackConfig {
    fn default() -> Self {
        Self {
            blocks_per_level: 3,
            letters_per_block: 60,
            target_rate: 0.25,
            letter_spacing_sec: 2.0,
            block_gap_sec: 10.0,
            start_sec: 2.0,
        }
    }
}

/// A letter is a 0-back target when it equals the block's cue letter and
/// a 2-back target when it equals the letter two steps back.
pub fn is_target(n: usize, letters: &[char], i: usize, cue: char) -> bool {
    match n {
        0 => letters[i] == cue,
        _ => i >= n && letters[i] == letters[i - n],
    }
}

fn gen_block<R: Rng>(n: usize, len: usize, n_targets: usize, rng: &mut R) -> (char, Vec<char>) {
    let cue = *CONSONANTS.choose(rng).expect("non-empty");
    let eligible: Vec<usize> = (n..len).collect();
    let mut target_at = vec![false; len];
    for &i in eligible.choose_multiple(rng, n_targets) {
        target_at[i] = true;
    }
    let mut letters = Vec::with_capacity(len);
    for i in 0..len {
        let matching = if n == 0 { Some(cue) } else { i.checked_sub(n).map(|j| letters[j]) };
        let c = match (target_at[i], matching) {
            (true, Some(m)) => m,
            (_, m) => loop {
                let c = *CONSONANTS.choose(rng).expect("non-empty");
                if Some(c) != m {
                    break c;
                }
            },
        };
        letters.push(c);
    }
    (cue, letters)
}

/// Alternating 0-back / 2-back blocks, starting level chosen by the seed.
/// Each block holds exactly `round(target_rate * letters_per_block)` targets.
pub fn gen_nback(cfg: &NbackConfig, seed: u64) -> EventLog {
    let mut rng = rng_for(seed);
    let n_targets = (cfg.target_rate * cfg.letters_per_block as f64).round() as usize;
    let mut levels = [0usize, 2];
    levels.shuffle(&mut rng);
    let mut events = Vec::new();
    let mut t = cfg.start_sec;
    for block in 0..2 * cfg.blocks_per_level {
        let n = levels[block % 2];
        let (cue, letters) = gen_block(n, cfg.letters_per_block, n_targets, &mut rng);
        let label = if n == 0 { "low" } else { "high" };
        for (i, c) in letters.iter().enumerate() {
            events.push(
                Event::new(t, EventKind::Letter)
                    .with("letter", c.to_string())
                    .with("label", label)
                    .with("is_target", is_target(n, &letters, i, cue))
                    .with("block", block)
                    .with("n", n)
                    .with("cue", cue.to_string()),
            );
            t += cfg.letter_spacing_sec;
        }
        t += cfg.block_gap_sec - cfg.letter_spacing_sec;
    }
    EventLog::new(events).expect("sorted by construction")
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn replay(log: &EventLog) -> Vec<bool> {
        let mut out = Vec::new();
        let letters: Vec<&Event> = log.of_kind(EventKind::Letter).map(|(_, e)| e).collect();
        for block in letters.chunk_by(|a, b| a.num_attr("block") == b.num_attr("block")) {
            let n = block[0].num_attr("n").unwrap() as usize;
            let cue = block[0].str_attr("cue").unwrap().chars().next().unwrap();
            let seq: Vec<char> = block.iter().map(|e| e.str_attr("letter").unwrap().chars().next().unwrap()).collect();
            out.extend((0..seq.len()).map(|i| is_target(n, &seq, i, cue)));
        }
        out
    }

    #[test]
    fn protocol_counts() {
        let log = gen_nback(&NbackConfig::default(), 1);
        let letters: Vec<&Event> = log.of_kind(EventKind::Letter).map(|(_, e)| e).collect();
        assert_eq!(letters.len(), 360);
        assert_eq!(letters.iter().filter(|e| e.str_attr("label") == Some("high")).count(), 180);
        for block in letters.chunks(60) {
            assert_eq!(block.iter().filter(|e| e.bool_attr("is_target").unwrap()).count(), 15);
            if block[0].num_attr("n") == Some(2.0) {
                assert!(!block[0].bool_attr("is_target").unwrap());
                assert!(!block[1].bool_attr("is_target").unwrap());
            }
            for w in block.windows(2) {
                assert_eq!(w[1].t_sec - w[0].t_sec, 2.0);
            }
        }
        assert!(letters.iter().all(|e| {
            let c = e.str_attr("letter").unwrap().chars().next().unwrap();
            CONSONANTS.contains(&c) && !"AEIOUY".contains(c)
        }));
    }

    proptest! {
        #[test]
        fn labels_replay_from_letters(seed in any::<u64>()) {
            let log = gen_nback(&NbackConfig::default(), seed);
            let stored: Vec<bool> = log.of_kind(EventKind::Letter).map(|(_, e)| e.bool_attr("is_target").unwrap()).collect();
            prop_assert_eq!(stored, replay(&log));
        }
    }
}
