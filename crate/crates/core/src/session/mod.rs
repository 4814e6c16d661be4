//! Recordings, event logs and model files, with their on-disk formats.
//!
//! Recordings are stored as a one-line header followed by CSV rows, one per
//! sample instant:
//!
//! ```text
//! #neuroeval-eeg v1 fs=512 channels=AF3,AFz,AF4
//! 1.250000,-0.500000,3.000000
//! ```
//!
//! Event logs are JSON lines with required `t` and `kind` keys; every other
//! key is a scalar attribute. Model files are described in [`model_file`].

mod events;
pub mod model_file;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub use events::{load_events, save_events, Event, EventKind, EventLog, LevelSpan, Scalar};
pub use model_file::{Construct, ModelFile};

const RECORDING_MAGIC: &str = "#neuroeval-eeg";
const RECORDING_VERSION: &str = "v1";

/// Multichannel EEG signal in microvolts, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    sample_rate_hz: f64,
    channel_labels: Vec<String>,
    channels: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(
        sample_rate_hz: f64,
        channel_labels: Vec<String>,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(
                "recording",
                format!("sample rate must be positive, got {sample_rate_hz}"),
            ));
        }
        if channel_labels.len() != channels.len() {
            return Err(Error::invalid(
                "recording",
                format!(
                    "{} labels for {} channels",
                    channel_labels.len(),
                    channels.len()
                ),
            ));
        }
        if channels.is_empty() {
            return Err(Error::invalid("recording", "no channels"));
        }
        for (i, label) in channel_labels.iter().enumerate() {
            if label.is_empty() || label.contains([',', ' ', '\t']) {
                return Err(Error::invalid(
                    "recording",
                    format!("bad channel label {label:?}"),
                ));
            }
            if channel_labels[..i].contains(label) {
                return Err(Error::invalid(
                    "recording",
                    format!("duplicate channel label {label}"),
                ));
            }
        }
        let n = channels[0].len();
        if n == 0 {
            return Err(Error::invalid("recording", "no samples"));
        }
        for (label, ch) in channel_labels.iter().zip(&channels) {
            if ch.len() != n {
                return Err(Error::invalid(
                    "recording",
                    format!("channel {label} has {} samples, expected {n}", ch.len()),
                ));
            }
            if let Some(pos) = ch.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "recording",
                    format!("non-finite sample in {label} at index {pos}"),
                ));
            }
        }
        Ok(Self {
            sample_rate_hz,
            channel_labels,
            channels,
        })
    }

    pub fn zeros(sample_rate_hz: f64, channel_labels: Vec<String>, n_samples: usize) -> Result<Self> {
        let n_ch = channel_labels.len();
        Self::new(sample_rate_hz, channel_labels, vec![vec![0.0; n_samples]; n_ch])
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn duration_sec(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// Mutable access for in-place synthesis; lengths must not change.
    pub(crate) fn channels_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.channels
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channel_labels.iter().position(|l| l == label)
    }

    /// Converts a time in seconds to the nearest sample index.
    pub fn sample_at(&self, t_sec: f64) -> usize {
        (t_sec * self.sample_rate_hz).round().max(0.0) as usize
    }

    /// Applies `f` to every channel, keeping labels and rate.
    pub fn map_channels<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        Self::new(
            self.sample_rate_hz,
            self.channel_labels.clone(),
            self.channels.iter().map(|c| f(c)).collect(),
        )
    }
}

pub fn load_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::with_capacity(1 << 20, file);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "empty file".into())),
    };
    let (fs, labels) = parse_recording_header(&header).map_err(|m| parse_err(1, m))?;
    let n_ch = labels.len();
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); n_ch];

    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            if count >= n_ch {
                count += 1;
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_err(line_no, format!("column {}: not a number: {field:?}", count + 1))
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    line_no,
                    format!("column {}: non-finite sample", count + 1),
                ));
            }
            channels[count].push(v);
            count += 1;
        }
        if count != n_ch {
            return Err(parse_err(
                line_no,
                format!("expected {n_ch} values, found {count}"),
            ));
        }
    }
    if channels[0].is_empty() {
        return Err(parse_err(2, "no sample rows".into()));
    }
    Recording::new(fs, labels, channels)
}

fn parse_recording_header(header: &str) -> std::result::Result<(f64, Vec<String>), String> {
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(RECORDING_MAGIC) {
        return Err(format!("missing {RECORDING_MAGIC} header"));
    }
    match tokens.next() {
        Some(RECORDING_VERSION) => {}
        other => return Err(format!("unsupported version {other:?}")),
    }
    let mut fs = None;
    let mut labels = None;
    for tok in tokens {
        if let Some(v) = tok.strip_prefix("fs=") {
            fs = Some(v.parse::<f64>().map_err(|_| format!("bad fs value {v:?}"))?);
        } else if let Some(v) = tok.strip_prefix("channels=") {
            labels = Some(v.split(',').map(str::to_owned).collect::<Vec<_>>());
        } else {
            return Err(format!("unknown header field {tok:?}"));
        }
    }
    let fs = fs.ok_or("header lacks fs=")?;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(format!("sample rate must be positive, got {fs}"));
    }
    let labels = labels.ok_or("header lacks channels=")?;
    if labels.iter().any(String::is_empty) {
        return Err("empty channel label".into());
    }
    Ok((fs, labels))
}

pub fn save_recording(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "{RECORDING_MAGIC} {RECORDING_VERSION} fs={} channels={}",
        rec.sample_rate_hz,
        rec.channel_labels.join(",")
    )
    .map_err(io)?;
    let mut row = String::with_capacity(16 * rec.n_channels());
    for t in 0..rec.n_samples() {
        row.clear();
        for (c, ch) in rec.channels.iter().enumerate() {
            if c > 0 {
                row.push(',');
            }
            // six decimals keep the round-trip error under 1e-6
            let _ = write!(row, "{:.6}", ch[t]);
        }
        row.push('\n');
        w.write_all(row.as_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub event_index: Option<usize>,
    pub message: String,
}

/// Cross-checks an event log against the recording it annotates.
///
/// Events past the end of the signal are errors; events whose epoch of
/// `epoch_len_sec` would run past the end are warnings.
pub fn validate_pair(rec: &Recording, log: &EventLog, epoch_len_sec: f64) -> Vec<Issue> {
    let mut issues = Vec::new();
    if log.is_empty() {
        issues.push(Issue {
            severity: Severity::Warning,
            event_index: None,
            message: "no events".into(),
        });
        return issues;
    }
    let n = rec.n_samples();
    let epoch_len = (epoch_len_sec * rec.sample_rate_hz()).round() as usize;
    for (i, ev) in log.events().iter().enumerate() {
        let onset = rec.sample_at(ev.t_sec);
        if onset >= n {
            issues.push(Issue {
                severity: Severity::Error,
                event_index: Some(i),
                message: format!(
                    "{} event at {:.3} s is beyond the recording ({:.3} s)",
                    ev.kind,
                    ev.t_sec,
                    rec.duration_sec()
                ),
            });
        } else if onset + epoch_len > n {
            issues.push(Issue {
                severity: Severity::Warning,
                event_index: Some(i),
                message: format!(
                    "{} event at {:.3} s: {epoch_len_sec} s epoch overruns the recording",
                    ev.kind, ev.t_sec
                ),
            });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("C{i}")).collect()
    }

    #[test]
    fn loads_two_channel_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.eeg.csv");
        std::fs::write(
            &p,
            "#neuroeval-eeg v1 fs=256 channels=Fz,Pz\n1,2\n3,4\n5,6\n7.5,-8\n",
        )
        .unwrap();
        let rec = load_recording(&p).unwrap();
        assert_eq!(rec.n_channels(), 2);
        assert_eq!(rec.n_samples(), 4);
        assert_eq!(rec.sample_rate_hz(), 256.0);
        assert_eq!(rec.channel(1), &[2.0, 4.0, 6.0, -8.0]);
    }

    #[test]
    fn ragged_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.eeg.csv");
        std::fs::write(&p, "#neuroeval-eeg v1 fs=256 channels=A,B,C\n1,2,3\n1,2\n").unwrap();
        match load_recording(&p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 3"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_and_bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.eeg.csv");
        std::fs::write(&p, "#neuroeval-eeg v1 fs=256 channels=A\n1\nNaN\n").unwrap();
        assert!(matches!(load_recording(&p), Err(Error::Parse { line: 3, .. })));
        std::fs::write(&p, "#eeg v1 fs=256 channels=A\n1\n").unwrap();
        assert!(matches!(load_recording(&p), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&p, "#neuroeval-eeg v1 fs=-2 channels=A\n1\n").unwrap();
        assert!(matches!(load_recording(&p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn invariants_enforced() {
        assert!(Recording::new(0.0, labels(1), vec![vec![1.0]]).is_err());
        assert!(Recording::new(1.0, vec!["A".into(), "A".into()], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(Recording::new(1.0, labels(2), vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Recording::new(1.0, labels(1), vec![vec![]]).is_err());
    }

    #[test]
    fn validate_pair_cases() {
        let rec = Recording::zeros(100.0, labels(1), 1000).unwrap();
        let ok = EventLog::new(vec![Event::sound(5.0, false)]).unwrap();
        assert!(validate_pair(&rec, &ok, 1.0).is_empty());

        let late = EventLog::new(vec![Event::sound(9.5, true)]).unwrap();
        let issues = validate_pair(&rec, &late, 1.0);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Warning);
        assert!(issues[0].message.contains("overrun"));

        let beyond = EventLog::new(vec![Event::sound(12.0, true)]).unwrap();
        assert_eq!(validate_pair(&rec, &beyond, 1.0)[0].severity, Severity::Error);

        let empty = EventLog::new(vec![]).unwrap();
        let issues = validate_pair(&rec, &empty, 1.0);
        assert_eq!(issues[0].message, "no events");
    }

    proptest::proptest! {
        #[test]
        fn recording_round_trip(
            n_ch in 1usize..5,
            n in 1usize..40,
            seed in proptest::prelude::any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let chans: Vec<Vec<f64>> = (0..n_ch)
                .map(|_| (0..n).map(|_| rng.random_range(-500.0..500.0)).collect())
                .collect();
            let rec = Recording::new(512.0, labels(n_ch), chans).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("x.eeg.csv");
            save_recording(&rec, &p).unwrap();
            let back = load_recording(&p).unwrap();
            proptest::prop_assert_eq!(back.channel_labels(), rec.channel_labels());
            proptest::prop_assert_eq!(back.sample_rate_hz(), rec.sample_rate_hz());
            for c in 0..n_ch {
                for (a, b) in rec.channel(c).iter().zip(back.channel(c)) {
                    proptest::prop_assert!((a - b).abs() <= 1e-6);
                }
            }
        }
    }
}
