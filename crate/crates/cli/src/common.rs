use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use neuroeval_core::session::{load_events, load_recording, Construct, EventLog, Recording};
use neuroeval_core::synth::SessionName;

use crate::layout::{participant_tag, StudyLayout};

/// Some participants failed; everything else was written.
#[derive(Debug)]
pub struct PartialFailure {
    pub stage: String,
    pub failed: Vec<String>,
}

impl fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} item(s) failed", self.stage, self.failed.len())?;
        for item in &self.failed {
            write!(f, "\n  {item}")?;
        }
        Ok(())
    }
}

impl std::error::Error for PartialFailure {}

/// Runs `job` for every participant, in parallel, returning successes in id
/// order or a [`PartialFailure`] naming each failed participant.
pub fn per_participant<T, F>(stage: &str, ids: &[usize], job: F) -> Result<Vec<(usize, T)>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let results: Vec<(usize, Result<T>)> = ids.par_iter().map(|&id| (id, job(id))).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) => failed.push(format!("{}: {e:#}", participant_tag(id))),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(PartialFailure {
            stage: stage.into(),
            failed,
        }
        .into())
    }
}

pub struct LoadedSession {
    pub recording: Recording,
    pub events: EventLog,
}

pub fn load_session(layout: &StudyLayout, id: usize, name: SessionName) -> Result<LoadedSession> {
    let rp = layout.recording(id, name);
    let ep = layout.events(id, name);
    Ok(LoadedSession {
        recording: load_recording(&rp).with_context(|| format!("loading {}", rp.display()))?,
        events: load_events(&ep).with_context(|| format!("loading {}", ep.display()))?,
    })
}

pub fn session_files(layout: &StudyLayout, id: usize, name: SessionName) -> [(usize, std::path::PathBuf); 2] {
    [(id, layout.recording(id, name)), (id, layout.events(id, name))]
}

pub const GAMES: [SessionName; 2] = [SessionName::GameKeyboard, SessionName::GameTouch];

/// The session a construct is calibrated on.
pub fn calibration_session(c: Construct) -> SessionName {
    match c {
        Construct::Workload => SessionName::Nback,
        Construct::Attention => SessionName::Oddball,
        Construct::Error => SessionName::Robot,
    }
}

/// Writes `header` then `rows`, comma-separated.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

/// Data rows of a CSV written by [`write_csv`], split on commas.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .with_context(|| format!("{} is empty", path.display()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(str::to_owned).collect()).collect();
    Ok((header, rows))
}

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NA".into()
    }
}
