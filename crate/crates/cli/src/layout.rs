use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use neuroeval_core::session::Construct;
use neuroeval_core::synth::SessionName;

use crate::manifest::Manifest;

/// Paths of a study directory:
/// `p<NN>/{session}.{eeg.csv,events.jsonl}`, `p<NN>/truth.jsonl`,
/// `models/`, `scores/`, `report/` and `manifest.json`.
#[derive(Debug, Clone)]
pub struct StudyLayout {
    pub root: PathBuf,
}

pub const MODELS: &str = "models";
pub const SCORES: &str = "scores";
pub const REPORT: &str = "report";

/// `p01`, `p02`, ... for zero-based ids.
pub fn participant_tag(id: usize) -> String {
    format!("p{:02}", id + 1)
}

impl StudyLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn participant_dir(&self, id: usize) -> PathBuf {
        self.root.join(participant_tag(id))
    }

    pub fn recording(&self, id: usize, s: SessionName) -> PathBuf {
        self.participant_dir(id).join(format!("{}.eeg.csv", s.as_str()))
    }

    pub fn events(&self, id: usize, s: SessionName) -> PathBuf {
        self.participant_dir(id).join(format!("{}.events.jsonl", s.as_str()))
    }

    pub fn truth(&self, id: usize) -> PathBuf {
        self.participant_dir(id).join("truth.jsonl")
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn model(&self, id: usize, c: Construct) -> PathBuf {
        self.dir(MODELS).join(format!("{}_{}.model", participant_tag(id), c.as_str()))
    }

    pub fn cv_report(&self, c: Construct) -> PathBuf {
        self.dir(MODELS).join(format!("cv_{}.csv", c.as_str()))
    }

    pub fn index(&self, id: usize, s: SessionName, c: Construct) -> PathBuf {
        self.dir(SCORES).join(format!("{}_{}_{}.csv", participant_tag(id), s.as_str(), c.as_str()))
    }

    pub fn index_summary(&self, c: Construct) -> PathBuf {
        self.dir(SCORES).join(format!("summary_{}.csv", c.as_str()))
    }

    pub fn error_counts(&self, id: usize) -> PathBuf {
        self.dir(SCORES).join(format!("{}_error_counts.csv", participant_tag(id)))
    }

    pub fn evaluation(&self) -> PathBuf {
        self.dir(REPORT).join("evaluation.csv")
    }

    /// Participant ids recorded by `simulate`.
    pub fn participants(&self) -> Result<Vec<usize>> {
        let m = Manifest::load(&self.manifest())
            .with_context(|| format!("{} is not a simulated study (no readable manifest)", self.root.display()))?;
        Ok((0..m.config.participants).collect())
    }

    pub fn ensure_dir(&self, name: &str) -> Result<PathBuf> {
        let d = self.dir(name);
        std::fs::create_dir_all(&d).with_context(|| format!("cannot create {}", d.display()))?;
        Ok(d)
    }

    /// Fails listing every missing path, grouped by participant.
    pub fn require(&self, needed: &[(usize, PathBuf)]) -> Result<()> {
        let missing: Vec<String> = needed
            .iter()
            .filter(|(_, p)| !p.is_file())
            .map(|(id, p)| format!("{}: missing {}", participant_tag(*id), rel(&self.root, p)))
            .collect();
        if !missing.is_empty() {
            bail!("incomplete study:\n  {}", missing.join("\n  "));
        }
        Ok(())
    }
}

pub(crate) fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/")
}
