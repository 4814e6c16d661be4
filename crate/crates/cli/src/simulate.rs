use anyhow::{Context, Result};

use neuroeval_core::session::{save_events, save_recording};
use neuroeval_core::synth::{save_truth, SessionName, StudyConfig};

use crate::common::per_participant;
use crate::config::RunConfig;
use crate::layout::StudyLayout;
use crate::manifest::Manifest;

/// Writes every participant's five sessions and ground truth, then the
/// study manifest.
pub fn cmd_simulate(layout: &StudyLayout, cfg: &RunConfig) -> Result<Manifest> {
    std::fs::create_dir_all(&layout.root).with_context(|| format!("cannot create {}", layout.root.display()))?;
    let study = StudyConfig::new(cfg.preset()?, cfg.participants, cfg.seed);
    let ids: Vec<usize> = (0..cfg.participants).collect();
    let written = per_participant("simulate", &ids, |id| {
        let plan = study.participant(id)?;
        let dir = layout.participant_dir(id);
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut files = Vec::new();
        for name in SessionName::ALL {
            let s = plan.session(name)?;
            let (rp, ep) = (layout.recording(id, name), layout.events(id, name));
            save_recording(&s.recording, &rp)?;
            save_events(&s.events, &ep)?;
            files.push(rp);
            files.push(ep);
        }
        let tp = layout.truth(id);
        save_truth(&plan, &tp)?;
        files.push(tp);
        Ok(files)
    })?;
    let files = written.into_iter().flat_map(|(_, f)| f).collect();
    let manifest = Manifest::build("simulate", cfg, &layout.root, files)?;
    manifest.save(&layout.manifest())?;
    Ok(manifest)
}
