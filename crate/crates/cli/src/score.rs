use anyhow::{Context, Result};

use neuroeval_core::constructs::{count_errors, erp_scores, normalize_scores, workload_scores, ErpModel, ErrorCount, IndexSeries, RawScores, WorkloadModel};
use neuroeval_core::session::{Construct, ModelFile};

use crate::common::{load_session, num, per_participant, session_files, write_csv, LoadedSession, GAMES};
use crate::calibrate::{calibrated_config, stage_manifest};
use crate::layout::{participant_tag, StudyLayout, SCORES};

/// Index bookkeeping for one game session.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSummary {
    pub participant: usize,
    pub construct: Construct,
    pub session: &'static str,
    pub n_scores: usize,
    pub n_removed: usize,
}

fn raw_scores(model: &ModelFile, c: Construct, games: &[LoadedSession]) -> Result<Vec<RawScores>> {
    match c {
        Construct::Workload => {
            let m = WorkloadModel::from_model_file(model)?;
            games.iter().map(|g| Ok(workload_scores(&m, &g.recording)?)).collect()
        }
        _ => {
            let m = ErpModel::from_model_file(model)?;
            games.iter().map(|g| Ok(erp_scores(&m, &g.recording, &g.events)?)).collect()
        }
    }
}

/// Both games normalized together so their indices share one scale.
pub fn score_indices(model: &ModelFile, c: Construct, games: &[LoadedSession]) -> Result<Vec<IndexSeries>> {
    Ok(normalize_scores(c, &raw_scores(model, c, games)?)?)
}

pub fn score_errors(model: &ModelFile, games: &[LoadedSession]) -> Result<Vec<ErrorCount>> {
    let m = ErpModel::from_model_file(model)?;
    games.iter().map(|g| Ok(count_errors(&m, &g.recording, &g.events)?)).collect()
}

pub fn cmd_score(layout: &StudyLayout, constructs: &[Construct]) -> Result<Vec<IndexSummary>> {
    let ids = layout.participants()?;
    let mut needed = Vec::new();
    for &id in &ids {
        for g in GAMES {
            needed.extend(session_files(layout, id, g));
        }
        for &c in constructs {
            needed.push((id, layout.model(id, c)));
        }
    }
    layout.require(&needed)?;
    layout.ensure_dir(SCORES)?;

    let per = per_participant("score", &ids, |id| {
        let games = GAMES.iter().map(|&g| load_session(layout, id, g)).collect::<Result<Vec<_>>>()?;
        let mut summaries = Vec::new();
        for &c in constructs {
            let mp = layout.model(id, c);
            let model = ModelFile::load(&mp).with_context(|| format!("loading {}", mp.display()))?;
            if c == Construct::Error {
                let counts = score_errors(&model, &games)?;
                let rows = GAMES
                    .iter()
                    .zip(&counts)
                    .map(|(g, n)| vec![g.as_str().into(), n.n_error_labeled.to_string(), n.n_interactions.to_string(), num(n.proportion)])
                    .collect::<Vec<_>>();
                write_csv(&layout.error_counts(id), &["session", "n_error_labeled", "n_interactions", "proportion"], &rows)?;
                continue;
            }
            let idx = score_indices(&model, c, &games)?;
            for (g, s) in GAMES.iter().zip(&idx) {
                let rows: Vec<Vec<String>> = s.t_sec.iter().zip(&s.values).map(|(t, v)| vec![num(*t), num(*v)]).collect();
                write_csv(&layout.index(id, *g, c), &["t_sec", "index"], &rows)?;
                summaries.push(IndexSummary {
                    participant: id,
                    construct: c,
                    session: g.as_str(),
                    n_scores: s.len() + s.removed,
                    n_removed: s.removed,
                });
            }
        }
        Ok(summaries)
    })?;
    let summaries: Vec<IndexSummary> = per.into_iter().flat_map(|(_, s)| s).collect();
    for &c in constructs.iter().filter(|&&c| c != Construct::Error) {
        let rows: Vec<Vec<String>> = summaries
            .iter()
            .filter(|s| s.construct == c)
            .map(|s| vec![participant_tag(s.participant), s.session.into(), s.n_scores.to_string(), s.n_removed.to_string()])
            .collect();
        write_csv(&layout.index_summary(c), &["participant", "session", "n_scores", "n_removed"], &rows)?;
    }
    stage_manifest(layout, "score", SCORES, &calibrated_config(layout)?)?;
    Ok(summaries)
}
