use anyhow::Result;

use neuroeval_core::constructs::{ConstructData, ErpData, WorkloadData};
use neuroeval_core::session::{Construct, EventLog, ModelFile, Recording};

use crate::common::{calibration_session, load_session, num, per_participant, session_files, write_csv, GAMES};
use crate::config::{PipelineFlags, RunConfig};
use crate::layout::{participant_tag, StudyLayout, MODELS};
use crate::manifest::{files_in, Manifest};

/// Calibration cross-validation of one participant and construct.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub participant: usize,
    pub construct: Construct,
    pub n_epochs: usize,
    pub n_positive: usize,
    pub fold_auroc: Vec<f64>,
    pub mean_auroc: f64,
}

/// Loads a construct's calibration session; workload also takes the games
/// as its use context.
pub fn prepare(layout: &StudyLayout, id: usize, c: Construct, games: &[(&Recording, &EventLog)]) -> Result<ConstructData> {
    let calib = load_session(layout, id, calibration_session(c))?;
    Ok(match c {
        Construct::Workload => ConstructData::Workload(WorkloadData::prepare(&calib.recording, &calib.events, games)?),
        _ => ConstructData::Erp(ErpData::prepare(c, &calib.recording, &calib.events, &[])?),
    })
}

pub fn model_file(data: &ConstructData, flags: &PipelineFlags) -> Result<ModelFile> {
    let opts = flags.options();
    let labels = data.labels();
    let all: Vec<usize> = (0..labels.len()).collect();
    Ok(match data {
        ConstructData::Workload(d) => d.fit(&all, labels, &opts)?.to_model_file(),
        ConstructData::Erp(d) => d.fit(&all, labels, &opts)?.to_model_file(),
    })
}

/// Cross-validates and trains every construct for every participant, then
/// writes the models and per-construct CV tables.
pub fn cmd_calibrate(layout: &StudyLayout, constructs: &[Construct], flags: &PipelineFlags) -> Result<Vec<CvRow>> {
    flags.validate()?;
    let ids = layout.participants()?;
    let mut needed = Vec::new();
    for &id in &ids {
        for &c in constructs {
            needed.extend(session_files(layout, id, calibration_session(c)));
        }
        if constructs.contains(&Construct::Workload) {
            for g in GAMES {
                needed.extend(session_files(layout, id, g));
            }
        }
    }
    layout.require(&needed)?;
    layout.ensure_dir(MODELS)?;
    let opts = flags.options();

    let per = per_participant("calibrate", &ids, |id| {
        let games = if constructs.contains(&Construct::Workload) {
            GAMES.iter().map(|&g| load_session(layout, id, g)).collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let game_refs: Vec<_> = games.iter().map(|g| (&g.recording, &g.events)).collect();
        let mut rows = Vec::new();
        for &c in constructs {
            let data = prepare(layout, id, c, &game_refs)?;
            let cv = data.cross_validate(&opts)?;
            model_file(&data, flags)?.save(layout.model(id, c))?;
            let labels = data.labels();
            rows.push(CvRow {
                participant: id,
                construct: c,
                n_epochs: labels.len(),
                n_positive: labels.iter().filter(|&&l| l).count(),
                fold_auroc: cv.fold_auroc,
                mean_auroc: cv.mean_auroc,
            });
        }
        Ok(rows)
    });
    let per = per?;
    let rows: Vec<CvRow> = per.into_iter().flat_map(|(_, r)| r).collect();

    let mut header = vec!["participant".to_string(), "n_epochs".into(), "n_positive".into()];
    header.extend((1..=flags.folds).map(|k| format!("fold_{k}")));
    header.push("mean_auroc".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    for &c in constructs {
        let table: Vec<Vec<String>> = rows
            .iter()
            .filter(|r| r.construct == c)
            .map(|r| {
                let mut v = vec![participant_tag(r.participant), r.n_epochs.to_string(), r.n_positive.to_string()];
                v.extend(r.fold_auroc.iter().map(|&a| num(a)));
                v.push(num(r.mean_auroc));
                v
            })
            .collect();
        write_csv(&layout.cv_report(c), &header, &table)?;
    }
    let mut cfg: RunConfig = Manifest::load(&layout.manifest())?.config;
    cfg.pipeline = *flags;
    stage_manifest(layout, "calibrate", MODELS, &cfg)?;
    Ok(rows)
}

/// Study config with the pipeline flags the models were trained with.
pub(crate) fn calibrated_config(layout: &StudyLayout) -> Result<RunConfig> {
    let m = layout.dir(MODELS).join("manifest.json");
    Ok(if m.is_file() { Manifest::load(&m)? } else { Manifest::load(&layout.manifest())? }.config)
}

/// Hashes every file of a stage directory.
pub(crate) fn stage_manifest(layout: &StudyLayout, stage: &str, dir: &str, cfg: &RunConfig) -> Result<()> {
    let d = layout.dir(dir);
    Manifest::build(stage, cfg, &layout.root, files_in(&d, "manifest.json")?)?.save(&d.join("manifest.json"))
}
