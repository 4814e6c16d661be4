//! Study runner: simulate a cohort, calibrate per-construct models, score
//! the game sessions, evaluate condition effects and draw reports, each
//! stage reading and writing one study directory.

pub mod calibrate;
pub mod common;
pub mod config;
pub mod evaluate;
pub mod layout;
pub mod manifest;
pub mod report;
pub mod score;
pub mod simulate;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use neuroeval_core::session::Construct;
use neuroeval_core::synth::Preset;

pub use common::PartialFailure;
pub use config::{PipelineFlags, RunConfig};
pub use layout::StudyLayout;

#[derive(Debug, Parser)]
#[command(name = "neuroeval", version, about = "Simulated EEG evaluation of interaction techniques")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic study.
    Simulate(SimulateArgs),
    /// Cross-validate and train per-participant models.
    Calibrate(StageArgs),
    /// Apply models to the game sessions.
    Score(StageArgs),
    /// Condition statistics across participants.
    Evaluate(StageArgs),
    /// SVG timelines and condition bar charts.
    Report(StudyArg),
    /// All stages in order.
    Run(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct StudyArg {
    /// Study directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub participants: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = Preset::PaperLike, value_parser = parse_preset)]
    pub preset: Preset,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    /// Restrict to one construct; all three by default.
    #[arg(long, value_parser = parse_construct)]
    pub construct: Option<Construct>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args, Clone)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 4)]
    pub folds: usize,
    /// Seed of the cross-validation fold assignment.
    #[arg(long, default_value_t = 0)]
    pub cv_seed: u64,
    /// Stationarity regularization of the workload spatial filters.
    #[arg(long, default_value_t = neuroeval_core::spatial::SSCSP_NU)]
    pub nu: f64,
    /// Ridge term of the ERP spatial filters.
    #[arg(long, default_value_t = neuroeval_core::spatial::REFSF_GAMMA)]
    pub gamma: f64,
    /// Use linear instead of log band power.
    #[arg(long)]
    pub linear_power: bool,
    /// Drop the class-prior term from the classifier bias.
    #[arg(long)]
    pub no_prior_bias: bool,
}

impl PipelineArgs {
    pub fn flags(&self) -> PipelineFlags {
        PipelineFlags {
            log_power: !self.linear_power,
            prior_bias: !self.no_prior_bias,
            nu: self.nu,
            gamma: self.gamma,
            folds: self.folds,
            cv_seed: self.cv_seed,
        }
    }
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: neuroeval_core::Error| e.to_string())
}

fn parse_construct(s: &str) -> std::result::Result<Construct, String> {
    s.parse().map_err(|e: neuroeval_core::Error| e.to_string())
}

fn constructs(c: Option<Construct>) -> Vec<Construct> {
    c.map_or_else(|| Construct::ALL.to_vec(), |c| vec![c])
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = RunConfig::new(a.seed, a.participants, a.preset, a.pipeline.flags())?;
            let m = simulate::cmd_simulate(&StudyLayout::new(&a.out), &cfg)?;
            eprintln!("simulated {} participants, {} files, config {}", cfg.participants, m.files.len(), m.config_sha256);
        }
        Command::Calibrate(a) => {
            let layout = StudyLayout::new(&a.out);
            let rows = calibrate::cmd_calibrate(&layout, &constructs(a.construct), &a.pipeline.flags())?;
            for c in constructs(a.construct) {
                let aucs: Vec<f64> = rows.iter().filter(|r| r.construct == c).map(|r| r.mean_auroc).collect();
                let feats = match c {
                    Construct::Workload => "30",
                    _ => "80",
                };
                eprintln!(
                    "{c}: mean CV AUROC {:.3} over {} participants ({feats} features at 512 Hz)",
                    neuroeval_core::stats::mean(&aucs),
                    aucs.len()
                );
            }
        }
        Command::Score(a) => {
            let layout = StudyLayout::new(&a.out);
            let s = score::cmd_score(&layout, &constructs(a.construct))?;
            eprintln!("scored {} index series", s.len());
        }
        Command::Evaluate(a) => {
            let layout = StudyLayout::new(&a.out);
            let rows = evaluate::cmd_evaluate(&layout, &constructs(a.construct))?;
            eprintln!("wrote {} ({} rows)", layout.evaluation().display(), rows.len());
        }
        Command::Report(a) => {
            let files = report::cmd_report(&StudyLayout::new(&a.out))?;
            eprintln!("wrote {} figures", files.len());
        }
        Command::Run(a) => {
            let layout = StudyLayout::new(&a.out);
            let flags = a.pipeline.flags();
            let cfg = RunConfig::new(a.seed, a.participants, a.preset, flags)?;
            simulate::cmd_simulate(&layout, &cfg)?;
            calibrate::cmd_calibrate(&layout, &Construct::ALL, &flags)?;
            score::cmd_score(&layout, &Construct::ALL)?;
            evaluate::cmd_evaluate(&layout, &Construct::ALL)?;
            report::cmd_report(&layout)?;
            eprintln!("study complete in {}", layout.root.display());
        }
    }
    Ok(())
}
