use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use neuroeval_core::classify::LdaOptions;
use neuroeval_core::constructs::PipelineOptions;
use neuroeval_core::sigproc::PowerScale;
use neuroeval_core::spatial::{REFSF_GAMMA, SSCSP_NU};
use neuroeval_core::synth::Preset;

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub participants: usize,
    pub preset: String,
    pub pipeline: PipelineFlags,
}

impl RunConfig {
    pub fn new(seed: u64, participants: usize, preset: Preset, pipeline: PipelineFlags) -> Result<Self> {
        if participants == 0 || participants > 99 {
            bail!("participant count must be in 1..=99, got {participants}");
        }
        pipeline.validate()?;
        Ok(Self {
            seed,
            participants,
            preset: preset.to_string(),
            pipeline,
        })
    }

    pub fn preset(&self) -> Result<Preset> {
        Ok(self.preset.parse()?)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineFlags {
    pub log_power: bool,
    pub prior_bias: bool,
    pub nu: f64,
    pub gamma: f64,
    pub folds: usize,
    pub cv_seed: u64,
}

impl Default for PipelineFlags {
    fn default() -> Self {
        Self {
            log_power: true,
            prior_bias: true,
            nu: SSCSP_NU,
            gamma: REFSF_GAMMA,
            folds: 4,
            cv_seed: 0,
        }
    }
}

impl PipelineFlags {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.nu) {
            bail!("nu must be in [0, 1], got {}", self.nu);
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            bail!("gamma must be non-negative, got {}", self.gamma);
        }
        if self.folds < 2 {
            bail!("need at least 2 folds, got {}", self.folds);
        }
        Ok(())
    }

    pub fn options(&self) -> PipelineOptions {
        PipelineOptions {
            nu: self.nu,
            gamma: self.gamma,
            power: if self.log_power { PowerScale::Log } else { PowerScale::Linear },
            lda: LdaOptions {
                prior_bias: self.prior_bias,
            },
            folds: self.folds,
            cv_seed: self.cv_seed,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
