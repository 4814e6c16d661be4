//! Synthetic EEG forward model with known latent workload, attention and
//! perceived errors.
//!
//! Every source mixes into the montage through a Gaussian falloff over
//! channel-list index around a named center channel.

mod latent;
mod noise;
mod study;

pub use latent::{LatentSeries, Segment};
pub use noise::{band_shape, pink_shape, shaped_noise, shaped_noise_pair};
pub use study::{
    gen_participant_study, save_truth, ParticipantPlan, ParticipantTruth, SessionData, SessionName, StudyConfig,
    TrueParams, AmplitudeFactors,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::session::{EventKind, EventLog, Recording};

pub const MONTAGE: [&str; 32] = [
    "AF3", "AFz", "AF4", "F7", "F3", "Fz", "F4", "F8", "FC3", "FCz", "FC4", "C5", "C3", "C1", "Cz", "C2", "C4", "C6",
    "CP3", "CPz", "CP4", "P7", "P3", "Pz", "P4", "P8", "PO7", "POz", "PO8", "O1", "Oz", "O2",
];

pub const SAMPLE_RATE_HZ: f64 = 512.0;

/// Grid step of latent series.
pub const LATENT_DT_SEC: f64 = 0.05;

const STREAM_NOISE: u64 = 0;
const STREAM_SOURCES: u64 = 1;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialProfile {
    pub center: String,
    /// Gaussian standard deviation in channel-index units.
    pub width: f64,
}

impl SpatialProfile {
    pub fn new(center: &str, width: f64) -> Self {
        Self {
            center: center.to_owned(),
            width,
        }
    }

    fn center_index(&self, labels: &[String]) -> Result<usize> {
        labels
            .iter()
            .position(|l| *l == self.center)
            .ok_or_else(|| Error::invalid("forward model", format!("center channel {} not in montage", self.center)))
    }

    pub fn gains(&self, labels: &[String], offset: f64) -> Result<Vec<f64>> {
        let c = self.center_index(labels)? as f64 + offset;
        Ok((0..labels.len())
            .map(|i| (-(i as f64 - c).powi(2) / (2.0 * self.width * self.width)).exp())
            .collect())
    }
}

/// Band-limited oscillatory activity whose power follows a latent.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSource {
    pub low_hz: f64,
    pub high_hz: f64,
    /// RMS of each component at zero modulation.
    pub amp_uv: f64,
    /// Power scales as `1 + gain * drive`.
    pub gain: f64,
    pub profile: SpatialProfile,
    /// Independent components, centered `spacing` channels apart.
    pub components: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPeak {
    pub latency_sec: f64,
    pub width_sec: f64,
    /// Signed relative height.
    pub weight: f64,
}

/// Event-locked deflection built from Gaussian peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpShape {
    pub amp_uv: f64,
    pub peaks: Vec<GaussianPeak>,
    pub profile: SpatialProfile,
}

pub const TEMPLATE_SEC: f64 = 1.0;

impl ErpShape {
    pub fn p300(amp_uv: f64) -> Self {
        Self {
            amp_uv,
            peaks: vec![GaussianPeak {
                latency_sec: 0.300,
                width_sec: 0.080,
                weight: 1.0,
            }],
            profile: SpatialProfile::new("Pz", 3.0),
        }
    }

    pub fn errp(amp_uv: f64) -> Self {
        Self {
            amp_uv,
            peaks: vec![
                GaussianPeak {
                    latency_sec: 0.250,
                    width_sec: 0.035,
                    weight: -1.0,
                },
                GaussianPeak {
                    latency_sec: 0.320,
                    width_sec: 0.045,
                    weight: 1.0,
                },
            ],
            profile: SpatialProfile::new("FCz", 3.0),
        }
    }

    pub fn waveform(&self, t_sec: f64) -> f64 {
        self.amp_uv
            * self
                .peaks
                .iter()
                .map(|p| p.weight * (-(t_sec - p.latency_sec).powi(2) / (2.0 * p.width_sec * p.width_sec)).exp())
                .sum::<f64>()
    }

    /// Channels x samples over one template length.
    pub fn template(&self, fs: f64, labels: &[String]) -> Result<DMatrix<f64>> {
        let g = self.profile.gains(labels, 0.0)?;
        let n = (TEMPLATE_SEC * fs).round() as usize;
        let wave: Vec<f64> = (0..n).map(|k| self.waveform(k as f64 / fs)).collect();
        Ok(DMatrix::from_fn(labels.len(), n, |c, k| g[c] * wave[k]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperLike,
    Null,
    HighSnr,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::PaperLike => "paper-like",
            Preset::Null => "null",
            Preset::HighSnr => "high-snr",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-like" => Ok(Preset::PaperLike),
            "null" => Ok(Preset::Null),
            "high-snr" => Ok(Preset::HighSnr),
            _ => Err(Error::invalid("preset", format!("unknown preset {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModelConfig {
    pub sample_rate_hz: f64,
    pub channel_labels: Vec<String>,
    pub noise_amp_uv: f64,
    pub pink_exponent: f64,
    pub noise_highpass_hz: f64,
    /// Frontal, power rising with workload.
    pub theta: OscillatorSource,
    /// Parietal, power falling with workload.
    pub alpha: OscillatorSource,
    /// Game-only occipital activity with a slowly wandering envelope.
    pub context: Option<OscillatorSource>,
    /// Envelope log-amplitude RMS of the context source.
    pub context_wander: f64,
    pub p300: ErpShape,
    pub errp: ErpShape,
}

impl ForwardModelConfig {
    pub fn preset(p: Preset) -> Self {
        let mut cfg = Self {
            sample_rate_hz: SAMPLE_RATE_HZ,
            channel_labels: MONTAGE.iter().map(|s| s.to_string()).collect(),
            noise_amp_uv: 10.0,
            pink_exponent: 1.0,
            noise_highpass_hz: 0.5,
            theta: OscillatorSource {
                low_hz: 4.0,
                high_hz: 6.0,
                amp_uv: 4.0,
                gain: 7.0,
                profile: SpatialProfile::new("Fz", 2.0),
                components: 3,
                spacing: 2.0,
            },
            alpha: OscillatorSource {
                low_hz: 8.0,
                high_hz: 12.0,
                amp_uv: 4.0,
                gain: 7.0,
                profile: SpatialProfile::new("Pz", 2.0),
                components: 3,
                spacing: 2.0,
            },
            context: Some(OscillatorSource {
                low_hz: 8.0,
                high_hz: 13.0,
                amp_uv: 2.0,
                gain: 0.0,
                profile: SpatialProfile::new("Oz", 2.0),
                components: 1,
                spacing: 0.0,
            }),
            context_wander: 0.5,
            p300: ErpShape::p300(10.5),
            errp: ErpShape::errp(9.0),
        };
        match p {
            Preset::PaperLike => {}
            Preset::Null => {
                cfg.theta.gain = 0.0;
                cfg.alpha.gain = 0.0;
                cfg.p300.amp_uv = 0.0;
                cfg.errp.amp_uv = 0.0;
            }
            Preset::HighSnr => {
                cfg.theta.gain *= 3.0;
                cfg.alpha.gain *= 3.0;
                cfg.p300.amp_uv *= 2.5;
                cfg.errp.amp_uv *= 2.5;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let amps = [
            self.noise_amp_uv,
            self.theta.amp_uv,
            self.alpha.amp_uv,
            self.p300.amp_uv,
            self.errp.amp_uv,
            self.context.as_ref().map_or(0.0, |c| c.amp_uv),
        ];
        if amps.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::invalid("forward model", "amplitudes must be non-negative"));
        }
        for shape in [&self.p300, &self.errp] {
            if shape.peaks.iter().any(|p| p.latency_sec - 3.0 * p.width_sec < 0.0 || p.latency_sec + 3.0 * p.width_sec > TEMPLATE_SEC) {
                return Err(Error::invalid("forward model", "ERP template must fit within one second"));
            }
        }
        Ok(())
    }

    fn n_samples(&self, duration_sec: f64) -> usize {
        (duration_sec * self.sample_rate_hz).round() as usize
    }
}

/// Independent pink noise on every channel at `noise_amp_uv` RMS.
pub fn gen_noise(cfg: &ForwardModelConfig, duration_sec: f64, seed: u64) -> Result<Recording> {
    cfg.validate()?;
    let n = cfg.n_samples(duration_sec);
    if n == 0 {
        return Err(Error::invalid("duration", "must cover at least one sample"));
    }
    let mut rng = stream_rng(seed, STREAM_NOISE);
    let shape = pink_shape(cfg.pink_exponent, cfg.noise_highpass_hz);
    let n_ch = cfg.channel_labels.len();
    let mut channels = Vec::with_capacity(n_ch + 1);
    while channels.len() < n_ch {
        if cfg.noise_amp_uv == 0.0 {
            channels.push(vec![0.0; n]);
            continue;
        }
        let (a, b) = shaped_noise_pair(n, cfg.sample_rate_hz, &shape, &mut rng);
        channels.push(a);
        channels.push(b);
    }
    channels.truncate(n_ch);
    for ch in &mut channels {
        ch.iter_mut().for_each(|v| *v *= cfg.noise_amp_uv);
    }
    Recording::new(cfg.sample_rate_hz, cfg.channel_labels.clone(), channels)
}

fn add_source<R: rand::Rng>(
    out: &mut [Vec<f64>],
    cfg: &ForwardModelConfig,
    src: &OscillatorSource,
    envelope: &dyn Fn(f64) -> f64,
    rng: &mut R,
) -> Result<()> {
    let n = out[0].len();
    let fs = cfg.sample_rate_hz;
    let env: Vec<f64> = (0..n).map(|i| envelope(i as f64 / fs)).collect();
    for j in 0..src.components {
        let offset = (j as f64 - (src.components as f64 - 1.0) / 2.0) * src.spacing;
        let g = src.profile.gains(&cfg.channel_labels, offset)?;
        let s = shaped_noise(n, fs, band_shape(src.low_hz, src.high_hz), rng);
        for (ch, gc) in out.iter_mut().zip(&g) {
            if *gc < 1e-4 {
                continue;
            }
            for ((o, v), e) in ch.iter_mut().zip(&s).zip(&env) {
                *o += gc * src.amp_uv * e * v;
            }
        }
    }
    Ok(())
}

/// Pink noise plus theta power scaling as `1 + k w(t)` and alpha power as
/// `1 + k (1 - w(t))`. With `with_context` the occipital game source is
/// added too. The noise part equals [`gen_noise`] with the same seed.
pub fn gen_workload_eeg(
    cfg: &ForwardModelConfig,
    latent: &LatentSeries,
    duration_sec: f64,
    seed: u64,
    with_context: bool,
) -> Result<Recording> {
    let mut rec = gen_noise(cfg, duration_sec, seed)?;
    let mut rng = stream_rng(seed, STREAM_SOURCES);
    {
        let out = rec.channels_mut();
        let theta_k = cfg.theta.gain;
        add_source(out, cfg, &cfg.theta, &|t| (1.0 + theta_k * latent.at(t)).max(0.0).sqrt(), &mut rng)?;
        let alpha_k = cfg.alpha.gain;
        add_source(out, cfg, &cfg.alpha, &|t| (1.0 + alpha_k * (1.0 - latent.at(t))).max(0.0).sqrt(), &mut rng)?;
        if let (true, Some(ctx)) = (with_context, &cfg.context) {
            let n = out[0].len();
            let step = (cfg.sample_rate_hz * LATENT_DT_SEC) as usize;
            let coarse_n = n / step.max(1) + 2;
            let coarse_fs = 1.0 / LATENT_DT_SEC;
            let wander = shaped_noise(coarse_n, coarse_fs, band_shape(0.005, 0.1), &mut rng);
            let series = LatentSeries {
                dt_sec: LATENT_DT_SEC,
                values: wander.iter().map(|z| (cfg.context_wander * z).exp()).collect(),
            };
            add_source(out, cfg, ctx, &|t| series.at(t), &mut rng)?;
        }
    }
    Ok(rec)
}

/// Which events receive which template.
fn erp_for<'a>(cfg: &'a ForwardModelConfig, ev: &crate::session::Event) -> Option<&'a ErpShape> {
    match ev.kind {
        EventKind::Sound if ev.bool_attr("is_target") == Some(true) => Some(&cfg.p300),
        EventKind::Selection if ev.bool_attr("perceived_error") == Some(true) => Some(&cfg.errp),
        EventKind::Movement if ev.bool_attr("is_error") == Some(true) => Some(&cfg.errp),
        _ => None,
    }
}

/// Adds a P300 at every target sound, scaled by `attention`, and an ErrP at
/// every perceived-error selection or erroneous robot movement.
pub fn inject_erps(rec: &Recording, log: &EventLog, cfg: &ForwardModelConfig, attention: &dyn Fn(f64) -> f64) -> Result<Recording> {
    cfg.validate()?;
    let fs = rec.sample_rate_hz();
    let labels = rec.channel_labels();
    let p300 = cfg.p300.template(fs, labels)?;
    let errp = cfg.errp.template(fs, labels)?;
    let mut out = rec.clone();
    let n = rec.n_samples();
    {
        let chans = out.channels_mut();
        for ev in log.events() {
            let Some(shape) = erp_for(cfg, ev) else { continue };
            let (tpl, scale) = if std::ptr::eq(shape, &cfg.p300) {
                (&p300, attention(ev.t_sec))
            } else {
                (&errp, 1.0)
            };
            if scale == 0.0 {
                continue;
            }
            let start = rec.sample_at(ev.t_sec);
            for (c, ch) in chans.iter_mut().enumerate() {
                for k in 0..tpl.ncols() {
                    if start + k >= n {
                        break;
                    }
                    ch[start + k] += scale * tpl[(c, k)];
                }
            }
        }
    }
    Ok(out)
}
