//! Temporal processing: band-pass filtering, epoching, sliding windows,
//! anti-aliased decimation and band-power features.

pub mod filter;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::session::{Event, EventLog, Recording};

pub use filter::Sos;

/// Prototype order of the band-pass design; the realized filter is twice this.
pub const BANDPASS_PROTOTYPE_ORDER: usize = 2;
/// Order of the anti-alias low-pass used by [`decimate`].
pub const DECIMATION_LOWPASS_ORDER: usize = 8;
/// Floor applied to mean power before taking logs.
pub const POWER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl BandName {
    pub fn as_str(self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
        }
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Band::CANONICAL
            .iter()
            .map(|b| b.name)
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::invalid("band", format!("unknown band {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub name: BandName,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    /// delta, theta, alpha, beta and gamma as used for workload features.
    pub const CANONICAL: [Band; 5] = [
        Band { name: BandName::Delta, low_hz: 1.0, high_hz: 3.0 },
        Band { name: BandName::Theta, low_hz: 4.0, high_hz: 6.0 },
        Band { name: BandName::Alpha, low_hz: 7.0, high_hz: 13.0 },
        Band { name: BandName::Beta, low_hz: 14.0, high_hz: 25.0 },
        Band { name: BandName::Gamma, low_hz: 26.0, high_hz: 40.0 },
    ];

    pub fn canonical(name: BandName) -> Band {
        Band::CANONICAL[name as usize]
    }

    pub fn center_hz(&self) -> f64 {
        (self.low_hz * self.high_hz).sqrt()
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let nyquist = sample_rate_hz / 2.0;
        if !(0.0 < self.low_hz && self.low_hz < self.high_hz) {
            return Err(Error::invalid(
                "band",
                format!("{}: need 0 < low < high, got [{}, {}]", self.name, self.low_hz, self.high_hz),
            ));
        }
        if self.high_hz >= nyquist {
            return Err(Error::invalid(
                "band",
                format!("{}: edge {} Hz is at or above Nyquist {nyquist} Hz", self.name, self.high_hz),
            ));
        }
        Ok(())
    }

    pub fn design(&self, sample_rate_hz: f64) -> Result<Sos> {
        self.validate(sample_rate_hz)?;
        Ok(Sos::butter_bandpass(
            BANDPASS_PROTOTYPE_ORDER,
            self.low_hz / sample_rate_hz,
            self.high_hz / sample_rate_hz,
        ))
    }
}

/// Zero-phase band-pass of every channel.
pub fn bandpass(rec: &Recording, band: &Band) -> Result<Recording> {
    let sos = band.design(rec.sample_rate_hz())?;
    rec.map_channels(|c| sos.filtfilt(c))
}

/// A segment of signal, channels by samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub data: DMatrix<f64>,
    pub sample_rate_hz: f64,
    pub onset_t_sec: f64,
    pub source_event_index: Option<usize>,
}

impl Epoch {
    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }
}

/// Sample range `[start, start + len)` of one epoch or window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRange {
    pub start: usize,
    pub len: usize,
}

/// Copies a `[n_channels x len]` block out of a recording.
pub fn extract(rec: &Recording, range: SampleRange) -> DMatrix<f64> {
    let n_ch = rec.n_channels();
    let mut m = DMatrix::zeros(n_ch, range.len);
    for c in 0..n_ch {
        let src = &rec.channel(c)[range.start..range.start + range.len];
        for (t, v) in src.iter().enumerate() {
            m[(c, t)] = *v;
        }
    }
    m
}

#[derive(Debug, Clone)]
pub struct EpochSet {
    pub epochs: Vec<Epoch>,
    /// Indices of matching events whose window did not fit in the signal.
    pub skipped: Vec<usize>,
}

/// Ranges for each event accepted by `select`, relative window `[t0, t1]`
/// in seconds. Events whose window leaves the signal are reported, not padded.
pub fn event_ranges<F>(
    rec: &Recording,
    log: &EventLog,
    select: F,
    window: (f64, f64),
) -> Result<(Vec<(usize, SampleRange)>, Vec<usize>)>
where
    F: Fn(&Event) -> bool,
{
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(Error::invalid("epoch window", format!("[{t0}, {t1}] is empty")));
    }
    let fs = rec.sample_rate_hz();
    let len = ((t1 - t0) * fs).round() as usize;
    let n = rec.n_samples();
    let mut ranges = Vec::new();
    let mut skipped = Vec::new();
    for (i, ev) in log.events().iter().enumerate().filter(|(_, e)| select(e)) {
        let start = ((ev.t_sec + t0) * fs).round();
        if start < 0.0 || start as usize + len > n {
            skipped.push(i);
            continue;
        }
        ranges.push((i, SampleRange { start: start as usize, len }));
    }
    Ok((ranges, skipped))
}

pub fn epoch_at_events<F>(
    rec: &Recording,
    log: &EventLog,
    select: F,
    window: (f64, f64),
) -> Result<EpochSet>
where
    F: Fn(&Event) -> bool,
{
    let (ranges, skipped) = event_ranges(rec, log, select, window)?;
    let fs = rec.sample_rate_hz();
    let epochs = ranges
        .into_iter()
        .map(|(i, r)| Epoch {
            data: extract(rec, r),
            sample_rate_hz: fs,
            onset_t_sec: log.events()[i].t_sec,
            source_event_index: Some(i),
        })
        .collect();
    Ok(EpochSet { epochs, skipped })
}

/// Window ranges of `len_sec` every `hop_sec` over `n_samples`.
pub fn window_ranges(
    n_samples: usize,
    sample_rate_hz: f64,
    len_sec: f64,
    hop_sec: f64,
) -> Result<Vec<SampleRange>> {
    let len = (len_sec * sample_rate_hz).round() as usize;
    let hop = (hop_sec * sample_rate_hz).round() as usize;
    if len == 0 || hop == 0 {
        return Err(Error::invalid("sliding window", "length and hop must be positive"));
    }
    if len > n_samples {
        return Err(Error::InsufficientData(format!(
            "window of {len_sec} s exceeds signal of {:.3} s",
            n_samples as f64 / sample_rate_hz
        )));
    }
    let count = (n_samples - len) / hop + 1;
    Ok((0..count)
        .map(|k| SampleRange { start: k * hop, len })
        .collect())
}

pub fn sliding_windows(rec: &Recording, len_sec: f64, hop_sec: f64) -> Result<Vec<Epoch>> {
    let fs = rec.sample_rate_hz();
    Ok(window_ranges(rec.n_samples(), fs, len_sec, hop_sec)?
        .into_iter()
        .map(|r| Epoch {
            data: extract(rec, r),
            sample_rate_hz: fs,
            onset_t_sec: r.start as f64 / fs,
            source_event_index: None,
        })
        .collect())
}

/// Anti-alias filter for decimation by `factor`: cutoff at 80% of the new
/// Nyquist frequency.
pub fn decimation_filter(factor: usize) -> Sos {
    Sos::butter_lowpass(DECIMATION_LOWPASS_ORDER, 0.8 / (2.0 * factor as f64))
}

/// Low-pass then keep every `factor`-th sample of each row.
pub fn decimate_matrix(data: &DMatrix<f64>, factor: usize, sos: &Sos) -> DMatrix<f64> {
    let out_len = data.ncols() / factor;
    let mut out = DMatrix::zeros(data.nrows(), out_len);
    let mut row = vec![0.0; data.ncols()];
    for c in 0..data.nrows() {
        for (t, v) in row.iter_mut().enumerate() {
            *v = data[(c, t)];
        }
        let y = sos.filtfilt(&row);
        for k in 0..out_len {
            out[(c, k)] = y[k * factor];
        }
    }
    out
}

pub fn decimate(epoch: &Epoch, factor: usize) -> Result<Epoch> {
    if factor < 1 {
        return Err(Error::invalid("decimation factor", "must be at least 1"));
    }
    if factor == 1 {
        return Ok(epoch.clone());
    }
    if epoch.n_samples() < factor {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot be decimated by {factor}",
            epoch.n_samples()
        )));
    }
    let sos = decimation_filter(factor);
    Ok(Epoch {
        data: decimate_matrix(&epoch.data, factor, &sos),
        sample_rate_hz: epoch.sample_rate_hz / factor as f64,
        onset_t_sec: epoch.onset_t_sec,
        source_event_index: epoch.source_event_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerScale {
    #[default]
    Log,
    Linear,
}

impl PowerScale {
    pub fn apply(self, mean_square: f64) -> f64 {
        match self {
            PowerScale::Log => mean_square.max(POWER_FLOOR).ln(),
            PowerScale::Linear => mean_square,
        }
    }
}

/// `ln(mean(x^2))` per channel, floored at `ln(1e-12)`.
pub fn log_band_power(epoch: &Epoch) -> Vec<f64> {
    band_power(epoch, PowerScale::Log)
}

pub fn band_power(epoch: &Epoch, scale: PowerScale) -> Vec<f64> {
    let n = epoch.n_samples() as f64;
    epoch
        .data
        .row_iter()
        .map(|r| scale.apply(r.iter().map(|v| v * v).sum::<f64>() / n))
        .collect()
}
