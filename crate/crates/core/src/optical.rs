//! Subcarrier intensity modulation, optical fields, fiber and square-law
//! photodetection.
//!
//! The optical field of each subcarrier is the square root of its intensity
//! `1 + μ·m(t)·cos(2πf_i t)`; fields add, the fiber scales them by `e^{-αL}`,
//! and the detector squares the sum. The squared sum splits into the signal
//! part `Σ e_i²` and the cross part `2 Σ_{i<l} e_i e_l`, which carries the
//! optical beat interference. Detector noise and fiber dispersion are not
//! modelled.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linecode::{encode, generate_bits, BitSequence, LineCode, Waveform};

/// Negative intensities down to this value are rounding residue and clamp to zero.
pub const NEGATIVE_INTENSITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPlan {
    pub n_channels: usize,
    /// Frequency of subcarrier 1 (Hz).
    pub base_freq: f64,
    /// Carrier spacing Δf (Hz).
    pub spacing: f64,
    /// Receive band-pass width B (Hz).
    pub bandwidth: f64,
    /// Optical modulation index μ.
    pub mod_index: f64,
    pub bit_rate: f64,
    pub sample_rate: f64,
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 {
            return Err(Error::invalid("n_channels must be at least 1"));
        }
        for (name, v) in [
            ("base_freq", self.base_freq),
            ("spacing", self.spacing),
            ("bandwidth", self.bandwidth),
            ("bit_rate", self.bit_rate),
            ("sample_rate", self.sample_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mod_index > 0.0 && self.mod_index <= 1.0) {
            return Err(Error::invalid(format!(
                "mod_index must lie in (0, 1], got {}",
                self.mod_index
            )));
        }
        if self.base_freq - self.bandwidth / 2.0 <= 0.0 {
            return Err(Error::invalid(format!(
                "band of subcarrier 1 touches DC: base_freq {} - bandwidth/2 {} <= 0",
                self.base_freq,
                self.bandwidth / 2.0
            )));
        }
        let needed = 2.0 * (self.carrier_freq(self.n_channels) + 2.0 * self.bit_rate);
        if self.sample_rate <= needed {
            return Err(Error::invalid(format!(
                "sample_rate {} violates Nyquist for {} channels (needs > {needed})",
                self.sample_rate, self.n_channels
            )));
        }
        self.samples_per_bit()?;
        Ok(())
    }

    /// Frequency f_i of the 1-based subcarrier `index`.
    pub fn carrier_freq(&self, index: usize) -> f64 {
        self.base_freq + (index as f64 - 1.0) * self.spacing
    }

    /// `sample_rate / bit_rate`, which must be a positive even integer.
    pub fn samples_per_bit(&self) -> Result<usize> {
        let ratio = self.sample_rate / self.bit_rate;
        let rounded = ratio.round();
        if rounded < 2.0 || (ratio - rounded).abs() > 1e-9 * ratio {
            return Err(Error::invalid(format!(
                "sample_rate / bit_rate = {ratio} is not an integer >= 2"
            )));
        }
        let spb = rounded as usize;
        if !spb.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "samples per bit ({spb}) must be even for half-bit codes"
            )));
        }
        Ok(spb)
    }

    pub fn with_channels(self, n_channels: usize) -> Self {
        Self { n_channels, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySignal {
    samples: Vec<f64>,
    carrier_freq: f64,
}

impl IntensitySignal {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }
}

/// Intensity `1 + μ·m[k]·cos(2π f k / fs)` of one subcarrier.
pub fn modulate_subcarrier(
    m: &Waveform,
    carrier_freq: f64,
    mod_index: f64,
    sample_rate: f64,
) -> Result<IntensitySignal> {
    if !(mod_index > 0.0 && mod_index <= 1.0) {
        return Err(Error::invalid(format!(
            "mod_index must lie in (0, 1], got {mod_index}"
        )));
    }
    if (m.sample_rate() - sample_rate).abs() > 1e-9 * sample_rate {
        return Err(Error::invalid(format!(
            "waveform sampled at {} Hz, expected {sample_rate} Hz",
            m.sample_rate()
        )));
    }
    if !(carrier_freq > 0.0 && carrier_freq < sample_rate / 2.0) {
        return Err(Error::invalid(format!(
            "carrier {carrier_freq} Hz outside (0, {}) Hz",
            sample_rate / 2.0
        )));
    }
    let omega = 2.0 * PI * carrier_freq / sample_rate;
    let samples = m
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &level)| (1.0 + mod_index * level * (omega * k as f64).cos()).max(0.0))
        .collect();
    Ok(IntensitySignal {
        samples,
        carrier_freq,
    })
}

/// Field amplitude `√s` of an intensity signal.
pub fn intensity_to_field(s: &IntensitySignal) -> Result<Vec<f64>> {
    s.samples
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if v >= 0.0 {
                Ok(v.sqrt())
            } else if v >= -NEGATIVE_INTENSITY_TOLERANCE {
                Ok(0.0)
            } else {
                Err(Error::Domain(format!(
                    "negative intensity {v} at sample {k}"
                )))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    per_channel: Vec<Vec<f64>>,
    composite: Vec<f64>,
    plan: ChannelPlan,
}

impl FieldSet {
    /// Builds a field set from per-channel fields; the composite is their sum.
    pub fn from_fields(plan: ChannelPlan, per_channel: Vec<Vec<f64>>) -> Result<Self> {
        if per_channel.is_empty() || per_channel.len() != plan.n_channels {
            return Err(Error::invalid(format!(
                "{} field sequences for a {}-channel plan",
                per_channel.len(),
                plan.n_channels
            )));
        }
        let len = per_channel[0].len();
        if per_channel.iter().any(|f| f.len() != len) {
            return Err(Error::invalid("field sequences differ in length"));
        }
        if per_channel.iter().flatten().any(|&e| e.is_nan() || e < 0.0) {
            return Err(Error::Domain("field samples must be non-negative".into()));
        }
        let mut composite = vec![0.0; len];
        for field in &per_channel {
            for (c, &e) in composite.iter_mut().zip(field) {
                *c += e;
            }
        }
        Ok(Self {
            per_channel,
            composite,
            plan,
        })
    }

    pub fn per_channel(&self) -> &[Vec<f64>] {
        &self.per_channel
    }

    pub fn composite(&self) -> &[f64] {
        &self.composite
    }

    pub fn plan(&self) -> &ChannelPlan {
        &self.plan
    }

    pub fn len(&self) -> usize {
        self.composite.len()
    }

    pub fn is_empty(&self) -> bool {
        self.composite.is_empty()
    }
}

/// Seed of the bit stream carried by 1-based channel `index`.
pub fn channel_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Builds the optical fields of every subcarrier in `plan`, each carrying an
/// independent random bit stream seeded with [`channel_seed`].
pub fn assemble_channel(
    plan: &ChannelPlan,
    code: LineCode,
    seed: u64,
    n_samples: usize,
) -> Result<FieldSet> {
    plan.validate()?;
    let spb = plan.samples_per_bit()?;
    if n_samples == 0 || !n_samples.is_multiple_of(spb) {
        return Err(Error::invalid(format!(
            "n_samples {n_samples} is not a positive whole number of {spb}-sample bits"
        )));
    }
    let n_bits = n_samples / spb;
    let streams = (1..=plan.n_channels)
        .map(|i| generate_bits(n_bits, channel_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    assemble_from_bits(plan, code, &streams)
}

/// Like [`assemble_channel`] but with caller-supplied bit streams, one per channel.
pub fn assemble_from_bits(
    plan: &ChannelPlan,
    code: LineCode,
    streams: &[BitSequence],
) -> Result<FieldSet> {
    plan.validate()?;
    if streams.len() != plan.n_channels {
        return Err(Error::invalid(format!(
            "{} bit streams for a {}-channel plan",
            streams.len(),
            plan.n_channels
        )));
    }
    let spb = plan.samples_per_bit()?;
    let per_channel = streams
        .iter()
        .enumerate()
        .map(|(i, bits)| {
            let m = encode(bits, code, spb, plan.bit_rate)?;
            let s = modulate_subcarrier(
                &m,
                plan.carrier_freq(i + 1),
                plan.mod_index,
                plan.sample_rate,
            )?;
            intensity_to_field(&s)
        })
        .collect::<Result<Vec<_>>>()?;
    FieldSet::from_fields(*plan, per_channel)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberParams {
    /// α in 1/km.
    pub attenuation: f64,
    /// L in km.
    pub length: f64,
}

impl Default for FiberParams {
    fn default() -> Self {
        Self {
            attenuation: 0.0,
            length: 0.0,
        }
    }
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation.is_finite() && self.attenuation >= 0.0) {
            return Err(Error::invalid(format!(
                "attenuation must be >= 0, got {}",
                self.attenuation
            )));
        }
        if !(self.length.is_finite() && self.length >= 0.0) {
            return Err(Error::invalid(format!(
                "fiber length must be >= 0, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn field_gain(&self) -> f64 {
        (-self.attenuation * self.length).exp()
    }
}

/// Propagates the fields through the fiber. The impulse response is the
/// identity, so only the `e^{-αL}` loss is applied.
pub fn apply_fiber(fs: &FieldSet, fiber: &FiberParams) -> Result<FieldSet> {
    fiber.validate()?;
    let gain = fiber.field_gain();
    if gain == 1.0 {
        return Ok(fs.clone());
    }
    let scale = |v: &Vec<f64>| v.iter().map(|e| e * gain).collect::<Vec<_>>();
    Ok(FieldSet {
        per_channel: fs.per_channel.iter().map(scale).collect(),
        composite: scale(&fs.composite),
        plan: fs.plan,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// R in A/W.
    pub responsivity: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self { responsivity: 1.0 }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity.is_finite() && self.responsivity > 0.0) {
            return Err(Error::invalid(format!(
                "responsivity must be positive, got {}",
                self.responsivity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotocurrentDecomposition {
    /// i(t) = R·|e(t)|².
    pub total: Vec<f64>,
    /// Σ e_i², before responsivity.
    pub signal_part: Vec<f64>,
    /// 2 Σ_{i<l} e_i e_l, before responsivity.
    pub cross_part: Vec<f64>,
    pub responsivity: f64,
    pub sample_rate: f64,
}

/// Square-law detection of the composite field, split into signal and
/// cross (beat) parts. The cross part is evaluated pair by pair.
pub fn photodetect(fs: &FieldSet, det: &DetectorParams) -> Result<PhotocurrentDecomposition> {
    det.validate()?;
    let r = det.responsivity;
    let len = fs.len();
    let total = fs.composite.iter().map(|e| r * e * e).collect();

    let mut signal_part = vec![0.0; len];
    for field in &fs.per_channel {
        for (s, &e) in signal_part.iter_mut().zip(field) {
            *s += e * e;
        }
    }

    let mut cross_part = vec![0.0; len];
    for (i, ei) in fs.per_channel.iter().enumerate() {
        for el in &fs.per_channel[i + 1..] {
            for ((c, &a), &b) in cross_part.iter_mut().zip(ei).zip(el) {
                *c += 2.0 * a * b;
            }
        }
    }

    Ok(PhotocurrentDecomposition {
        total,
        signal_part,
        cross_part,
        responsivity: r,
        sample_rate: fs.plan.sample_rate,
    })
}

/// Cross part recovered as `total / R - signal_part`.
pub fn cross_by_difference(d: &PhotocurrentDecomposition) -> Vec<f64> {
    d.total
        .iter()
        .zip(&d.signal_part)
        .map(|(t, s)| t / d.responsivity - s)
        .collect()
}
