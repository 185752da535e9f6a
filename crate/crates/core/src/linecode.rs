//! Pseudo-random bit streams and sampled line-code waveforms.
//!
//! All waveforms are polar: every sample is either `-1.0` or `+1.0`.
//! Bits come from a ChaCha8 generator seeded with `seed_from_u64`, so a
//! `(count, seed)` pair always yields the same stream on every platform.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<u8>,
    seed: u64,
}

impl BitSequence {
    /// Wraps explicit bits. Every element must be 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self { bits, seed: 0 })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Draws `count` independent fair bits.
pub fn generate_bits(count: usize, seed: u64) -> Result<BitSequence> {
    if count == 0 {
        return Err(Error::invalid("bit count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..count).map(|_| rng.gen_range(0..=1u8)).collect();
    Ok(BitSequence { bits, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LineCode {
    Nrz,
    Manchester,
    Miller,
}

impl LineCode {
    pub const ALL: [LineCode; 3] = [LineCode::Nrz, LineCode::Manchester, LineCode::Miller];

    pub fn as_str(self) -> &'static str {
        match self {
            LineCode::Nrz => "nrz",
            LineCode::Manchester => "manchester",
            LineCode::Miller => "miller",
        }
    }
}

impl fmt::Display for LineCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LineCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nrz" => Ok(LineCode::Nrz),
            "manchester" => Ok(LineCode::Manchester),
            "miller" | "delay" => Ok(LineCode::Miller),
            other => Err(Error::invalid(format!("unknown line code `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
    bit_duration: f64,
    samples_per_bit: usize,
    code: LineCode,
}

impl Waveform {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Bit duration τ in seconds.
    pub fn bit_duration(&self) -> f64 {
        self.bit_duration
    }

    pub fn samples_per_bit(&self) -> usize {
        self.samples_per_bit
    }

    pub fn code(&self) -> LineCode {
        self.code
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Encodes `bits` as a polar waveform with `samples_per_bit` samples per bit
/// at the given bit rate.
///
/// Manchester uses the Thomas convention: the first half-bit carries the bit
/// value, the second half its complement. Miller (delay modulation) puts a
/// mid-bit transition on every 1, and a boundary transition between two
/// consecutive 0s. The line starts at level -1 and the bit before the first
/// one is taken to be a 1.
pub fn encode(
    bits: &BitSequence,
    code: LineCode,
    samples_per_bit: usize,
    bit_rate: f64,
) -> Result<Waveform> {
    if samples_per_bit == 0 {
        return Err(Error::invalid("samples_per_bit must be positive"));
    }
    if code != LineCode::Nrz && !samples_per_bit.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "{code} needs an even samples_per_bit, got {samples_per_bit}"
        )));
    }
    if !(bit_rate.is_finite() && bit_rate > 0.0) {
        return Err(Error::invalid(format!(
            "bit rate must be positive, got {bit_rate}"
        )));
    }

    let half = samples_per_bit / 2;
    let mut samples = Vec::with_capacity(bits.len() * samples_per_bit);
    let push_halves = |first: f64, second: f64, out: &mut Vec<f64>| {
        out.extend(std::iter::repeat_n(first, half));
        out.extend(std::iter::repeat_n(second, half));
    };

    match code {
        LineCode::Nrz => {
            for &b in bits.bits() {
                let level = if b == 1 { 1.0 } else { -1.0 };
                samples.extend(std::iter::repeat_n(level, samples_per_bit));
            }
        }
        LineCode::Manchester => {
            for &b in bits.bits() {
                let level = if b == 1 { 1.0 } else { -1.0 };
                push_halves(level, -level, &mut samples);
            }
        }
        LineCode::Miller => {
            let mut level = -1.0;
            let mut prev = 1u8;
            for &b in bits.bits() {
                if b == 1 {
                    push_halves(level, -level, &mut samples);
                    level = -level;
                } else {
                    if prev == 0 {
                        level = -level;
                    }
                    push_halves(level, level, &mut samples);
                }
                prev = b;
            }
        }
    }

    Ok(Waveform {
        samples,
        sample_rate: bit_rate * samples_per_bit as f64,
        bit_duration: 1.0 / bit_rate,
        samples_per_bit,
        code,
    })
}

/// Spectral landmarks a long-run periodogram of a line code should show.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFeatureSet {
    pub code: LineCode,
    pub bit_rate: f64,
    /// Frequencies (Hz, excluding DC) where the density should vanish.
    pub nulls_hz: Vec<f64>,
    /// Whether the density should vanish at DC.
    pub dc_null: bool,
    /// Open interval (Hz) that must contain the frequency of maximum density.
    pub peak_range_hz: (f64, f64),
}

/// Number of harmonic nulls listed for NRZ.
pub const NRZ_NULL_COUNT: usize = 4;

pub fn reference_psd_features(code: LineCode, bit_rate: f64) -> Result<PsdFeatureSet> {
    if !(bit_rate.is_finite() && bit_rate > 0.0) {
        return Err(Error::invalid(format!(
            "bit rate must be positive, got {bit_rate}"
        )));
    }
    let features = match code {
        // sinc² of a rectangular pulse of width 1/bit_rate.
        LineCode::Nrz => PsdFeatureSet {
            code,
            bit_rate,
            nulls_hz: (1..=NRZ_NULL_COUNT).map(|k| k as f64 * bit_rate).collect(),
            dc_null: false,
            peak_range_hz: (0.0, 0.25 * bit_rate),
        },
        LineCode::Manchester => PsdFeatureSet {
            code,
            bit_rate,
            nulls_hz: Vec::new(),
            dc_null: true,
            peak_range_hz: (0.6 * bit_rate, 0.9 * bit_rate),
        },
        LineCode::Miller => PsdFeatureSet {
            code,
            bit_rate,
            nulls_hz: Vec::new(),
            dc_null: false,
            peak_range_hz: (0.3 * bit_rate, 0.5 * bit_rate),
        },
    };
    Ok(features)
}
