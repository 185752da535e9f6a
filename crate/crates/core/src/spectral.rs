//! Averaged one-sided periodograms and band-power integration.
//!
//! Power is normalized so that, for a rectangular window and a single
//! segment, the bins sum to the time-domain mean-square of the input.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            // periodic Hann
            Window::Hann => (0..len)
                .map(|k| {
                    let x = std::f64::consts::PI * k as f64 / len as f64;
                    x.sin().powi(2)
                })
                .collect(),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangular" | "rect" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(Error::invalid(format!("unknown window `{other}`"))),
        }
    }
}

/// FFT settings shared by every PSD estimate in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub fft_size: usize,
    pub window: Window,
    pub n_avg: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            fft_size: 131_072,
            window: Window::Rectangular,
            n_avg: 8,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 || !self.fft_size.is_power_of_two() {
            return Err(Error::invalid(format!(
                "fft_size must be a power of two >= 2, got {}",
                self.fft_size
            )));
        }
        if self.n_avg == 0 {
            return Err(Error::invalid("n_avg must be at least 1"));
        }
        Ok(())
    }

    /// Samples consumed by one estimate.
    pub fn samples_needed(&self) -> usize {
        self.fft_size * self.n_avg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    power: Vec<f64>,
    bin_width: f64,
    sample_rate: f64,
    fft_size: usize,
    window: Window,
    n_avg: usize,
}

impl PsdEstimate {
    /// One-sided bins `0..=fft_size/2`.
    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.bin_width
    }

    pub fn bin_freqs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.power.len()).map(|k| self.bin_freq(k))
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn n_avg(&self) -> usize {
        self.n_avg
    }

    /// Index of the bin with the largest power, skipping bins below `min_bin`.
    pub fn peak_bin(&self, min_bin: usize) -> Option<usize> {
        self.power
            .iter()
            .enumerate()
            .skip(min_bin)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
    }
}

/// Averages `n_avg` one-sided periodograms over consecutive non-overlapping
/// segments of `fft_size` samples taken from the start of `samples`.
pub fn estimate_psd(
    samples: &[f64],
    sample_rate: f64,
    fft_size: usize,
    window: Window,
    n_avg: usize,
) -> Result<PsdEstimate> {
    let cfg = SpectralConfig {
        fft_size,
        window,
        n_avg,
    };
    cfg.validate()?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    if samples.len() < cfg.samples_needed() {
        return Err(Error::invalid(format!(
            "need {} samples for {n_avg} segments of {fft_size}, got {}",
            cfg.samples_needed(),
            samples.len()
        )));
    }

    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let coeffs = window.coefficients(fft_size);
    let window_power = coeffs.iter().map(|w| w * w).sum::<f64>() / fft_size as f64;
    let half = fft_size / 2;

    let mut power = vec![0.0; half + 1];
    let mut buf = vec![Complex64::default(); fft_size];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for segment in samples.chunks_exact(fft_size).take(n_avg) {
        for ((slot, &x), &w) in buf.iter_mut().zip(segment).zip(&coeffs) {
            *slot = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (k, p) in power.iter_mut().enumerate() {
            *p += buf[k].norm_sqr();
        }
    }

    let scale = 1.0 / ((fft_size as f64).powi(2) * window_power * n_avg as f64);
    for (k, p) in power.iter_mut().enumerate() {
        // fold negative frequencies; DC and Nyquist have no mirror
        let fold = if k == 0 || k == half { 1.0 } else { 2.0 };
        *p *= scale * fold;
    }

    Ok(PsdEstimate {
        power,
        bin_width: sample_rate / fft_size as f64,
        sample_rate,
        fft_size,
        window,
        n_avg,
    })
}

/// Sums the bins whose centre lies in `[center - bandwidth/2, center + bandwidth/2)`.
pub fn band_power(psd: &PsdEstimate, center: f64, bandwidth: f64) -> Result<f64> {
    let lo = center - bandwidth / 2.0;
    let hi = center + bandwidth / 2.0;
    if !(bandwidth > 0.0 && lo > 0.0) {
        return Err(Error::invalid(format!(
            "band [{lo}, {hi}) must lie strictly above DC"
        )));
    }
    if hi > psd.sample_rate / 2.0 {
        return Err(Error::invalid(format!(
            "band [{lo}, {hi}) exceeds Nyquist {}",
            psd.sample_rate / 2.0
        )));
    }
    let first = (lo / psd.bin_width).ceil() as usize;
    let sum = (first.max(1)..psd.power.len())
        .take_while(|&k| psd.bin_freq(k) < hi)
        .filter(|&k| psd.bin_freq(k) >= lo)
        .map(|k| psd.power[k])
        .sum();
    Ok(sum)
}

pub fn total_power(psd: &PsdEstimate) -> f64 {
    psd.power.iter().sum()
}
