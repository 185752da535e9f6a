//! Signal-to-interference ratio per subcarrier, sweeps over channel count,
//! and code ranking.
//!
//! SIR for channel i is the in-band power of the signal part divided by the
//! in-band power of the cross part, both integrated over
//! `[f_i - B/2, f_i + B/2)`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linecode::LineCode;
use crate::optical::{
    apply_fiber, assemble_channel, photodetect, ChannelPlan, DetectorParams, FiberParams,
    PhotocurrentDecomposition,
};
use crate::spectral::{band_power, estimate_psd, PsdEstimate, SpectralConfig};

/// Cross power below this fraction of the signal power reports infinite SIR.
pub const INFINITE_SIR_RATIO: f64 = 1e-12;

/// Which row of a sweep a point fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SirRole {
    /// The configured reporting channel.
    Reporting,
    /// The channel with the lowest SIR at that channel count.
    Worst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirPoint {
    pub code: LineCode,
    pub n_channels: usize,
    /// 1-based.
    pub channel_index: usize,
    pub signal_band_power: f64,
    pub cross_band_power: f64,
    /// `+inf` when the cross power is negligible.
    pub sir_db: f64,
    pub role: SirRole,
}

impl SirPoint {
    fn from_powers(
        code: LineCode,
        n_channels: usize,
        channel_index: usize,
        signal: f64,
        cross: f64,
    ) -> Self {
        Self {
            code,
            n_channels,
            channel_index,
            signal_band_power: signal,
            cross_band_power: cross,
            sir_db: sir_db(signal, cross),
            role: SirRole::Reporting,
        }
    }
}

/// `10·log10(signal / cross)`, or `+inf` if the cross power is negligible.
pub fn sir_db(signal: f64, cross: f64) -> f64 {
    if cross < INFINITE_SIR_RATIO * signal {
        f64::INFINITY
    } else {
        10.0 * (signal / cross).log10()
    }
}

/// Signal and cross spectra of one photocurrent, computed once and shared by
/// every channel's band integration.
struct ComponentSpectra {
    signal: PsdEstimate,
    cross: PsdEstimate,
}

impl ComponentSpectra {
    fn new(decomp: &PhotocurrentDecomposition, cfg: &SpectralConfig) -> Result<Self> {
        let psd =
            |x: &[f64]| estimate_psd(x, decomp.sample_rate, cfg.fft_size, cfg.window, cfg.n_avg);
        Ok(Self {
            signal: psd(&decomp.signal_part)?,
            cross: psd(&decomp.cross_part)?,
        })
    }

    fn point(&self, plan: &ChannelPlan, code: LineCode, index: usize) -> Result<SirPoint> {
        check_index(plan, index)?;
        let f = plan.carrier_freq(index);
        let signal = band_power(&self.signal, f, plan.bandwidth)?;
        let cross = band_power(&self.cross, f, plan.bandwidth)?;
        Ok(SirPoint::from_powers(
            code,
            plan.n_channels,
            index,
            signal,
            cross,
        ))
    }
}

fn check_index(plan: &ChannelPlan, index: usize) -> Result<()> {
    if index == 0 || index > plan.n_channels {
        return Err(Error::invalid(format!(
            "channel index {index} outside 1..={}",
            plan.n_channels
        )));
    }
    Ok(())
}

/// SIR of the 1-based channel `channel_index`.
pub fn channel_sir(
    decomp: &PhotocurrentDecomposition,
    plan: &ChannelPlan,
    code: LineCode,
    channel_index: usize,
    spectral: &SpectralConfig,
) -> Result<SirPoint> {
    check_index(plan, channel_index)?;
    ComponentSpectra::new(decomp, spectral)?.point(plan, code, channel_index)
}

/// SIR of every channel in the plan, in channel order.
pub fn all_channel_sirs(
    decomp: &PhotocurrentDecomposition,
    plan: &ChannelPlan,
    code: LineCode,
    spectral: &SpectralConfig,
) -> Result<Vec<SirPoint>> {
    let spectra = ComponentSpectra::new(decomp, spectral)?;
    (1..=plan.n_channels)
        .map(|i| spectra.point(plan, code, i))
        .collect()
}

/// Everything needed to reproduce a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub codes: Vec<LineCode>,
    pub n_min: usize,
    pub n_max: usize,
    /// Channel plan; its `n_channels` is replaced at each sweep point.
    pub plan: ChannelPlan,
    pub spectral: SpectralConfig,
    pub fiber: FiberParams,
    pub detector: DetectorParams,
    pub seed: u64,
    pub report_channel: usize,
    pub parallel: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.codes.is_empty() {
            return Err(Error::invalid("at least one line code is required"));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::invalid(format!(
                "channel range {}..={} is empty or starts at 0",
                self.n_min, self.n_max
            )));
        }
        if self.report_channel == 0 || self.report_channel > self.n_min {
            return Err(Error::invalid(format!(
                "report channel {} must lie in 1..={}",
                self.report_channel, self.n_min
            )));
        }
        self.plan.with_channels(self.n_max).validate()?;
        self.spectral.validate()?;
        self.fiber.validate()?;
        self.detector.validate()
    }
}

/// Number of samples to simulate: enough for every PSD segment, rounded up
/// to whole bits.
pub fn samples_for(plan: &ChannelPlan, spectral: &SpectralConfig) -> Result<usize> {
    let spb = plan.samples_per_bit()?;
    Ok(spectral.samples_needed().div_ceil(spb) * spb)
}

/// Runs the full optical chain for one channel count and returns every
/// channel's SIR.
pub fn simulate_point(
    cfg: &SweepConfig,
    code: LineCode,
    n_channels: usize,
) -> Result<Vec<SirPoint>> {
    let plan = cfg.plan.with_channels(n_channels);
    let n_samples = samples_for(&plan, &cfg.spectral)?;
    let fields = assemble_channel(&plan, code, cfg.seed, n_samples)?;
    let fields = apply_fiber(&fields, &cfg.fiber)?;
    let decomp = photodetect(&fields, &cfg.detector)?;
    all_channel_sirs(&decomp, &plan, code, &cfg.spectral)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirSweepResult {
    /// Sorted by `(code, n_channels, role, channel_index)`.
    pub points: Vec<SirPoint>,
    pub config: SweepConfig,
}

impl SirSweepResult {
    pub fn reporting(&self) -> impl Iterator<Item = &SirPoint> {
        self.points.iter().filter(|p| p.role == SirRole::Reporting)
    }

    pub fn worst(&self) -> impl Iterator<Item = &SirPoint> {
        self.points.iter().filter(|p| p.role == SirRole::Worst)
    }

    /// Reporting-channel SIR for `(code, n)`.
    pub fn reporting_sir(&self, code: LineCode, n_channels: usize) -> Option<f64> {
        self.reporting()
            .find(|p| p.code == code && p.n_channels == n_channels)
            .map(|p| p.sir_db)
    }
}

/// Sweeps every `(code, n)` pair, emitting the reporting channel and the
/// worst channel at each. Channel bit streams depend only on the base seed
/// and channel index, so all codes and channel counts see the same data.
pub fn sweep(cfg: &SweepConfig) -> Result<SirSweepResult> {
    cfg.validate()?;
    let jobs: Vec<(LineCode, usize)> = cfg
        .codes
        .iter()
        .flat_map(|&code| (cfg.n_min..=cfg.n_max).map(move |n| (code, n)))
        .collect();

    let run = |&(code, n): &(LineCode, usize)| -> Result<[SirPoint; 2]> {
        let all = simulate_point(cfg, code, n)?;
        let reporting = all[cfg.report_channel - 1];
        let worst = all
            .iter()
            .min_by(|a, b| a.sir_db.total_cmp(&b.sir_db))
            .copied()
            .map(|p| SirPoint {
                role: SirRole::Worst,
                ..p
            })
            .expect("at least one channel");
        Ok([reporting, worst])
    };

    let pairs: Vec<[SirPoint; 2]> = if cfg.parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };

    let mut points: Vec<SirPoint> = pairs.into_iter().flatten().collect();
    points.sort_by_key(|p| (p.code, p.n_channels, p.role, p.channel_index));
    Ok(SirSweepResult {
        points,
        config: cfg.clone(),
    })
}

/// Code ordering at one channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeRanking {
    pub n_channels: usize,
    /// Codes with their SIR, best first.
    pub ranking: Vec<(LineCode, f64)>,
    /// `(better, worse, sir(better) - sir(worse))` for every pair in ranking order.
    pub gaps_db: Vec<(LineCode, LineCode, f64)>,
}

/// Ranks the codes by reporting-channel SIR at every channel count in the
/// sweep. All three codes must be present at every channel count.
pub fn compare_codes(result: &SirSweepResult) -> Result<Vec<CodeRanking>> {
    let mut table: BTreeMap<usize, BTreeMap<LineCode, f64>> = BTreeMap::new();
    for p in result.reporting() {
        table
            .entry(p.n_channels)
            .or_default()
            .insert(p.code, p.sir_db);
    }
    if table.is_empty() {
        return Err(Error::invalid("sweep has no reporting points"));
    }
    table
        .into_iter()
        .map(|(n, row)| {
            if let Some(missing) = LineCode::ALL.iter().find(|c| !row.contains_key(c)) {
                return Err(Error::invalid(format!(
                    "no {missing} result at n = {n}; comparison needs all three codes"
                )));
            }
            let mut ranking: Vec<(LineCode, f64)> = row.into_iter().collect();
            ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut gaps_db = Vec::new();
            for (i, &(better, a)) in ranking.iter().enumerate() {
                for &(worse, b) in &ranking[i + 1..] {
                    gaps_db.push((better, worse, a - b));
                }
            }
            Ok(CodeRanking {
                n_channels: n,
                ranking,
                gaps_db,
            })
        })
        .collect()
}

/// Target SIRs (dB) for the calibration experiment, as
/// `(code, n_channels, sir_db)`.
pub const REFERENCE_SIR_DB: [(LineCode, usize, f64); 6] = [
    (LineCode::Miller, 2, -2.0),
    (LineCode::Nrz, 2, -9.0),
    (LineCode::Manchester, 2, -14.0),
    (LineCode::Miller, 10, -24.0),
    (LineCode::Nrz, 10, -46.0),
    (LineCode::Manchester, 10, -49.0),
];

pub const CALIBRATION_BIT_RATES: [f64; 3] = [50_000.0, 100_000.0, 200_000.0];
pub const CALIBRATION_MOD_INDICES: [f64; 2] = [0.5, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSetting {
    pub bit_rate: f64,
    pub mod_index: f64,
    /// Simulated reporting-channel SIR for each entry of [`REFERENCE_SIR_DB`].
    pub sir_db: Vec<f64>,
    /// Root-mean-square distance to the reference values (dB).
    pub rms_error_db: f64,
}

impl CalibrationSetting {
    fn lookup(&self, code: LineCode, n: usize) -> f64 {
        let idx = REFERENCE_SIR_DB
            .iter()
            .position(|&(c, m, _)| c == code && m == n)
            .expect("reference entry");
        self.sir_db[idx]
    }

    /// Miller minus NRZ at two channels.
    pub fn miller_nrz_gap(&self) -> f64 {
        self.lookup(LineCode::Miller, 2) - self.lookup(LineCode::Nrz, 2)
    }

    /// NRZ minus Manchester at two channels.
    pub fn nrz_manchester_gap(&self) -> f64 {
        self.lookup(LineCode::Nrz, 2) - self.lookup(LineCode::Manchester, 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub settings: Vec<CalibrationSetting>,
    /// Index into `settings` of the lowest RMS error.
    pub best: usize,
}

impl CalibrationReport {
    pub fn best(&self) -> &CalibrationSetting {
        &self.settings[self.best]
    }
}

/// Runs the reference points for every bit rate and modulation index in the
/// calibration grid, holding the rest of `base` fixed.
pub fn calibrate(base: &SweepConfig) -> Result<CalibrationReport> {
    let mut settings = Vec::new();
    for &bit_rate in &CALIBRATION_BIT_RATES {
        for &mod_index in &CALIBRATION_MOD_INDICES {
            let cfg = SweepConfig {
                plan: ChannelPlan {
                    bit_rate,
                    mod_index,
                    ..base.plan
                },
                ..base.clone()
            };
            cfg.plan.with_channels(10).validate()?;
            let eval = |&(code, n, _): &(LineCode, usize, f64)| -> Result<f64> {
                Ok(simulate_point(&cfg, code, n)?[cfg.report_channel - 1].sir_db)
            };
            let sir_db: Vec<f64> = if cfg.parallel {
                REFERENCE_SIR_DB
                    .par_iter()
                    .map(eval)
                    .collect::<Result<_>>()?
            } else {
                REFERENCE_SIR_DB.iter().map(eval).collect::<Result<_>>()?
            };
            let rms_error_db = (sir_db
                .iter()
                .zip(&REFERENCE_SIR_DB)
                .map(|(s, r)| (s - r.2).powi(2))
                .sum::<f64>()
                / sir_db.len() as f64)
                .sqrt();
            settings.push(CalibrationSetting {
                bit_rate,
                mod_index,
                sir_db,
                rms_error_db,
            });
        }
    }
    let best = settings
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.rms_error_db.total_cmp(&b.1.rms_error_db))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    Ok(CalibrationReport { settings, best })
}
