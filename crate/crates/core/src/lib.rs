//! Simulator for a subcarrier-multiplexed (SCM) optical channel.
//!
//! Each subcarrier carries a line-coded bit stream (NRZ, Manchester or
//! Miller) that intensity-modulates the optical source. The photodetected
//! current is split into a signal part (sum of squared fields) and a cross
//! part (pairwise field products, the optical beat interference), and the
//! in-band power of both gives the signal-to-interference ratio.
//!
//! Module map:
//! - [`linecode`]: bit generation and line-code waveforms.
//! - [`optical`]: subcarrier modulation, fields, fiber and photodetection.
//! - [`spectral`]: periodogram PSD estimates and band powers.
//! - [`sir`]: per-channel SIR, sweeps over channel count and code ranking.
//! - [`cli`]: configuration, command dispatch and CSV output.

pub mod cli;
pub mod error;
pub mod linecode;
pub mod optical;
pub mod sir;
pub mod spectral;

pub use error::{Error, Result};
pub use linecode::{encode, generate_bits, BitSequence, LineCode, Waveform};
pub use optical::{
    apply_fiber, assemble_channel, photodetect, ChannelPlan, DetectorParams, FiberParams, FieldSet,
    PhotocurrentDecomposition,
};
pub use sir::{channel_sir, compare_codes, sweep, SirPoint, SirSweepResult, SweepConfig};
pub use spectral::{band_power, estimate_psd, total_power, PsdEstimate, SpectralConfig, Window};
