//! Configuration, command dispatch and CSV output for the `scm-obi` binary.
//!
//! Settings resolve as command-line flag, then config-file entry, then
//! default. The config file is flat `key = value` text with `#` comments;
//! keys are the kebab-case flag names. Every CSV starts with a single
//! `# config: key=value ...` line that can be fed back through `--config`
//! to reproduce the run.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
use crate::linecode::{encode, generate_bits, LineCode};
use crate::optical::{
    apply_fiber, assemble_channel, photodetect, ChannelPlan, DetectorParams, FiberParams,
};
use crate::sir::{
    calibrate, compare_codes, samples_for, sweep, CodeRanking, SirSweepResult, SweepConfig,
};
use crate::spectral::{estimate_psd, PsdEstimate, SpectralConfig, Window};

/// Prefix of the config-echo line written at the top of every output.
pub const ECHO_PREFIX: &str = "# config:";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Line-code power spectral densities.
    Psd,
    /// Signal and cross component spectra of the photocurrent.
    Spectrum,
    /// SIR versus number of subcarriers.
    Sweep,
    /// Code ranking per channel count.
    Compare,
    /// Bit-rate / modulation-index grid against the reference SIR values.
    Calibrate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub codes: Vec<LineCode>,
    /// Channel count for `spectrum`.
    pub n_channels: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub base_freq: f64,
    pub spacing: f64,
    pub bandwidth: f64,
    pub bit_rate: f64,
    pub mod_index: f64,
    pub sample_rate: f64,
    pub fft_size: usize,
    pub window: Window,
    pub n_avg: usize,
    pub seed: u64,
    pub attenuation: f64,
    pub fiber_length: f64,
    pub responsivity: f64,
    pub report_channel: usize,
    pub output: PathBuf,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            codes: LineCode::ALL.to_vec(),
            n_channels: 2,
            n_min: 2,
            n_max: 10,
            base_freq: 1_000_000.0,
            spacing: 200_000.0,
            bandwidth: 200_000.0,
            bit_rate: 100_000.0,
            mod_index: 1.0,
            sample_rate: 16_000_000.0,
            fft_size: 131_072,
            window: Window::Rectangular,
            n_avg: 8,
            seed: 42,
            attenuation: 0.0,
            fiber_length: 0.0,
            responsivity: 1.0,
            report_channel: 1,
            output: PathBuf::from("out"),
        }
    }
}

/// Keys accepted in config files, in echo order.
pub const CONFIG_KEYS: [&str; 19] = [
    "code",
    "n-channels",
    "n-min",
    "n-max",
    "base-freq",
    "spacing",
    "bandwidth",
    "bit-rate",
    "mod-index",
    "sample-rate",
    "fft-size",
    "window",
    "n-avg",
    "seed",
    "attenuation",
    "fiber-length",
    "responsivity",
    "report-channel",
    "output",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::usage(key, format!("cannot parse `{value}`")))
}

impl SimulationConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "code" => {
                let v = value.trim();
                self.codes = if v.eq_ignore_ascii_case("all") {
                    LineCode::ALL.to_vec()
                } else {
                    let mut codes = v
                        .split(',')
                        .map(|c| c.parse::<LineCode>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::usage(key, e.to_string()))?;
                    codes.sort();
                    codes.dedup();
                    codes
                };
            }
            "n-channels" => self.n_channels = parse_num(key, value)?,
            "n-min" => self.n_min = parse_num(key, value)?,
            "n-max" => self.n_max = parse_num(key, value)?,
            "base-freq" => self.base_freq = parse_num(key, value)?,
            "spacing" => self.spacing = parse_num(key, value)?,
            "bandwidth" => self.bandwidth = parse_num(key, value)?,
            "bit-rate" => self.bit_rate = parse_num(key, value)?,
            "mod-index" => self.mod_index = parse_num(key, value)?,
            "sample-rate" => self.sample_rate = parse_num(key, value)?,
            "fft-size" => self.fft_size = parse_num(key, value)?,
            "window" => {
                self.window = value
                    .parse()
                    .map_err(|e: Error| Error::usage(key, e.to_string()))?
            }
            "n-avg" => self.n_avg = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "attenuation" => self.attenuation = parse_num(key, value)?,
            "fiber-length" => self.fiber_length = parse_num(key, value)?,
            "responsivity" => self.responsivity = parse_num(key, value)?,
            "report-channel" => self.report_channel = parse_num(key, value)?,
            "output" => self.output = PathBuf::from(value.trim()),
            other => return Err(Error::usage(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies a config file's entries. Accepts `key = value` lines, `#`
    /// comments, and config-echo lines.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix(ECHO_PREFIX) {
                for token in rest.split_whitespace() {
                    let (k, v) = token
                        .split_once('=')
                        .ok_or_else(|| Error::usage(token, "expected key=value in config echo"))?;
                    self.set(k, v)?;
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::usage(line, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn plan(&self, n_channels: usize) -> ChannelPlan {
        ChannelPlan {
            n_channels,
            base_freq: self.base_freq,
            spacing: self.spacing,
            bandwidth: self.bandwidth,
            mod_index: self.mod_index,
            bit_rate: self.bit_rate,
            sample_rate: self.sample_rate,
        }
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            fft_size: self.fft_size,
            window: self.window,
            n_avg: self.n_avg,
        }
    }

    pub fn fiber(&self) -> FiberParams {
        FiberParams {
            attenuation: self.attenuation,
            length: self.fiber_length,
        }
    }

    pub fn detector(&self) -> DetectorParams {
        DetectorParams {
            responsivity: self.responsivity,
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            codes: self.codes.clone(),
            n_min: self.n_min,
            n_max: self.n_max,
            plan: self.plan(self.n_max),
            spectral: self.spectral(),
            fiber: self.fiber(),
            detector: self.detector(),
            seed: self.seed,
            report_channel: self.report_channel,
            parallel: true,
        }
    }

    /// Re-checks every invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let wrap = |key: &str, r: Result<()>| r.map_err(|e| Error::usage(key, e.to_string()));
        if self.codes.is_empty() {
            return Err(Error::usage("code", "no line codes selected"));
        }
        if !(self.mod_index > 0.0 && self.mod_index <= 1.0) {
            return Err(Error::usage(
                "mod-index",
                format!("{} is outside (0, 1]", self.mod_index),
            ));
        }
        if self.n_channels == 0 {
            return Err(Error::usage("n-channels", "must be at least 1"));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::usage(
                "n-min",
                format!("range {}..={} is invalid", self.n_min, self.n_max),
            ));
        }
        if self.report_channel == 0 || self.report_channel > self.n_min {
            return Err(Error::usage(
                "report-channel",
                format!("must lie in 1..={}", self.n_min),
            ));
        }
        if self.base_freq - self.bandwidth / 2.0 <= 0.0 {
            return Err(Error::usage("base-freq", "lowest band touches DC"));
        }
        wrap("bit-rate", self.plan(1).samples_per_bit().map(|_| ()))?;
        wrap(
            "sample-rate",
            self.plan(self.n_max.max(self.n_channels)).validate(),
        )?;
        wrap("fft-size", self.spectral().validate())?;
        wrap("attenuation", self.fiber().validate())?;
        wrap("responsivity", self.detector().validate())?;
        Ok(())
    }

    /// Single-line `# config: key=value ...` echo. The output path is left
    /// out so that the same settings written elsewhere produce identical bytes.
    pub fn echo_line(&self) -> String {
        let codes: Vec<&str> = self.codes.iter().map(|c| c.as_str()).collect();
        let mut s = String::from(ECHO_PREFIX);
        let fields: [(&str, String); 18] = [
            ("code", codes.join(",")),
            ("n-channels", self.n_channels.to_string()),
            ("n-min", self.n_min.to_string()),
            ("n-max", self.n_max.to_string()),
            ("base-freq", fmt_num(self.base_freq)),
            ("spacing", fmt_num(self.spacing)),
            ("bandwidth", fmt_num(self.bandwidth)),
            ("bit-rate", fmt_num(self.bit_rate)),
            ("mod-index", fmt_num(self.mod_index)),
            ("sample-rate", fmt_num(self.sample_rate)),
            ("fft-size", self.fft_size.to_string()),
            ("window", self.window.to_string()),
            ("n-avg", self.n_avg.to_string()),
            ("seed", self.seed.to_string()),
            ("attenuation", fmt_num(self.attenuation)),
            ("fiber-length", fmt_num(self.fiber_length)),
            ("responsivity", fmt_num(self.responsivity)),
            ("report-channel", self.report_channel.to_string()),
        ];
        for (k, v) in fields {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

/// Shortest decimal text that parses back to the same `f64`; `inf` for infinity.
pub fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:?}")
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "scm-obi",
    version,
    about = "SCM optical beat interference simulator"
)]
struct Args {
    command: Command,

    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated codes (nrz, manchester, miller) or `all`.
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    n_channels: Option<String>,
    #[arg(long)]
    n_min: Option<String>,
    #[arg(long)]
    n_max: Option<String>,
    #[arg(long)]
    base_freq: Option<String>,
    #[arg(long)]
    spacing: Option<String>,
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long)]
    bit_rate: Option<String>,
    #[arg(long)]
    mod_index: Option<String>,
    #[arg(long)]
    sample_rate: Option<String>,
    #[arg(long)]
    fft_size: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    n_avg: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    attenuation: Option<String>,
    #[arg(long)]
    fiber_length: Option<String>,
    #[arg(long)]
    responsivity: Option<String>,
    #[arg(long)]
    report_channel: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Args {
    fn flag_values(&self) -> Vec<(&'static str, String)> {
        let pairs: [(&'static str, &Option<String>); 18] = [
            ("code", &self.code),
            ("n-channels", &self.n_channels),
            ("n-min", &self.n_min),
            ("n-max", &self.n_max),
            ("base-freq", &self.base_freq),
            ("spacing", &self.spacing),
            ("bandwidth", &self.bandwidth),
            ("bit-rate", &self.bit_rate),
            ("mod-index", &self.mod_index),
            ("sample-rate", &self.sample_rate),
            ("fft-size", &self.fft_size),
            ("window", &self.window),
            ("n-avg", &self.n_avg),
            ("seed", &self.seed),
            ("attenuation", &self.attenuation),
            ("fiber-length", &self.fiber_length),
            ("responsivity", &self.responsivity),
            ("report-channel", &self.report_channel),
        ];
        let mut out: Vec<_> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if let Some(o) = &self.output {
            out.push(("output", o.to_string_lossy().into_owned()));
        }
        out
    }
}

/// Outcome of argument parsing.
#[derive(Debug)]
pub enum Invocation {
    Run(Command, SimulationConfig),
    /// `--help` or `--version`; the text goes to stdout with exit status 0.
    Info(String),
}

/// Parses command-line tokens (including the program name) into a command and
/// a validated configuration.
pub fn parse_config<I, T>(args: I) -> Result<Invocation>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(Invocation::Info(e.to_string()))
                }
                _ => Err(Error::usage("arguments", e.to_string())),
            };
        }
    };
    let mut cfg = SimulationConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        cfg.apply_file_text(&text)?;
    }
    for (k, v) in args.flag_values() {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    Ok(Invocation::Run(args.command, cfg))
}

/// Maps an error to the process exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn psd_csv(echo: &str, psd: &PsdEstimate) -> String {
    let mut s = String::with_capacity(psd.power().len() * 32);
    let _ = writeln!(s, "{echo}");
    s.push_str("frequency_hz,power\n");
    for (f, p) in psd.bin_freqs().zip(psd.power()) {
        let _ = writeln!(s, "{},{}", fmt_num(f), fmt_num(*p));
    }
    s
}

pub fn sweep_csv(echo: &str, result: &SirSweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{echo}");
    s.push_str("code,n_channels,channel_index,signal_power,cross_power,sir_db\n");
    for p in &result.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            p.code,
            p.n_channels,
            p.channel_index,
            fmt_num(p.signal_band_power),
            fmt_num(p.cross_band_power),
            fmt_num(p.sir_db)
        );
    }
    s
}

pub fn compare_csv(echo: &str, table: &[CodeRanking]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{echo}");
    s.push_str("n_channels,rank,code,sir_db,gap_to_next_db\n");
    for row in table {
        for (i, (code, sir)) in row.ranking.iter().enumerate() {
            let gap = row
                .ranking
                .get(i + 1)
                .map(|next| fmt_num(sir - next.1))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                row.n_channels,
                i + 1,
                code,
                fmt_num(*sir),
                gap
            );
        }
    }
    s
}

/// Paths written by a command, relative to nothing (already joined with the
/// output directory).
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

/// Executes `command` and writes its CSV files under `cfg.output`.
pub fn run_command(cfg: &SimulationConfig, command: Command) -> Result<RunOutput> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output).map_err(|source| Error::Io {
        path: cfg.output.display().to_string(),
        source,
    })?;
    let echo = cfg.echo_line();
    let mut out = RunOutput::default();
    let emit = |name: String, contents: String, out: &mut RunOutput| -> Result<()> {
        let path = cfg.output.join(name);
        write_atomic(&path, &contents)?;
        out.files.push(path);
        Ok(())
    };

    match command {
        Command::Psd => {
            let plan = cfg.plan(1);
            let spb = plan.samples_per_bit()?;
            let n_bits = cfg.spectral().samples_needed().div_ceil(spb);
            let bits = generate_bits(n_bits, cfg.seed)?;
            for &code in &cfg.codes {
                let w = encode(&bits, code, spb, cfg.bit_rate)?;
                let psd = estimate_psd(
                    w.samples(),
                    cfg.sample_rate,
                    cfg.fft_size,
                    cfg.window,
                    cfg.n_avg,
                )?;
                emit(format!("psd_{code}.csv"), psd_csv(&echo, &psd), &mut out)?;
            }
        }
        Command::Spectrum => {
            let plan = cfg.plan(cfg.n_channels);
            let n_samples = samples_for(&plan, &cfg.spectral())?;
            for &code in &cfg.codes {
                let fields = assemble_channel(&plan, code, cfg.seed, n_samples)?;
                let fields = apply_fiber(&fields, &cfg.fiber())?;
                let d = photodetect(&fields, &cfg.detector())?;
                for (part, x) in [("signal", &d.signal_part), ("cross", &d.cross_part)] {
                    let psd =
                        estimate_psd(x, cfg.sample_rate, cfg.fft_size, cfg.window, cfg.n_avg)?;
                    emit(
                        format!("spectrum_{part}_{code}.csv"),
                        psd_csv(&echo, &psd),
                        &mut out,
                    )?;
                }
            }
        }
        Command::Sweep => {
            let result = sweep(&cfg.sweep_config())?;
            emit("sweep.csv".into(), sweep_csv(&echo, &result), &mut out)?;
            for p in result.reporting() {
                let _ = writeln!(
                    out.summary,
                    "{:<10} n={:<3} SIR {} dB",
                    p.code,
                    p.n_channels,
                    fmt_sir(p.sir_db)
                );
            }
        }
        Command::Compare => {
            let result = sweep(&cfg.sweep_config())?;
            let table = compare_codes(&result)?;
            emit("sweep.csv".into(), sweep_csv(&echo, &result), &mut out)?;
            emit("compare.csv".into(), compare_csv(&echo, &table), &mut out)?;
            for row in &table {
                let order: Vec<String> = row
                    .ranking
                    .iter()
                    .map(|(c, s)| format!("{c} ({} dB)", fmt_sir(*s)))
                    .collect();
                let _ = writeln!(out.summary, "n={:<3} {}", row.n_channels, order.join(" > "));
            }
        }
        Command::Calibrate => {
            let report = calibrate(&cfg.sweep_config())?;
            let mut s = String::new();
            let _ = writeln!(s, "{echo}");
            s.push_str("bit_rate,mod_index,rms_error_db,miller_minus_nrz_db,nrz_minus_manchester_db,best\n");
            for (i, st) in report.settings.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    fmt_num(st.bit_rate),
                    fmt_num(st.mod_index),
                    fmt_num(st.rms_error_db),
                    fmt_num(st.miller_nrz_gap()),
                    fmt_num(st.nrz_manchester_gap()),
                    i == report.best
                );
            }
            emit("calibration.csv".into(), s, &mut out)?;
            let b = report.best();
            let _ = writeln!(
                out.summary,
                "closest setting: bit_rate={} mod_index={} (rms error {:.2} dB; gaps at n=2: miller-nrz {:.2} dB, nrz-manchester {:.2} dB)",
                b.bit_rate,
                b.mod_index,
                b.rms_error_db,
                b.miller_nrz_gap(),
                b.nrz_manchester_gap()
            );
        }
    }
    Ok(out)
}

fn fmt_sir(x: f64) -> String {
    if x.is_infinite() {
        fmt_num(x)
    } else {
        format!("{x:.2}")
    }
}
