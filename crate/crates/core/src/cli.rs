//! The `carfac` command-line tool: argument definitions and one function per
//! subcommand. The binary only parses arguments and calls [`execute`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::analysis::benchmark::{default_cases, format_table, run_case, BenchCase, BenchResult};
use crate::analysis::cochleagram::{cochleagram, CochleagramConfig};
use crate::analysis::coeffs_dump::{write_agc_csv, write_car_csv, write_ihc_csv};
use crate::analysis::distortion::{analyze_distortion, DistortionConfig, DistortionReport};
use crate::analysis::golden::{compare, default_tolerance, dump, GoldenReport, GOLDEN_DIR_ENV};
use crate::analysis::synchrony::{compare_tone_burst, ToneBurstComparison, ToneBurstConfig, CHANNEL_NEAR_3KHZ};
use crate::design::{default_design, design_carfac, CarfacDesignParams, IhcVariant};
use crate::error::{CarfacError, Result};
use crate::io::planes::{write_csv, write_pgm, write_plane_file, OutputFormat};
use crate::io::stimulus::StimulusSpec;
use crate::io::wav::read_wav;
use crate::model::{Carfac, OutputSelection, Plane, RunOptions};
use crate::real::Real;

const DEFAULT_SAMPLE_RATE: f64 = 22050.0;

#[derive(Debug, Parser)]
#[command(name = "carfac", version, about = "CARFAC v2 cochlear model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the model on a WAV file or synthetic stimulus and write output planes.
    Run(RunArgs),
    /// Four-tone distortion-product analysis of the BM output.
    AnalyzeDistortion(DistortionArgs),
    /// Compare the two_cap and one_cap IHC on a 3 kHz tone burst and a 300 Hz tone.
    ToneburstCompare(ToneBurstArgs),
    /// Time the model on noise segments of several lengths.
    Benchmark(BenchmarkArgs),
    /// Dump or compare golden reference data.
    Golden(GoldenArgs),
    /// Render a smoothed NAP image as a binary PGM.
    Cochleagram(CochleagramArgs),
    /// Write designed coefficient tables as CSV.
    DesignDump(DesignDumpArgs),
}

/// Model design and run-mode flags shared by several subcommands.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model sample rate in Hz (defaults to the WAV rate, else 22050).
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// IHC variant: two_cap, one_cap or just_hwr.
    #[arg(long, default_value = "two_cap")]
    pub ihc: IhcVariant,
    /// Keep the AGC loop open (damping frozen).
    #[arg(long)]
    pub open_loop: bool,
    /// Disable the OHC nonlinearity.
    #[arg(long)]
    pub linear: bool,
    /// Use the delay-buffer cascade update.
    #[arg(long)]
    pub delay_buffer: bool,
    /// OHC health: a constant (0.5), `basal:<n>[:<level>]` for the first n
    /// channels, or `file:<path>` with one value per channel.
    #[arg(long)]
    pub ohc_health: Option<OhcHealthSpec>,
}

impl ModelArgs {
    pub fn design(&self, sample_rate: f64) -> Result<CarfacDesignParams> {
        Ok(default_design(sample_rate)?.with_ihc_variant(self.ihc).with_delay_buffer(self.delay_buffer))
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// WAV file (16/24-bit PCM or 32-bit float, mono or stereo).
    #[arg(long, conflicts_with = "stimulus")]
    pub input: Option<PathBuf>,
    /// Synthetic stimulus, e.g. `tone:freq=1000,level=-40,dur=0.5`.
    #[arg(long)]
    pub stimulus: Option<StimulusSpec>,
    /// Seed for noise stimuli (overrides `seed=` in the spec).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated planes: nap, bm, bm_raw, receptor_potential, ohc, agc.
    #[arg(long, default_value = "nap")]
    pub outputs: String,
    /// Output format: csv, raw64 or pgm.
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
    /// Process the input in segments of this many milliseconds.
    #[arg(long)]
    pub chunk_ms: Option<f64>,
    /// Run in 32-bit floating point.
    #[arg(long)]
    pub f32: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DistortionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Level of each primary, dBFS.
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    pub level: f64,
    /// Run length in seconds.
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,
    /// Analysis window at the end of the run, seconds.
    #[arg(long, default_value_t = 0.8)]
    pub window: f64,
    /// Primary frequencies in Hz.
    #[arg(long, value_delimiter = ',', default_value = "1600,1800,2000,2200")]
    pub freqs: Vec<f64>,
    /// Analyze the BM signal before the AC coupler (debug view of the coupler-less model).
    #[arg(long)]
    pub bm_raw: bool,
    /// Write spectrum.csv and lines.csv here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Fail unless every line is detected and the 0 Hz bin is 60 dB below the strongest line.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ToneBurstArgs {
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    pub sample_rate: f64,
    /// Channel for the 3 kHz burst.
    #[arg(long, default_value_t = CHANNEL_NEAR_3KHZ)]
    pub channel: usize,
    /// Write traces_3000hz.csv, traces_300hz.csv and summary.csv here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Fail unless the 3 kHz AC ratio is 0.5 ± 0.15 and the 300 Hz ratio exceeds 0.8.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// Segment lengths in seconds (default: the standard set with chunked and delay-buffer cases).
    #[arg(long, value_delimiter = ',')]
    pub segments: Option<Vec<f64>>,
    /// Chunk length in milliseconds applied to every `--segments` entry.
    #[arg(long)]
    pub chunk_ms: Option<f64>,
    #[arg(long)]
    pub delay_buffer: bool,
    /// Repeat short cases until this much audio has been processed.
    #[arg(long, default_value_t = 1.0)]
    pub min_total: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail unless every case runs faster than real time.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GoldenMode {
    Dump,
    Compare,
}

#[derive(Debug, Clone, Args)]
pub struct GoldenArgs {
    #[arg(value_enum)]
    pub mode: GoldenMode,
    /// Golden directory (defaults to $CARFAC_GOLDEN_DIR).
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Run in 32-bit floating point (tolerance 1e-3).
    #[arg(long)]
    pub f32: bool,
    /// Override the comparison tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Seed for the dumped noise stimulus.
    #[arg(long, default_value_t = 20240101)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CochleagramArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Frame hop in samples.
    #[arg(long, default_value_t = 110)]
    pub hop: usize,
    /// Smoothing time constant in milliseconds.
    #[arg(long, default_value_t = 10.0)]
    pub smoothing_ms: f64,
    /// NAP value mapped to white (default: image maximum).
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long, default_value = "cochleagram.pgm")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CoeffTable {
    Car,
    Agc,
    Ihc,
}

#[derive(Debug, Clone, Args)]
pub struct DesignDumpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "car")]
    pub table: CoeffTable,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Per-channel OHC health as given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum OhcHealthSpec {
    Constant(f64),
    /// Channels `0..cutoff` (the basal end) at `level`, the rest healthy.
    Basal { cutoff: usize, level: f64 },
    File(PathBuf),
}

impl FromStr for OhcHealthSpec {
    type Err = CarfacError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CarfacError::Usage(format!("bad --ohc-health '{s}'"));
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(OhcHealthSpec::File(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("basal:") {
            let mut parts = rest.split(':');
            let cutoff = parts.next().and_then(|c| c.parse().ok()).ok_or_else(bad)?;
            let level = match parts.next() {
                Some(l) => l.parse().map_err(|_| bad())?,
                None => 0.0,
            };
            return Ok(OhcHealthSpec::Basal { cutoff, level });
        }
        s.parse().map(OhcHealthSpec::Constant).map_err(|_| bad())
    }
}

impl OhcHealthSpec {
    pub fn resolve(&self, n_ch: usize) -> Result<Vec<f64>> {
        match self {
            OhcHealthSpec::Constant(h) => Ok(vec![*h; n_ch]),
            OhcHealthSpec::Basal { cutoff, level } => {
                Ok((0..n_ch).map(|c| if c < *cutoff { *level } else { 1.0 }).collect())
            }
            OhcHealthSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                text.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse().map_err(|_| CarfacError::Format { kind: "ohc health", detail: format!("'{t}'") })
                    })
                    .collect()
            }
        }
    }
}

/// Where the audio comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Wav(PathBuf),
    Stimulus(StimulusSpec),
}

/// Fully resolved settings for [`cmd_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    pub sample_rate: Option<f64>,
    pub ihc_variant: IhcVariant,
    pub open_loop: bool,
    pub linear: bool,
    pub use_delay_buffer: bool,
    pub ohc_health: Option<OhcHealthSpec>,
    pub outputs: OutputSelection,
    pub format: OutputFormat,
    pub chunk_ms: Option<f64>,
    pub single_precision: bool,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outputs == OutputSelection::NONE {
            return Err(CarfacError::Usage("select at least one output plane".into()));
        }
        if let Some(c) = self.chunk_ms {
            if !(c > 0.0) {
                return Err(CarfacError::Usage(format!("--chunk-ms must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

pub fn parse_outputs(list: &str) -> Result<OutputSelection> {
    let mut sel = OutputSelection::NONE;
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "nap" => sel.nap = true,
            "bm" => sel.bm = true,
            "bm_raw" => sel.bm_raw = true,
            "receptor_potential" | "rp" => sel.receptor_potential = true,
            "ohc" => sel.ohc = true,
            "agc" => sel.agc = true,
            "all" => sel = OutputSelection::default(),
            other => return Err(CarfacError::Usage(format!("unknown output plane '{other}'"))),
        }
    }
    Ok(sel)
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let input = resolve_input(&self.input)?;
        let cfg = RunConfig {
            input,
            sample_rate: self.model.sample_rate,
            ihc_variant: self.model.ihc,
            open_loop: self.model.open_loop,
            linear: self.model.linear,
            use_delay_buffer: self.model.delay_buffer,
            ohc_health: self.model.ohc_health.clone(),
            outputs: parse_outputs(&self.outputs)?,
            format: self.format,
            chunk_ms: self.chunk_ms,
            single_precision: self.f32,
            out_dir: self.out_dir.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn resolve_input(args: &InputArgs) -> Result<InputSource> {
    match (&args.input, &args.stimulus) {
        (Some(p), None) => Ok(InputSource::Wav(p.clone())),
        (None, Some(s)) => {
            let mut s = s.clone();
            if let Some(seed) = args.seed {
                s.seed = seed;
            }
            Ok(InputSource::Stimulus(s))
        }
        (None, None) => Err(CarfacError::Usage("give --input <wav> or --stimulus <spec>".into())),
        (Some(_), Some(_)) => Err(CarfacError::Usage("--input and --stimulus are mutually exclusive".into())),
    }
}

/// Load the audio (one vector per ear) and settle the model sample rate.
pub fn load_audio(input: &InputSource, sample_rate: Option<f64>) -> Result<(Vec<Vec<f64>>, f64)> {
    match input {
        InputSource::Wav(path) => {
            let wav = read_wav(path)?;
            let fs = sample_rate.unwrap_or(wav.sample_rate as f64);
            if (fs - wav.sample_rate as f64).abs() > 1e-9 {
                return Err(CarfacError::SampleRateMismatch { file: wav.sample_rate, model: fs });
            }
            Ok((wav.channels, fs))
        }
        InputSource::Stimulus(spec) => {
            let fs = sample_rate.unwrap_or(DEFAULT_SAMPLE_RATE);
            Ok((vec![spec.synthesize(fs)?], fs))
        }
    }
}

/// Output planes of a whole run, per ear, in f64, plus the AGC update times.
struct RunResult {
    planes: Vec<(&'static str, Vec<Plane<f64>>)>,
    pole_freqs: Vec<f64>,
}

fn run_model<T: Real>(cfg: &RunConfig, audio: &[Vec<f64>], params: &CarfacDesignParams) -> Result<RunResult> {
    let mut model = Carfac::<T>::new(params, audio.len())?;
    if let Some(h) = &cfg.ohc_health {
        model.set_ohc_health(&h.resolve(model.n_ch())?)?;
    }
    let audio: Vec<Vec<T>> = audio.iter().map(|e| e.iter().map(|&x| T::of(x)).collect()).collect();
    let n = audio[0].len();
    let chunk = cfg.chunk_ms.map_or(n.max(1), |ms| ((ms * 1e-3 * params.sample_rate).round() as usize).max(1));
    let opts = RunOptions { open_loop: cfg.open_loop, linear: cfg.linear, outputs: cfg.outputs };
    let n_ears = audio.len();
    // (plane name, selected, per-ear chunks)
    type Pieces = Vec<Vec<Plane<f64>>>;
    let mut acc: Vec<(&'static str, bool, Pieces)> = vec![
        ("nap", cfg.outputs.nap, vec![Vec::new(); n_ears]),
        ("bm", cfg.outputs.bm, vec![Vec::new(); n_ears]),
        ("bm_raw", cfg.outputs.bm_raw, vec![Vec::new(); n_ears]),
        ("receptor_potential", cfg.outputs.receptor_potential, vec![Vec::new(); n_ears]),
        ("ohc", cfg.outputs.ohc, vec![Vec::new(); n_ears]),
        ("agc", cfg.outputs.agc, vec![Vec::new(); n_ears]),
    ];
    let mut start = 0;
    while start < n || (n == 0 && start == 0) {
        let end = (start + chunk).min(n);
        let seg: Vec<&[T]> = audio.iter().map(|e| &e[start..end]).collect();
        let out = model.run_segment(&seg, opts)?.to_f64();
        let fields = [out.nap, out.bm, out.bm_raw, out.receptor_potential, out.ohc, out.agc];
        for ((_, _, store), planes) in acc.iter_mut().zip(fields) {
            for (e, p) in planes.into_iter().enumerate() {
                store[e].push(p);
            }
        }
        if n == 0 {
            break;
        }
        start = end;
    }
    let planes = acc
        .into_iter()
        .filter(|(_, on, _)| *on)
        .map(|(name, _, per_ear)| Ok((name, per_ear.iter().map(|v| Plane::concat(v)).collect::<Result<Vec<_>>>()?)))
        .collect::<Result<_>>()?;
    Ok(RunResult { planes, pole_freqs: model.pole_freqs().to_vec() })
}

/// Run the model per `cfg` and write one file per selected plane and ear
/// (`nap.csv`, or `nap_ear0.csv` / `nap_ear1.csv` for stereo input).
/// Returns the written paths.
pub fn cmd_run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let (audio, fs) = load_audio(&cfg.input, cfg.sample_rate)?;
    let params = default_design(fs)?.with_ihc_variant(cfg.ihc_variant).with_delay_buffer(cfg.use_delay_buffer);
    let result = if cfg.single_precision {
        run_model::<f32>(cfg, &audio, &params)?
    } else {
        run_model::<f64>(cfg, &audio, &params)?
    };
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    for (name, per_ear) in &result.planes {
        for (e, plane) in per_ear.iter().enumerate() {
            let stem = if per_ear.len() == 1 { name.to_string() } else { format!("{name}_ear{e}") };
            let path = cfg.out_dir.join(format!("{stem}.{}", cfg.format.extension()));
            write_plane_file(&path, plane, &result.pole_freqs, cfg.format)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn out_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn format_distortion_report(r: &DistortionReport) -> String {
    let mut s = format!("{:>10} {:>10} {:>10} {:>8} {:>10} detected\n", "freq_hz", "kind", "peak_db", "channel", "snr_db");
    for l in &r.lines {
        s += &format!(
            "{:>10.1} {:>10} {:>10.1} {:>8} {:>10.1} {}\n",
            l.freq_hz,
            format!("{:?}", l.kind).to_lowercase(),
            l.peak_db,
            l.peak_channel,
            l.snr_db,
            if l.detected { "yes" } else { "no" }
        );
    }
    s += &format!("worst 0 Hz bin relative to strongest line: {:.1} dB\n", r.worst_dc_rel_db());
    s
}

pub fn cmd_analyze_distortion(args: &DistortionArgs, out: &mut dyn Write) -> Result<DistortionReport> {
    let params = args.model.design(args.model.sample_rate.unwrap_or(DEFAULT_SAMPLE_RATE))?;
    let cfg = DistortionConfig {
        primaries: args.freqs.clone(),
        level_dbfs: args.level,
        duration: args.duration,
        window: args.window,
        use_bm_raw: args.bm_raw,
        ..Default::default()
    };
    let report = analyze_distortion(&params, &cfg)?;
    write!(out, "{}", format_distortion_report(&report))?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        // rows are channels, columns frequency bins
        write_csv(BufWriter::new(File::create(dir.join("spectrum.csv"))?), &report.spectrum_db, &report.bin_freqs)?;
        let mut w = csv::Writer::from_path(dir.join("lines.csv"))?;
        w.write_record(["freq_hz", "kind", "peak_db", "channel", "snr_db", "detected"])?;
        for l in &report.lines {
            w.write_record([
                l.freq_hz.to_string(),
                format!("{:?}", l.kind).to_lowercase(),
                l.peak_db.to_string(),
                l.peak_channel.to_string(),
                l.snr_db.to_string(),
                l.detected.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if args.check {
        if !report.all_detected() {
            return Err(CarfacError::Usage("check failed: not every distortion line was detected".into()));
        }
        if report.worst_dc_rel_db() >= -60.0 {
            return Err(CarfacError::Usage(format!(
                "check failed: 0 Hz bin only {:.1} dB below the strongest line",
                report.worst_dc_rel_db()
            )));
        }
    }
    Ok(report)
}

fn write_traces(path: &Path, c: &ToneBurstComparison) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "time_s",
        "stimulus",
        "bm_two_cap",
        "receptor_potential_two_cap",
        "nap_two_cap",
        "bm_one_cap",
        "nap_one_cap",
    ])?;
    for t in 0..c.stimulus.len() {
        w.write_record([
            (t as f64 / c.sample_rate).to_string(),
            c.stimulus[t].to_string(),
            c.two_cap.bm[t].to_string(),
            c.two_cap.receptor_potential[t].to_string(),
            c.two_cap.nap[t].to_string(),
            c.one_cap.bm[t].to_string(),
            c.one_cap.nap[t].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_toneburst_compare(args: &ToneBurstArgs, out: &mut dyn Write) -> Result<(ToneBurstComparison, ToneBurstComparison)> {
    let params = default_design(args.sample_rate)?;
    let high = compare_tone_burst(&params, &ToneBurstConfig { channel: args.channel, ..ToneBurstConfig::three_khz() })?;
    let pole = design_carfac(&params)?.channels.pole_freqs;
    let ch300 = (0..pole.len()).min_by(|&a, &b| (pole[a] - 300.0).abs().total_cmp(&(pole[b] - 300.0).abs())).unwrap_or(0);
    let low = compare_tone_burst(&params, &ToneBurstConfig::steady_tone(300.0, ch300))?;
    writeln!(out, "{:>8} {:>8} {:>12} {:>12} {:>12} {:>12} {:>9} {:>11}", "freq", "channel", "ac_two_cap", "dc_two_cap", "ac_one_cap", "dc_one_cap", "ac_ratio", "index_ratio")?;
    for c in [&high, &low] {
        writeln!(
            out,
            "{:>8} {:>8} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>9.3} {:>11.3}",
            c.freq,
            c.channel,
            c.two_cap.synchrony.ac,
            c.two_cap.synchrony.dc,
            c.one_cap.synchrony.ac,
            c.one_cap.synchrony.dc,
            c.ac_ratio(),
            c.index_ratio()
        )?;
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        write_traces(&dir.join("traces_3000hz.csv"), &high)?;
        write_traces(&dir.join("traces_300hz.csv"), &low)?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        w.write_record(["freq_hz", "channel", "ac_two_cap", "dc_two_cap", "ac_one_cap", "dc_one_cap", "ac_ratio", "index_ratio"])?;
        for c in [&high, &low] {
            w.write_record([
                c.freq.to_string(),
                c.channel.to_string(),
                c.two_cap.synchrony.ac.to_string(),
                c.two_cap.synchrony.dc.to_string(),
                c.one_cap.synchrony.ac.to_string(),
                c.one_cap.synchrony.dc.to_string(),
                c.ac_ratio().to_string(),
                c.index_ratio().to_string(),
            ])?;
        }
        w.flush()?;
    }
    if args.check {
        if (high.ac_ratio() - 0.5).abs() > 0.15 {
            return Err(CarfacError::Usage(format!("check failed: 3 kHz AC ratio {:.3}", high.ac_ratio())));
        }
        if low.ac_ratio() <= 0.8 {
            return Err(CarfacError::Usage(format!("check failed: 300 Hz AC ratio {:.3}", low.ac_ratio())));
        }
    }
    Ok((high, low))
}

pub fn cmd_benchmark(args: &BenchmarkArgs, out: &mut dyn Write) -> Result<Vec<BenchResult>> {
    let params = default_design(DEFAULT_SAMPLE_RATE)?;
    let cases = match &args.segments {
        Some(segs) => segs.iter().map(|&s| BenchCase::new(s, args.chunk_ms.map(|c| c * 1e-3), args.delay_buffer)).collect(),
        None => default_cases(),
    };
    let mut results = Vec::new();
    for case in &cases {
        results.push(run_case(&params, case, args.min_total, args.seed)?.0);
    }
    write!(out, "{}", format_table(&results))?;
    if args.check {
        if let Some(r) = results.iter().find(|r| r.rtf >= 1.0) {
            return Err(CarfacError::Usage(format!("check failed: '{}' ran at RTF {:.3}", r.case.label, r.rtf)));
        }
    }
    Ok(results)
}

pub fn golden_dir(arg: Option<&Path>) -> Result<PathBuf> {
    arg.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(GOLDEN_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| CarfacError::Usage(format!("give --dir or set {GOLDEN_DIR_ENV}")))
}

pub fn cmd_golden(args: &GoldenArgs, out: &mut dyn Write) -> Result<Option<GoldenReport>> {
    let dir = golden_dir(args.dir.as_deref())?;
    let params = default_design(DEFAULT_SAMPLE_RATE)?;
    match args.mode {
        GoldenMode::Dump => {
            if args.f32 {
                dump::<f32>(&params, &dir, args.seed)?;
            } else {
                dump::<f64>(&params, &dir, args.seed)?;
            }
            writeln!(out, "wrote golden data to {}", dir.display())?;
            Ok(None)
        }
        GoldenMode::Compare => {
            let report = if args.f32 {
                compare::<f32>(&params, &dir, args.tolerance.unwrap_or(default_tolerance::<f32>()))?
            } else {
                compare::<f64>(&params, &dir, args.tolerance.unwrap_or(default_tolerance::<f64>()))?
            };
            write!(out, "{}", report.format())?;
            writeln!(out, "max |diff| {:.3e} (tolerance {:.0e})", report.max_abs_diff(), report.tolerance)?;
            report.check()?;
            Ok(Some(report))
        }
    }
}

pub fn cmd_cochleagram(args: &CochleagramArgs) -> Result<Plane<f64>> {
    let input = resolve_input(&args.input)?;
    let (audio, fs) = load_audio(&input, args.model.sample_rate)?;
    let params = args.model.design(fs)?;
    let mut model = Carfac::<f64>::new(&params, audio.len())?;
    if let Some(h) = &args.model.ohc_health {
        model.set_ohc_health(&h.resolve(model.n_ch())?)?;
    }
    let opts = RunOptions { open_loop: args.model.open_loop, linear: args.model.linear, outputs: OutputSelection::nap_only() };
    let out = model.run_segment(&audio, opts)?;
    let cfg = CochleagramConfig { smoothing_s: args.smoothing_ms * 1e-3, hop: args.hop, clip: args.clip };
    let image = cochleagram(&out.nap[0], fs, &cfg);
    write_pgm(BufWriter::new(File::create(&args.out)?), &image)?;
    Ok(image)
}

pub fn cmd_design_dump(args: &DesignDumpArgs) -> Result<()> {
    let params = args.model.design(args.model.sample_rate.unwrap_or(DEFAULT_SAMPLE_RATE))?;
    let coeffs = design_carfac(&params)?;
    let w = out_writer(args.out.as_deref())?;
    match args.table {
        CoeffTable::Car => write_car_csv(w, &coeffs),
        CoeffTable::Agc => write_agc_csv(w, &coeffs),
        CoeffTable::Ihc => write_ihc_csv(w, &coeffs),
    }
}

/// Run a parsed command line, writing reports to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Run(a) => {
            for p in cmd_run(&a.to_config()?)? {
                writeln!(out, "wrote {}", p.display())?;
            }
        }
        Command::AnalyzeDistortion(a) => {
            cmd_analyze_distortion(a, out)?;
        }
        Command::ToneburstCompare(a) => {
            cmd_toneburst_compare(a, out)?;
        }
        Command::Benchmark(a) => {
            cmd_benchmark(a, out)?;
        }
        Command::Golden(a) => {
            cmd_golden(a, out)?;
        }
        Command::Cochleagram(a) => {
            let img = cmd_cochleagram(a)?;
            writeln!(out, "wrote {} ({} x {})", a.out.display(), img.n_samples(), img.n_ch())?;
        }
        Command::DesignDump(a) => cmd_design_dump(a)?,
    }
    Ok(())
}
