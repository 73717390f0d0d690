//! `rdrs`: training, R-D curves, pattern dumps and FER simulation.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdrs::channel::ChannelConfig;
use rdrs::measures::{
    allowable_types, asd_measure, asd_rate_ok, bitlevel_measure, error_only_measure, masd_2a_types, mbm_measure,
    DistortionMeasure,
};
use rdrs::pipeline::{fer_experiment, frame_rng, prepare, train, FerOptions, TrainedProfile};
use rdrs::rdengine::{log_slopes, rd_curve, SourceModel};
use rdrs::rscodec::RsCode;

use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Run(rdrs::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<rdrs::Error> for CliError {
    fn from(e: rdrs::Error) -> Self {
        CliError::Run(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(name = "rdrs", version, about = "Rate-distortion guided multiple-trial RS decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat JSON config; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Use the distortion oracle instead of the decoder.
    #[arg(long, global = true)]
    oracle: bool,
    /// Use the (15,11) preset over GF(16) as the base config.
    #[arg(long, global = true)]
    small: bool,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train and store the reliability profile for every Eb/N0.
    Train,
    /// Sweep R-D curves for every measure family the code supports.
    RdCurve,
    /// Frame error rates for every (scheme, Eb/N0).
    Fer,
    /// Dump one pattern set per scheme at the first Eb/N0.
    Patterns,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rdrs: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let base = if c.small { ExperimentConfig::small() } else { ExperimentConfig::default() };
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p, base)?,
        None => base,
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    match cli.command {
        Command::Train => cmd_train(&cfg),
        Command::RdCurve => cmd_rd_curve(&cfg),
        Command::Fer => cmd_fer(&cfg, c.oracle),
        Command::Patterns => cmd_patterns(&cfg),
    }
}

fn channel(code: &RsCode, ebno: f64) -> Result<ChannelConfig, CliError> {
    ChannelConfig::new(ebno, code.rate(), code.q()).map_err(|e| CliError::Config(e.to_string()))
}

fn cmd_train(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let code = cfg.code()?;
    if cfg.tau < 10 {
        eprintln!("rdrs: warning: tau = {} gives a very noisy profile", cfg.tau);
    }
    for &ebno in &cfg.ebno_db {
        let path = cfg.profile_path(ebno);
        if let Ok(existing) = read_profile(&path) {
            if existing.ebno_db == ebno && existing.tau == cfg.tau && existing.seed == cfg.seed {
                println!("{}: cached", path.display());
                continue;
            }
        }
        let profile = train(&code, &channel(&code, ebno)?, cfg.tau, cfg.seed)?;
        let json = serde_json::to_string(&profile).expect("profile serializes");
        fs::write(&path, json + "\n").map_err(io_err(&path))?;
        println!("{}: trained", path.display());
    }
    Ok(())
}

fn read_profile(path: &Path) -> Result<TrainedProfile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e} (run `rdrs train` first)", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: corrupt profile: {e}", path.display())))
}

/// CSV writer whose first line records the config hash and seed.
fn csv_writer(cfg: &ExperimentConfig, path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(w, "# config_sha256={} seed={}", cfg.hash(), cfg.seed).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Measure families swept by `rd-curve`, with the top-l size of their source
/// (0 for the bit source).
fn curve_families(n: usize, k: usize) -> Vec<(String, usize, DistortionMeasure)> {
    let mut out: Vec<(String, usize, DistortionMeasure)> =
        (1..=3).map(|l| (format!("mBM-{l}"), l, mbm_measure(n, k, l))).collect();
    if let Ok(dm) = bitlevel_measure(n, k) {
        out.push(("m-b-ASD".into(), 0, dm));
    }
    for m in [2u32, 3] {
        if asd_rate_ok(n, k, m) {
            if let Ok(dm) = asd_measure(n, k, m, &allowable_types(m, m as usize)) {
                out.push((format!("mASD-{m}"), m as usize, dm));
            }
            if m == 2 {
                if let Ok(dm) = asd_measure(n, k, 2, &masd_2a_types()) {
                    out.push(("mASD-2a".into(), 2, dm));
                }
            }
        }
    }
    out.push(("error-only-2".into(), 2, error_only_measure(n, k, 2)));
    out
}

fn cmd_rd_curve(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let path = cfg.out.join("rd_curves.csv");
    let profiles = cfg
        .ebno_db
        .iter()
        .map(|&e| read_profile(&cfg.profile_path(e)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv_writer(cfg, &path)?;
    w.write_record(["ebno_db", "scheme", "s", "R_bits", "D"]).map_err(csv_err(&path))?;
    let slopes = log_slopes(0.02, 20.0, 120);
    for profile in &profiles {
        for (name, l, dm) in curve_families(cfg.n, cfg.k) {
            let src: SourceModel = if l == 0 { profile.bit_source()? } else { profile.symbol_source(l)? };
            for p in rd_curve(&src, &dm, &slopes)? {
                w.write_record([
                    profile.ebno_db.to_string(),
                    name.clone(),
                    p.s.to_string(),
                    p.rate.to_string(),
                    p.distortion.to_string(),
                ])
                .map_err(csv_err(&path))?;
            }
        }
    }
    w.flush().map_err(io_err(&path))?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_fer(cfg: &ExperimentConfig, oracle: bool) -> Result<(), CliError> {
    let code = cfg.code()?;
    let schemes = cfg.parsed_schemes()?;
    let summary_path = cfg.out.join("fer.csv");
    let frames_path = cfg.out.join("frames.csv");
    let mut summary = csv_writer(cfg, &summary_path)?;
    let mut frames = csv_writer(cfg, &frames_path)?;
    summary
        .write_record([
            "ebno_db", "scheme", "R", "oracle", "frames", "errors", "failures", "miscorrections", "fer", "ci_lo",
            "ci_hi",
        ])
        .map_err(csv_err(&summary_path))?;
    frames
        .write_record(["ebno_db", "frame", "scheme", "R", "min_distortion", "candidates", "success"])
        .map_err(csv_err(&frames_path))?;
    for &ebno in &cfg.ebno_db {
        let profile = read_profile(&cfg.profile_path(ebno))?;
        let ch = channel(&code, ebno)?;
        for &scheme in &schemes {
            let prepared = prepare(scheme, &code, &profile)?;
            let mut opts = FerOptions::new(cfg.frames, cfg.seed);
            opts.oracle = oracle;
            let res = fer_experiment(&code, &ch, &prepared, &opts)?;
            let rate = res.rate.map_or(String::new(), |r| r.to_string());
            summary
                .write_record([
                    ebno.to_string(),
                    res.scheme.clone(),
                    rate.clone(),
                    res.oracle.to_string(),
                    res.frames.to_string(),
                    res.errors.to_string(),
                    res.failures.to_string(),
                    res.miscorrections.to_string(),
                    res.fer.to_string(),
                    res.ci95.0.to_string(),
                    res.ci95.1.to_string(),
                ])
                .map_err(csv_err(&summary_path))?;
            for r in &res.log {
                frames
                    .write_record([
                        ebno.to_string(),
                        r.frame.to_string(),
                        res.scheme.clone(),
                        rate.clone(),
                        r.min_distortion.to_string(),
                        r.candidates.to_string(),
                        u8::from(r.success).to_string(),
                    ])
                    .map_err(csv_err(&frames_path))?;
            }
            println!(
                "{ebno:.2} dB {:<14} FER {:.3e} [{:.3e}, {:.3e}] ({} / {}{})",
                res.scheme,
                res.fer,
                res.ci95.0,
                res.ci95.1,
                res.errors,
                res.frames,
                if res.oracle { ", oracle" } else { "" }
            );
        }
    }
    summary.flush().map_err(io_err(&summary_path))?;
    frames.flush().map_err(io_err(&frames_path))?;
    Ok(())
}

fn cmd_patterns(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let code = cfg.code()?;
    let ebno = cfg.ebno_db[0];
    let profile = read_profile(&cfg.profile_path(ebno))?;
    for scheme in cfg.parsed_schemes()? {
        let prepared = prepare(scheme, &code, &profile)?;
        // same stream as the shared set of a fixed-set FER run
        let set = prepared.pattern_set(true, &mut frame_rng(cfg.seed, u64::MAX))?;
        let file: String = scheme
            .to_string()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let path = cfg.out.join(format!("patterns_{}.txt", file.trim_end_matches('_')));
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        set.write_dump(&mut w, cfg.seed).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
        println!("{} ({} patterns)", path.display(), set.len());
    }
    Ok(())
}
