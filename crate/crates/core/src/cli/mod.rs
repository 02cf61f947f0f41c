//! Command-line front end: `synth`, `train`, `predict`, `score`, `plot`.

mod svg;

pub use svg::{loss_chart, stick_figure_strip};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::skeleton::{
    denormalize_poses, normalize_poses, parse_canonical_json, parse_ntu_skeleton, synth_generate, to_canonical_json,
    AxisBounds, NormalizationParams, Pose, SkeletonError, SkeletonSequence, SynthConfig,
};
use crate::trainer::{
    load_checkpoint, pose_rows, read_loss_csv, rows_to_poses, save_checkpoint, train, write_loss_csv,
    write_quality_csv, BoundsMode, Checkpoint, Dataset, TrainError, TrainingConfig,
};

/// Failure classes with stable exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config { .. } => CliError::Usage(e.to_string()),
            TrainError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SkeletonError> for CliError {
    fn from(e: SkeletonError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "motion-gan", version, about = "Forecast several plausible futures of a skeleton motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write procedural skeleton sequences as canonical JSON.
    Synth(SynthArgs),
    /// Train the three networks and write checkpoints and logs.
    Train(TrainArgs),
    /// Sample several futures for the opening frames of a sequence.
    Predict(PredictArgs),
    /// Print the discriminator's probability that a sequence is real.
    Score(ScoreArgs),
    /// Render a loss log as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub sequences: usize,
    #[arg(long, default_value_t = 40)]
    pub frames: usize,
    #[arg(long, default_value_t = 5)]
    pub joints: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of `.json` / `.skeleton` files, or a single file.
    #[arg(long)]
    pub data: PathBuf,
    /// Flat `key = value` file; see `configs/desk.conf`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key=value` settings applied after the config file.
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub num_futures: usize,
    /// Frames to predict; defaults to the trained length.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "predictions")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub losses: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Score(a) => cmd_score(&a).map(|p| println!("{p}")),
        Command::Plot(a) => cmd_plot(&a),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    if a.joints < 2 {
        return Err(CliError::Usage("--joints must be >= 2: a skeleton needs at least one bone".into()));
    }
    if a.frames == 0 || a.sequences == 0 {
        return Err(CliError::Usage("--frames and --sequences must be >= 1".into()));
    }
    let seqs = synth_generate(&SynthConfig {
        sequences: a.sequences,
        frames: a.frames,
        topology_size: a.joints,
        seed: a.seed,
    })?;
    create_dir(&a.out)?;
    for (i, s) in seqs.iter().enumerate() {
        write_file(&a.out.join(format!("seq_{i:04}.json")), &to_canonical_json(s))?;
    }
    Ok(())
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn build_config(a: &TrainArgs) -> Result<TrainingConfig, CliError> {
    let mut pairs = match &a.config {
        Some(p) => parse_config_text(&fs::read_to_string(p).map_err(|e| io_err(p, e))?)?,
        None => Vec::new(),
    };
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override `{o}` is not key=value")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(e) = a.epochs {
        pairs.push(("epochs".into(), e.to_string()));
    }
    if let Some(s) = a.seed {
        pairs.push(("seed".into(), s.to_string()));
    }
    Ok(TrainingConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?)
}

fn is_ntu(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "skeleton")
}

/// Loads one file: canonical JSON, or every body of an NTU skeleton file.
pub fn load_sequences(path: &Path) -> Result<Vec<SkeletonSequence>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let wrap = |e: SkeletonError| CliError::Data(format!("{}: {e}", path.display()));
    if is_ntu(path) {
        parse_ntu_skeleton(&text).map_err(wrap)
    } else {
        parse_canonical_json(&text).map(|s| vec![s]).map_err(wrap)
    }
}

fn load_data(path: &Path) -> Result<(Vec<SkeletonSequence>, bool), CliError> {
    if !path.exists() {
        return Err(CliError::Data(format!("{}: no such file or directory", path.display())));
    }
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| io_err(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json" || e == "skeleton"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(CliError::Data(format!("{}: no .json or .skeleton files", path.display())));
    }
    let ntu = files.iter().all(|f| is_ntu(f));
    let mut seqs = Vec::new();
    for f in &files {
        seqs.extend(load_sequences(f)?);
    }
    Ok((seqs, ntu))
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let config = build_config(a)?;
    let (seqs, ntu) = load_data(&a.data)?;
    let bounds = match (config.bounds, ntu) {
        (BoundsMode::Ntu, _) | (BoundsMode::Auto, true) => AxisBounds::ntu(),
        _ => AxisBounds::fit_global(&seqs)?,
    };
    let dataset = Dataset::from_sequences(&seqs, bounds, config.m, config.n, config.stride, config.frame_step)?;
    eprintln!(
        "training on {} windows, {} steps per epoch",
        dataset.len(),
        dataset.len().div_ceil(config.batch_size)
    );
    let run = train(&dataset, &config, |s| {
        let l = s.last.expect("every epoch has a step");
        eprintln!(
            "epoch {:>4} step {:>6} critic {:+.5} generator {:+.5} discriminator {:.5} above_half {}/{}",
            s.epoch,
            s.steps,
            l.critic_loss,
            l.generator_loss,
            l.discriminator_loss,
            s.quality.count_above_half,
            s.quality.probabilities.len()
        );
    })?;
    create_dir(&a.out)?;
    save_checkpoint(&run.best, &a.out.join("best.ckpt.json"))?;
    save_checkpoint(&run.last, &a.out.join("final.ckpt.json"))?;
    write_loss_csv(&a.out.join("losses.csv"), &run.history)?;
    write_quality_csv(&a.out.join("quality.csv"), &run.quality)?;
    Ok(())
}

/// First sequence of the file, subsampled like the training data and
/// checked against the checkpoint's topology.
fn checkpoint_input(ckpt: &Checkpoint, path: &Path) -> Result<Vec<Pose>, CliError> {
    let seq = load_sequences(path)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: no skeleton found", path.display())))?;
    if seq.topology() != &ckpt.topology {
        return Err(CliError::Data(format!(
            "{}: topology `{}` ({} joints) does not match the checkpoint's `{}` ({} joints)",
            path.display(),
            seq.topology().name(),
            seq.topology().joint_count(),
            ckpt.topology.name(),
            ckpt.topology.joint_count()
        )));
    }
    Ok(seq.frames().iter().step_by(ckpt.config.frame_step).cloned().collect())
}

pub fn cmd_predict(a: &PredictArgs) -> Result<(), CliError> {
    if a.num_futures == 0 {
        return Err(CliError::Usage("--num-futures must be >= 1".into()));
    }
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let cfg = &ckpt.config;
    let n = a.frames.unwrap_or(cfg.n);
    if n == 0 {
        return Err(CliError::Usage("--frames must be >= 1".into()));
    }
    let frames = checkpoint_input(&ckpt, &a.input)?;
    if frames.len() < cfg.m {
        return Err(CliError::Data(format!(
            "{}: {} frames, the model observes {}",
            a.input.display(),
            frames.len(),
            cfg.m
        )));
    }
    let prior = &frames[..cfg.m];
    let norm = NormalizationParams::from_prior(ckpt.bounds, prior);
    let normalized = normalize_poses(prior, &norm);
    let rows: Vec<_> = normalized
        .iter()
        .map(|p| pose_rows(std::iter::repeat_n(p, a.num_futures)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let z = cfg.z_distribution.sample_batch(&mut rng, a.num_futures, cfg.z_dim);
    let out = ckpt
        .generator()?
        .predict(&rows, &z, n)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let per_frame: Vec<Vec<Pose>> = out.iter().map(rows_to_poses).collect();
    create_dir(&a.out)?;
    for f in 0..a.num_futures {
        let future: Vec<Pose> = per_frame.iter().map(|frame| frame[f].clone()).collect();
        if future.iter().any(|p| !p.is_finite()) {
            return Err(CliError::Numeric(format!("prediction {f} is not finite")));
        }
        let future = denormalize_poses(&future, &norm);
        let seq = SkeletonSequence::new(ckpt.topology.clone(), future.clone(), cfg.frame_step, format!("future:{f}"))?;
        write_file(&a.out.join(format!("future_{f:03}.json")), &to_canonical_json(&seq))?;
        write_file(
            &a.out.join(format!("future_{f:03}.svg")),
            &stick_figure_strip(prior, &future, &ckpt.topology),
        )?;
    }
    Ok(())
}

/// Discriminator probability for a sequence of exactly `m + n` frames.
pub fn cmd_score(a: &ScoreArgs) -> Result<f64, CliError> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let cfg = &ckpt.config;
    let frames = checkpoint_input(&ckpt, &a.input)?;
    if frames.len() != cfg.m + cfg.n {
        return Err(CliError::Data(format!(
            "{}: {} frames, expected exactly {} ({} observed + {} future)",
            a.input.display(),
            frames.len(),
            cfg.m + cfg.n,
            cfg.m,
            cfg.n
        )));
    }
    let norm = NormalizationParams::from_prior(ckpt.bounds, &frames[..cfg.m]);
    let normalized = normalize_poses(&frames, &norm);
    let rows: Vec<_> = normalized.iter().map(|p| pose_rows([p])).collect();
    let p = ckpt
        .discriminator()?
        .score_tensors(&rows[..cfg.m], &rows[cfg.m..], true)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let p = p.data()[0];
    if !p.is_finite() {
        return Err(CliError::Numeric("discriminator output is not finite".into()));
    }
    Ok(p)
}

pub fn cmd_plot(a: &PlotArgs) -> Result<(), CliError> {
    let rows = read_loss_csv(&a.losses)?;
    let svg = loss_chart(&rows).map_err(|e| CliError::Data(format!("{}: {e}", a.losses.display())))?;
    write_file(&a.out, &svg)
}
