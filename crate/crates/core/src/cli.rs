//! The `vqsqueeze` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
//! standard error; machine output goes to files or standard output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::features::{video_features, PoolingMode};
use crate::harness::{
    feature_matrix, parse_reduction_cases, run_experiment, summarize_reductions, DatasetManifest, ExperimentConfig,
    FileLoader, Phase, RegressorConfig, ShuffleMode, SplitSpec, REDUCTION_FIXTURE,
};
use crate::io::{read_image_dir, read_squeezed, read_y4m, write_heatmap, write_squeezed};
use crate::regress::{local_quality_map, predict, MlpConfig, Regressor};
use crate::spatial::{squeeze, SpatialPreset, SpatialScheme, SqueezeConfig};
use crate::temporal::{TemporalConfig, TemporalMethod};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vqsqueeze", version, about = "Spatio-temporal video squeezing and quality evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample keyframes and patches from one video into a VQSQ file.
    Squeeze(SqueezeCmd),
    /// Print data-reduction ratios for a table of volume shapes.
    Ratio(RatioCmd),
    /// Fit a regressor on every video of a manifest.
    Train(TrainCmd),
    /// Score a squeezed video with a trained model.
    Predict(PredictCmd),
    /// Run the split protocol and write a PLCC/SRCC report.
    Eval(EvalCmd),
    /// Render per-patch quality maps as PNG files.
    Heatmap(HeatmapCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemporalArg {
    Tsn,
    Tsm,
    Eco,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpatialArg {
    S1,
    S2,
    S3,
    S4,
    Custom,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputKind {
    Y4m,
    Imgdir,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegressorArg {
    Ridge,
    Mlp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PoolingArg {
    Pooled,
    Sequence,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Oo,
    Os,
    So,
    Ss,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, value_enum, default_value = "tsn")]
    pub temporal: TemporalArg,
    /// Number of segments M (defaults per method).
    #[arg(long)]
    pub segments: Option<usize>,
    /// Frames per segment for TSN (default 4).
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long, value_enum, default_value = "s3")]
    pub spatial: SpatialArg,
    /// Grid size for `--spatial custom`.
    #[arg(long, required_if_eq("spatial", "custom"))]
    pub beta: Option<usize>,
    /// Patch size for `--spatial custom`.
    #[arg(long, required_if_eq("spatial", "custom"))]
    pub mu: Option<usize>,
    /// Reuse one set of patch offsets for every keyframe.
    #[arg(long)]
    pub align_patches: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RegressorArgs {
    #[arg(long, value_enum, default_value = "ridge")]
    pub regressor: RegressorArg,
    /// Ridge penalty.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// MLP hidden widths, comma separated; `none` for a linear model.
    #[arg(long, default_value = "32")]
    pub hidden: String,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub mlp_seed: u64,
    #[arg(long, value_enum, default_value = "pooled")]
    pub pooling: PoolingArg,
    #[arg(long, value_enum, default_value = "oo")]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct SqueezeCmd {
    #[arg(long)]
    pub input: PathBuf,
    /// Inferred from the input when omitted (directory = imgdir).
    #[arg(long, value_enum)]
    pub input_kind: Option<InputKind>,
    /// File-name glob for image directories.
    #[arg(long, default_value = "*.png")]
    pub pattern: String,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RatioCmd {
    /// CSV of volume shapes; the bundled table when omitted.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub regressor: RegressorArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub squeezed: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub regressor: RegressorArgs,
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0.6)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test_frac: f64,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub squeezed: PathBuf,
    #[arg(long)]
    pub out_prefix: PathBuf,
    /// Pixels per grid cell; the patch size when omitted.
    #[arg(long)]
    pub cell: Option<usize>,
}

impl SamplingArgs {
    pub fn config(&self) -> Result<SqueezeConfig> {
        let method = match self.temporal {
            TemporalArg::Tsn => TemporalMethod::Tsn,
            TemporalArg::Tsm => TemporalMethod::Tsm,
            TemporalArg::Eco => TemporalMethod::Eco,
        };
        let mut temporal = TemporalConfig::new(method);
        if let Some(eta) = self.eta {
            temporal = temporal.with_frames_per_segment(eta);
        }
        if let Some(m) = self.segments {
            temporal = temporal.with_segments(m);
        }
        temporal.validate()?;
        let preset = match self.spatial {
            SpatialArg::S1 => Some(SpatialPreset::S1),
            SpatialArg::S2 => Some(SpatialPreset::S2),
            SpatialArg::S3 => Some(SpatialPreset::S3),
            SpatialArg::S4 => Some(SpatialPreset::S4),
            SpatialArg::Custom => None,
        };
        let spatial = match (preset, self.beta, self.mu) {
            (Some(p), None, None) => SpatialScheme::preset(p),
            (Some(_), _, _) => {
                return Err(Error::InvalidConfig("--beta/--mu require --spatial custom".into()));
            }
            (None, Some(b), Some(u)) => SpatialScheme::custom(b, u)?,
            (None, _, _) => return Err(Error::InvalidConfig("--spatial custom requires --beta and --mu".into())),
        };
        Ok(SqueezeConfig {
            temporal,
            spatial,
            align_patches: self.align_patches,
        })
    }
}

fn parse_hidden(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Error::InvalidConfig(format!("--hidden: bad layer width {w:?}")))
        })
        .collect()
}

impl RegressorArgs {
    pub fn regressor(&self) -> Result<RegressorConfig> {
        Ok(match self.regressor {
            RegressorArg::Ridge => RegressorConfig::Ridge { lambda: self.lambda },
            RegressorArg::Mlp => RegressorConfig::Mlp(MlpConfig {
                hidden: parse_hidden(&self.hidden)?,
                learning_rate: self.lr,
                epochs: self.epochs,
                seed: self.mlp_seed,
            }),
        })
    }

    pub fn pooling(&self) -> PoolingMode {
        match self.pooling {
            PoolingArg::Pooled => PoolingMode::Pooled,
            PoolingArg::Sequence => PoolingMode::Sequence,
        }
    }

    pub fn mode(&self) -> ShuffleMode {
        match self.mode {
            ModeArg::Oo => ShuffleMode::Oo,
            ModeArg::Os => ShuffleMode::Os,
            ModeArg::So => ShuffleMode::So,
            ModeArg::Ss => ShuffleMode::Ss,
        }
    }
}

fn experiment(sampling: &SamplingArgs, reg: &RegressorArgs, split: SplitSpec) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        squeeze: sampling.config()?,
        pooling: reg.pooling(),
        mode: reg.mode(),
        regressor: reg.regressor()?,
        split,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::from(e).at_path(path))
}

fn load_model(path: &Path) -> Result<Regressor> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at_path(path))?;
    Regressor::from_json(&text).map_err(|e| e.at_path(path))
}

fn cmd_squeeze(c: &SqueezeCmd, out: &mut dyn Write) -> Result<()> {
    let cfg = c.sampling.config()?;
    let kind = c.input_kind.unwrap_or(if c.input.is_dir() { InputKind::Imgdir } else { InputKind::Y4m });
    let video = match kind {
        InputKind::Y4m => read_y4m(&c.input)?,
        InputKind::Imgdir => read_image_dir(&c.input, &c.pattern)?,
    };
    let sq = squeeze(&video, &cfg, c.sampling.seed).map_err(|e| e.for_video(video.video_id()))?;
    write_squeezed(&sq, &c.out)?;
    let side = sq.scheme.fragment_side();
    writeln!(out, "{}\t{}x{}x{}x3\t{}", sq.video_id, sq.len(), side, side, c.out.display())?;
    Ok(())
}

fn cmd_ratio(c: &RatioCmd, out: &mut dyn Write) -> Result<()> {
    let text = match &c.fixtures {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::from(e).at_path(p))?,
        None => REDUCTION_FIXTURE.to_owned(),
    };
    let cases = parse_reduction_cases(&text)?;
    let summary = summarize_reductions(&cases)?;
    for row in &summary.rows {
        let reported = row
            .case
            .reported
            .map(|r| {
                let verdict = if (row.ratio.percent - r).abs() <= 0.01 { "match" } else { "MISMATCH" };
                format!("\treported {r:.2}\t{verdict}")
            })
            .unwrap_or_default();
        writeln!(
            out,
            "{}\t{} -> {}\t{:.4}%\trounded {}\ttruncated {}{}",
            row.case.dataset,
            row.case.original,
            row.case.squeezed,
            row.ratio.percent,
            row.ratio.rounded(),
            row.ratio.truncated(),
            reported
        )?;
    }
    writeln!(
        out,
        "average\t{}%\tmean of truncated {:.4}\tmean of rounded {:.4}\tmean of exact {:.4}",
        summary.headline(),
        summary.mean_truncated,
        summary.mean_rounded,
        summary.mean_percent
    )?;
    Ok(())
}

fn cmd_train(c: &TrainCmd, out: &mut dyn Write) -> Result<()> {
    let cfg = experiment(&c.sampling, &c.regressor, SplitSpec::default())?;
    let manifest = DatasetManifest::read(&c.manifest)?;
    let loader = FileLoader { base_dir: manifest.base_dir.clone() };
    let x = feature_matrix(&loader, &manifest.entries, &cfg, c.sampling.seed, Phase::Train)?;
    let y: Vec<f64> = manifest.entries.iter().map(|e| e.mos).collect();
    let reg = cfg.regressor.train(&x, &y)?.with_pooling(cfg.pooling);
    write_text(&c.out, &reg.to_json()?)?;
    writeln!(out, "{}", c.out.display())?;
    Ok(())
}

fn cmd_predict(c: &PredictCmd, out: &mut dyn Write) -> Result<()> {
    let reg = load_model(&c.model)?;
    let sq = read_squeezed(&c.squeezed)?;
    let features = video_features(&sq, reg.pooling).map_err(|e| e.for_video(&sq.video_id))?;
    let score = predict(&reg, &features).map_err(|e| e.for_video(&sq.video_id))?;
    writeln!(out, "{}\t{score}", sq.video_id)?;
    Ok(())
}

fn cmd_eval(c: &EvalCmd, out: &mut dyn Write) -> Result<()> {
    let split = SplitSpec {
        train_frac: c.train_frac,
        val_frac: c.val_frac,
        test_frac: c.test_frac,
        rounds: c.rounds,
        base_seed: c.sampling.seed,
    };
    let cfg = experiment(&c.sampling, &c.regressor, split)?;
    let manifest = DatasetManifest::read(&c.manifest)?;
    let loader = FileLoader { base_dir: manifest.base_dir.clone() };
    let report = run_experiment(&manifest, &loader, &cfg)?;
    let json = report.to_json()?;
    for (i, r) in report.rounds.iter().enumerate() {
        eprintln!("round {i}: plcc {:.4} srcc {:.4} (n = {})", r.plcc_mapped, r.srcc, r.n);
    }
    eprintln!("mean: plcc {:.4} srcc {:.4}", report.mean_plcc_mapped, report.mean_srcc);
    match &c.report {
        Some(p) => write_text(p, &json)?,
        None => writeln!(out, "{json}")?,
    }
    Ok(())
}

fn cmd_heatmap(c: &HeatmapCmd, out: &mut dyn Write) -> Result<()> {
    let reg = load_model(&c.model)?;
    let sq = read_squeezed(&c.squeezed)?;
    let map = local_quality_map(&sq, &reg).map_err(|e| e.for_video(&sq.video_id))?;
    for p in write_heatmap(&map, c.cell.unwrap_or(sq.scheme.patch), &c.out_prefix)? {
        writeln!(out, "{}", p.display())?;
    }
    Ok(())
}

/// Dispatch a parsed command, writing machine output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Squeeze(c) => cmd_squeeze(c, out),
        Command::Ratio(c) => cmd_ratio(c, out),
        Command::Train(c) => cmd_train(c, out),
        Command::Predict(c) => cmd_predict(c, out),
        Command::Eval(c) => cmd_eval(c, out),
        Command::Heatmap(c) => cmd_heatmap(c, out),
    }
}

fn is_usage(e: &Error) -> bool {
    match e {
        Error::InvalidConfig(_) => true,
        Error::Video { source, .. } | Error::Path { source, .. } => is_usage(source),
        _ => false,
    }
}

/// Parse `argv`, run, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock).and_then(|()| lock.flush().map_err(Error::from)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}
