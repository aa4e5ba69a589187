//! Experiment orchestration: manifests, train/val/test splits, keyframe
//! order modes, averaged reports and data-reduction ratios.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{video_features, PoolingMode};
use crate::io::{read_image_dir, read_y4m};
use crate::metrics::{plcc_mapped, CorrelationResult};
use crate::model::VideoSequence;
use crate::regress::{train_mlp, train_ridge, MlpConfig, Regressor};
use crate::rng::{derive_seed, SeededRng};
use crate::spatial::{squeeze, SqueezeConfig, SqueezedVideo};

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub path: PathBuf,
    pub mos: f64,
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative entry paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = Self { entries, base_dir: PathBuf::new() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !seen.insert(e.video_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate video_id {:?} on row {}", e.video_id, i + 1)));
            }
            if !e.mos.is_finite() {
                return Err(Error::Manifest(format!("non-finite mos for {:?}", e.video_id)));
            }
            if e.width == 0 || e.height == 0 || e.num_frames == 0 {
                return Err(Error::Manifest(format!("non-positive dimensions for {:?}", e.video_id)));
            }
        }
        Ok(())
    }

    /// Parse CSV with header `video_id,path,mos,width,height,num_frames`.
    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let expected = ["video_id", "path", "mos", "width", "height", "num_frames"];
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).ne(expected.iter().copied()) {
            return Err(Error::Manifest(format!(
                "header must be {}, got {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let entries = rdr.deserialize().collect::<std::result::Result<Vec<ManifestEntry>, _>>()?;
        Self::new(entries)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::from(e).at_path(path))?;
        let mut m = Self::from_csv_reader(file).map_err(|e| e.at_path(path))?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Something that can produce the decoded video for a manifest entry.
pub trait VideoLoader: Sync {
    fn load(&self, entry: &ManifestEntry) -> Result<VideoSequence>;
}

impl<F> VideoLoader for F
where
    F: Fn(&ManifestEntry) -> Result<VideoSequence> + Sync,
{
    fn load(&self, entry: &ManifestEntry) -> Result<VideoSequence> {
        self(entry)
    }
}

/// Loads `.y4m` files, or directories of `*.png` frames.
#[derive(Debug, Clone, Default)]
pub struct FileLoader {
    pub base_dir: PathBuf,
}

impl VideoLoader for FileLoader {
    fn load(&self, entry: &ManifestEntry) -> Result<VideoSequence> {
        let path = self.base_dir.join(&entry.path);
        let video = if path.is_dir() {
            read_image_dir(&path, "*.png")?
        } else {
            read_y4m(&path)?
        };
        Ok(video.with_id(entry.video_id.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub rounds: usize,
    pub base_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            rounds: 3,
            base_seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split fractions {fracs:?} must sum to 1")));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be >= 1".into()));
        }
        Ok(())
    }

    /// Partition sizes for `n` items: floors first, then one extra item at a
    /// time to train, val, test in turn.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let mut sizes = [self.train_frac, self.val_frac, self.test_frac].map(|f| (n as f64 * f + 1e-9).floor() as usize);
        let mut slot = 0;
        while sizes.iter().sum::<usize>() < n {
            sizes[slot % 3] += 1;
            slot += 1;
        }
        sizes
    }

    pub fn round_seed(&self, round: usize) -> u64 {
        derive_seed(self.base_seed, &[b"round", &(round as u64).to_le_bytes()])
    }
}

/// Index partitions of one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub const MIN_ENTRIES: usize = 5;

/// Shuffle `n` indices with the round's seed and cut them into partitions.
pub fn split_indices(n: usize, plan: &SplitSpec, round: usize) -> Result<Split> {
    plan.validate()?;
    if n < MIN_ENTRIES {
        return Err(Error::TooFewEntries { needed: MIN_ENTRIES, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(derive_seed(plan.round_seed(round), &[b"split"])).shuffle(&mut order);
    let [tr, va, _] = plan.sizes(n);
    Ok(Split {
        train: order[..tr].to_vec(),
        val: order[tr..tr + va].to_vec(),
        test: order[tr + va..].to_vec(),
    })
}

/// Train / validation / test entries of one round.
pub fn split_dataset(
    manifest: &DatasetManifest,
    plan: &SplitSpec,
    round: usize,
) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    let s = split_indices(manifest.len(), plan, round)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| manifest.entries[i].clone()).collect();
    Ok((pick(&s.train), pick(&s.val), pick(&s.test)))
}

/// Keyframe order at train time and at test time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShuffleMode {
    Oo,
    Os,
    So,
    Ss,
}

impl ShuffleMode {
    pub const ALL: [ShuffleMode; 4] = [Self::Oo, Self::Os, Self::So, Self::Ss];

    pub fn shuffles(self, phase: Phase) -> bool {
        matches!(
            (self, phase),
            (ShuffleMode::So | ShuffleMode::Ss, Phase::Train) | (ShuffleMode::Os | ShuffleMode::Ss, Phase::Test)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Test,
}

impl Phase {
    fn tag(self) -> &'static [u8] {
        match self {
            Phase::Train => b"train",
            Phase::Test => b"test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegressorConfig {
    Ridge { lambda: f64 },
    Mlp(MlpConfig),
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig::Ridge { lambda: 1.0 }
    }
}

impl RegressorConfig {
    pub fn train(&self, x: &[Vec<f64>], y: &[f64]) -> Result<Regressor> {
        match self {
            RegressorConfig::Ridge { lambda } => train_ridge(x, y, *lambda),
            RegressorConfig::Mlp(cfg) => train_mlp(x, y, cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub squeeze: SqueezeConfig,
    pub pooling: PoolingMode,
    pub mode: ShuffleMode,
    pub regressor: RegressorConfig,
    pub split: SplitSpec,
}

/// Keyframe permutation applied to one video in one phase of one round.
pub fn keyframe_permutation(k: usize, round_seed: u64, video_id: &str, phase: Phase) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..k).collect();
    SeededRng::new(derive_seed(round_seed, &[b"shuffle", video_id.as_bytes(), phase.tag()])).shuffle(&mut perm);
    perm
}

/// Squeeze one video and apply the phase's keyframe ordering.
pub fn prepare_video(
    loader: &dyn VideoLoader,
    entry: &ManifestEntry,
    cfg: &ExperimentConfig,
    round_seed: u64,
    phase: Phase,
) -> Result<SqueezedVideo> {
    let wrap = |e: Error| e.for_video(&entry.video_id);
    let video = loader.load(entry).map_err(wrap)?.with_id(entry.video_id.clone());
    let sq = squeeze(&video, &cfg.squeeze, round_seed).map_err(wrap)?;
    Ok(if cfg.mode.shuffles(phase) {
        sq.permuted(&keyframe_permutation(sq.len(), round_seed, &entry.video_id, phase))
    } else {
        sq
    })
}

/// Features for a set of entries, in entry order.
pub fn feature_matrix(
    loader: &dyn VideoLoader,
    entries: &[ManifestEntry],
    cfg: &ExperimentConfig,
    round_seed: u64,
    phase: Phase,
) -> Result<Vec<Vec<f64>>> {
    let rows = entries
        .par_iter()
        .map(|e| {
            let sq = prepare_video(loader, e, cfg, round_seed, phase)?;
            video_features(&sq, cfg.pooling)
                .map(|f| f.values)
                .map_err(|err| err.for_video(&e.video_id))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = rows.first() {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != first.len()) {
            return Err(Error::DegenerateInput(format!(
                "sequence pooling needs a common keyframe count; {} has {} features, {} has {}",
                entries[0].video_id,
                first.len(),
                entries[i].video_id,
                r.len()
            )));
        }
    }
    Ok(rows)
}

/// Train on `train`, evaluate on `test`, return the correlation result and
/// the trained regressor.
pub fn run_round_with_model(
    loader: &dyn VideoLoader,
    train: &[ManifestEntry],
    test: &[ManifestEntry],
    cfg: &ExperimentConfig,
    round_seed: u64,
) -> Result<(CorrelationResult, Regressor)> {
    let x_train = feature_matrix(loader, train, cfg, round_seed, Phase::Train)?;
    let y_train: Vec<f64> = train.iter().map(|e| e.mos).collect();
    let reg = cfg.regressor.train(&x_train, &y_train)?.with_pooling(cfg.pooling);
    let x_test = feature_matrix(loader, test, cfg, round_seed, Phase::Test)?;
    let pred = x_test
        .iter()
        .map(|x| reg.predict_raw(x))
        .collect::<Result<Vec<_>>>()?;
    let mos: Vec<f64> = test.iter().map(|e| e.mos).collect();
    Ok((plcc_mapped(&pred, &mos)?, reg))
}

pub fn run_round(
    loader: &dyn VideoLoader,
    train: &[ManifestEntry],
    test: &[ManifestEntry],
    cfg: &ExperimentConfig,
    round_seed: u64,
) -> Result<CorrelationResult> {
    run_round_with_model(loader, train, test, cfg, round_seed).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rounds: Vec<CorrelationResult>,
    /// `[train, val, test]` sizes per round.
    #[serde(default)]
    pub split_sizes: Vec<[usize; 3]>,
    pub mean_plcc_mapped: f64,
    pub mean_srcc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn average_reports(rounds: Vec<CorrelationResult>) -> Result<EvalReport> {
    if rounds.is_empty() {
        return Err(Error::EmptyInput("no rounds to average".into()));
    }
    let n = rounds.len() as f64;
    // Sorted summation keeps the means independent of round order.
    let mean_of = |f: fn(&CorrelationResult) -> f64| {
        let mut v: Vec<f64> = rounds.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / n
    };
    Ok(EvalReport {
        mean_plcc_mapped: mean_of(|r| r.plcc_mapped),
        mean_srcc: mean_of(|r| r.srcc),
        rounds,
        split_sizes: Vec::new(),
        config: None,
    })
}

/// All rounds of the split protocol, averaged.
pub fn run_experiment(manifest: &DatasetManifest, loader: &dyn VideoLoader, cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.split.validate()?;
    let mut results = Vec::with_capacity(cfg.split.rounds);
    let mut sizes = Vec::with_capacity(cfg.split.rounds);
    for round in 0..cfg.split.rounds {
        let (train, val, test) = split_dataset(manifest, &cfg.split, round)?;
        sizes.push([train.len(), val.len(), test.len()]);
        results.push(run_round(loader, &train, &test, cfg, cfg.split.round_seed(round))?);
    }
    let mut report = average_reports(results)?;
    report.split_sizes = sizes;
    report.config = Some(cfg.clone());
    Ok(report)
}

/// `(frames, height, width)` of a pixel volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeShape {
    pub frames: u64,
    pub height: u64,
    pub width: u64,
}

impl VolumeShape {
    pub fn new(frames: u64, height: u64, width: u64) -> Self {
        Self { frames, height, width }
    }

    pub fn volume(&self) -> u128 {
        u128::from(self.frames) * u128::from(self.height) * u128::from(self.width)
    }
}

impl std::fmt::Display for VolumeShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}*{}*{}", self.frames, self.height, self.width)
    }
}

/// Percentage of pixel volume removed, with exact two-decimal renderings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionRatio {
    pub percent: f64,
    /// Hundredths of a percent, rounded half up.
    pub rounded_hundredths: i128,
    /// Hundredths of a percent, truncated toward zero.
    pub truncated_hundredths: i128,
}

fn hundredths(v: i128) -> String {
    let sign = if v < 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", v.abs() / 100, v.abs() % 100)
}

impl ReductionRatio {
    pub fn rounded(&self) -> String {
        hundredths(self.rounded_hundredths)
    }

    pub fn truncated(&self) -> String {
        hundredths(self.truncated_hundredths)
    }
}

/// `100 · (1 - squeezed volume / original volume)`.
pub fn reduction_ratio(original: VolumeShape, squeezed: VolumeShape) -> Result<ReductionRatio> {
    let (big, small) = (original.volume() as i128, squeezed.volume() as i128);
    if big == 0 || small == 0 {
        return Err(Error::InvalidConfig("volume dimensions must be positive".into()));
    }
    // 10_000 · (big - small) / big, in exact integer arithmetic.
    let num = 10_000 * (big - small);
    let truncated = num / big;
    let rounded = (2 * num + big).div_euclid(2 * big);
    Ok(ReductionRatio {
        percent: 100.0 * (1.0 - small as f64 / big as f64),
        rounded_hundredths: rounded,
        truncated_hundredths: truncated,
    })
}

/// One row of the reduction fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionCase {
    pub dataset: String,
    pub original: VolumeShape,
    pub squeezed: VolumeShape,
    /// Published percentage, when known.
    pub reported: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ReductionRow {
    dataset: String,
    original_frames: u64,
    original_height: u64,
    original_width: u64,
    squeezed_frames: u64,
    squeezed_height: u64,
    squeezed_width: u64,
    reported_percent: Option<f64>,
}

/// Reduction shapes shipped with the crate.
pub const REDUCTION_FIXTURE: &str = include_str!("../fixtures/reduction_shapes.csv");

pub fn parse_reduction_cases(csv_text: &str) -> Result<Vec<ReductionCase>> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    rdr.deserialize::<ReductionRow>()
        .map(|row| {
            let r = row?;
            Ok(ReductionCase {
                dataset: r.dataset,
                original: VolumeShape::new(r.original_frames, r.original_height, r.original_width),
                squeezed: VolumeShape::new(r.squeezed_frames, r.squeezed_height, r.squeezed_width),
                reported: r.reported_percent,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionResult {
    pub case: ReductionCase,
    pub ratio: ReductionRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionSummary {
    pub rows: Vec<ReductionResult>,
    /// Mean of the exact percentages.
    pub mean_percent: f64,
    /// Mean of the two-decimal truncated renderings.
    pub mean_truncated: f64,
    /// Mean of the two-decimal rounded renderings.
    pub mean_rounded: f64,
}

impl ReductionSummary {
    /// Mean of the truncated renderings, itself truncated to two decimals.
    pub fn headline(&self) -> String {
        let sum: i128 = self.rows.iter().map(|r| r.ratio.truncated_hundredths).sum();
        hundredths(sum.div_euclid(self.rows.len() as i128))
    }
}

pub fn summarize_reductions(cases: &[ReductionCase]) -> Result<ReductionSummary> {
    if cases.is_empty() {
        return Err(Error::EmptyInput("no reduction cases".into()));
    }
    let rows = cases
        .iter()
        .map(|c| {
            Ok(ReductionResult {
                ratio: reduction_ratio(c.original, c.squeezed)?,
                case: c.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    Ok(ReductionSummary {
        mean_percent: rows.iter().map(|r| r.ratio.percent).sum::<f64>() / n,
        mean_truncated: rows.iter().map(|r| r.ratio.truncated_hundredths as f64).sum::<f64>() / n / 100.0,
        mean_rounded: rows.iter().map(|r| r.ratio.rounded_hundredths as f64).sum::<f64>() / n / 100.0,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::SpatialScheme;
    use crate::synthetic::{blur_corpus, BlurCorpus};
    use crate::temporal::TemporalConfig;
    use proptest::prelude::*;

    fn entries(n: usize) -> Vec<ManifestEntry> {
        (0..n)
            .map(|i| ManifestEntry {
                video_id: format!("v{i:03}"),
                path: PathBuf::from(format!("v{i:03}.y4m")),
                mos: i as f64,
                width: 64,
                height: 64,
                num_frames: 30,
            })
            .collect()
    }

    #[test]
    fn split_sizes() {
        let plan = SplitSpec::default();
        assert_eq!(plan.sizes(10), [6, 2, 2]);
        assert_eq!(plan.sizes(7), [5, 1, 1]);
        assert_eq!(plan.sizes(5), [3, 1, 1]);
        assert_eq!(plan.sizes(9), [6, 2, 1]);
        let m = DatasetManifest::new(entries(10)).unwrap();
        let (tr, va, te) = split_dataset(&m, &plan, 0).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (6, 2, 2));
    }

    #[test]
    fn split_is_reproducible_and_round_dependent() {
        let plan = SplitSpec { base_seed: 17, ..SplitSpec::default() };
        assert_eq!(split_indices(50, &plan, 1).unwrap(), split_indices(50, &plan, 1).unwrap());
        assert_ne!(split_indices(50, &plan, 0).unwrap(), split_indices(50, &plan, 1).unwrap());
    }

    #[test]
    fn split_needs_five_entries() {
        assert!(matches!(
            split_indices(4, &SplitSpec::default(), 0),
            Err(Error::TooFewEntries { needed: 5, got: 4 })
        ));
        let bad = SplitSpec { train_frac: 0.7, ..SplitSpec::default() };
        assert!(split_indices(10, &bad, 0).is_err());
    }

    proptest! {
        #[test]
        fn split_partitions(n in 5usize..1000, seed: u64, round in 0usize..3) {
            let plan = SplitSpec { base_seed: seed, ..SplitSpec::default() };
            let s = split_indices(n, &plan, round).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!([s.train.len(), s.val.len(), s.test.len()], plan.sizes(n));
        }
    }

    #[test]
    fn manifest_csv() {
        let csv = "video_id,path,mos,width,height,num_frames\na,a.y4m,3.5,960,540,240\nb,b,4.25,64,64,30\n";
        let m = DatasetManifest::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.entries[1].mos, 4.25);
        let dup = "video_id,path,mos,width,height,num_frames\na,a,1,1,1,1\na,b,2,1,1,1\n";
        assert!(matches!(DatasetManifest::from_csv_reader(dup.as_bytes()), Err(Error::Manifest(_))));
        let nan = "video_id,path,mos,width,height,num_frames\na,a,NaN,1,1,1\n";
        assert!(DatasetManifest::from_csv_reader(nan.as_bytes()).is_err());
        let zero = "video_id,path,mos,width,height,num_frames\na,a,1,0,1,1\n";
        assert!(DatasetManifest::from_csv_reader(zero.as_bytes()).is_err());
        let header = "id,path,mos,width,height,num_frames\na,a,1,1,1,1\n";
        assert!(DatasetManifest::from_csv_reader(header.as_bytes()).is_err());
    }

    #[test]
    fn ratios() {
        let r = reduction_ratio(VolumeShape::new(208, 540, 960), VolumeShape::new(10, 160, 160)).unwrap();
        assert_eq!(r.rounded(), "99.76");
        assert_eq!(r.truncated(), "99.76");
        let r = reduction_ratio(VolumeShape::new(337, 540, 960), VolumeShape::new(16, 160, 160)).unwrap();
        assert_eq!(r.rounded(), "99.77");
        let same = VolumeShape::new(3, 4, 5);
        let r = reduction_ratio(same, same).unwrap();
        assert_eq!((r.percent, r.rounded(), r.truncated()), (0.0, "0.00".into(), "0.00".into()));
        assert!(reduction_ratio(VolumeShape::new(0, 1, 1), same).is_err());
    }

    #[test]
    fn bundled_fixture() {
        let s = summarize_reductions(&parse_reduction_cases(REDUCTION_FIXTURE).unwrap()).unwrap();
        assert_eq!(s.rows.len(), 6);
        for r in &s.rows {
            assert!((r.ratio.percent - r.case.reported.unwrap()).abs() <= 0.01, "{}", r.case.dataset);
        }
        assert_eq!(s.headline(), "99.83");
    }

    #[test]
    fn averaging() {
        let mk = |s: f64| CorrelationResult {
            plcc_raw: s,
            plcc_mapped: s,
            srcc: s,
            params: crate::metrics::LogisticParams { tau1: 1.0, tau2: 0.0, tau3: 0.0, tau4: 1.0 },
            n: 10,
        };
        let one = average_reports(vec![mk(0.42)]).unwrap();
        assert_eq!((one.mean_srcc, one.mean_plcc_mapped), (0.42, 0.42));
        let three = average_reports(vec![mk(0.6), mk(0.7), mk(0.8)]).unwrap();
        assert!((three.mean_srcc - 0.7).abs() < 1e-12);
        let permuted = average_reports(vec![mk(0.8), mk(0.6), mk(0.7)]).unwrap();
        assert_eq!(permuted.mean_srcc, three.mean_srcc);
        assert!(average_reports(vec![]).is_err());
    }

    fn small_corpus() -> BlurCorpus {
        BlurCorpus { videos: 25, frames: 12, width: 96, height: 96, ..BlurCorpus::default() }
    }

    fn small_cfg(mode: ShuffleMode, pooling: PoolingMode) -> ExperimentConfig {
        ExperimentConfig {
            squeeze: SqueezeConfig {
                temporal: TemporalConfig::tsm().with_segments(4),
                spatial: SpatialScheme::custom(3, 24).unwrap(),
                align_patches: false,
            },
            pooling,
            mode,
            regressor: RegressorConfig::default(),
            split: SplitSpec { base_seed: 5, ..SplitSpec::default() },
        }
    }

    #[test]
    fn pooled_modes_are_identical() {
        let corpus = small_corpus();
        let (manifest, loader) = blur_corpus(&corpus);
        let reports: Vec<EvalReport> = ShuffleMode::ALL
            .iter()
            .map(|&m| run_experiment(&manifest, &loader, &small_cfg(m, PoolingMode::Pooled)).unwrap())
            .collect();
        for r in &reports[1..] {
            assert_eq!(r.rounds, reports[0].rounds);
            assert_eq!(r.mean_srcc.to_bits(), reports[0].mean_srcc.to_bits());
        }
    }

    #[test]
    fn sequence_mode_runs() {
        let (manifest, loader) = blur_corpus(&small_corpus());
        let r = run_experiment(&manifest, &loader, &small_cfg(ShuffleMode::Ss, PoolingMode::Sequence)).unwrap();
        assert_eq!(r.rounds.len(), 3);
        assert_eq!(r.split_sizes, vec![[15, 5, 5]; 3]);
    }

    #[test]
    fn sequence_mode_needs_common_keyframe_count() {
        let (manifest, _) = blur_corpus(&small_corpus());
        let corpus = small_corpus();
        let ragged = move |e: &ManifestEntry| {
            let v = crate::synthetic::render_entry(&corpus, e)?;
            let keep = if e.video_id.ends_with('3') { 13 } else { 12 };
            let mut frames = v.frames().to_vec();
            frames.resize(keep, frames[0].clone());
            VideoSequence::new(e.video_id.clone(), frames)
        };
        let mut cfg = small_cfg(ShuffleMode::Oo, PoolingMode::Sequence);
        cfg.squeeze.temporal = TemporalConfig::eco().with_segments(4);
        let err = run_experiment(&manifest, &ragged, &cfg).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)), "{err}");
    }

    #[test]
    fn perfect_predictions_score_one() {
        let mos: Vec<f64> = (0..12).map(|i| 1.0 + i as f64 * 0.3).collect();
        let r = plcc_mapped(&mos, &mos).unwrap();
        assert!((r.plcc_mapped - 1.0).abs() < 1e-12);
        assert_eq!(r.srcc, 1.0);
    }

    #[test]
    fn load_errors_carry_video_id() {
        let m = DatasetManifest::new(entries(6)).unwrap();
        let loader = FileLoader { base_dir: PathBuf::from("/nonexistent") };
        let err = run_experiment(&m, &loader, &small_cfg(ShuffleMode::Oo, PoolingMode::Pooled)).unwrap_err();
        assert!(matches!(err, Error::Video { .. }), "{err}");
    }
}
