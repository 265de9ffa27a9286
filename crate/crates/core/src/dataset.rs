//! Assembly of the four labeled datasets.
//!
//! Each dataset holds 30,000 images, 10,000 per class. The four kinds
//! differ only in which cues their images carry: both cues, symbols only,
//! patterns only, or both cues with 23% of samples given a wrong-class
//! pattern (the symbols always match the label; only the pattern is
//! distorted).

use crate::bitmap::Bitmap;
use crate::cue::{
    self, CueError, Glyph, PatternDistribution, CUE_PIXELS, DEFAULT_PATTERN_SIGMA,
    SYMBOLS_PER_IMAGE,
};
use crate::dataset_io;
use crate::rng::RngStream;

pub const CLASS_COUNT: usize = 3;
pub const SAMPLES_PER_CLASS: usize = 10_000;
pub const DATASET_SIZE: usize = CLASS_COUNT * SAMPLES_PER_CLASS;
pub const DISTORTED_PER_CLASS: usize = 2_300;
pub const DISTORTED_TOTAL: usize = CLASS_COUNT * DISTORTED_PER_CLASS;

// Stream ids below 2^32 address individual samples within a dataset seed;
// auxiliary streams live at 2^40 and above.
const STREAM_DISTORT_BASE: u64 = 1 << 40;
const STREAM_SPLIT: u64 = (1 << 40) + 16;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("distorted samples exist only in the dist-both-cues dataset (got {0})")]
    DistortedKind(DatasetKind),
    #[error(transparent)]
    Cue(#[from] CueError),
}

/// The three sample classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    I,
    II,
    III,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; CLASS_COUNT] = [ClassLabel::I, ClassLabel::II, ClassLabel::III];

    /// One-hot / byte-encoding index: I=0, II=1, III=2.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::I => 0,
            ClassLabel::II => 1,
            ClassLabel::III => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<ClassLabel> {
        ClassLabel::ALL.get(index).copied()
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassLabel::I => "I",
            ClassLabel::II => "II",
            ClassLabel::III => "III",
        })
    }
}

/// Class -> (pattern distribution, glyph multiset) assignment.
#[derive(Clone, Copy, Debug)]
pub struct ClassSpec {
    pub label: ClassLabel,
    pub distribution: PatternDistribution,
    pub glyphs: [Glyph; SYMBOLS_PER_IMAGE],
}

/// The fixed class composition: I = (uniform, +xx), II = (centered, ++x),
/// III = (cornered, +++).
pub fn class_spec(label: ClassLabel) -> ClassSpec {
    use Glyph::{Cross, Plus};
    use PatternDistribution::{Centered, Cornered, Uniform};
    let (distribution, glyphs) = match label {
        ClassLabel::I => (Uniform, [Plus, Cross, Cross]),
        ClassLabel::II => (Centered, [Plus, Plus, Cross]),
        ClassLabel::III => (Cornered, [Plus, Plus, Plus]),
    };
    ClassSpec {
        label,
        distribution,
        glyphs,
    }
}

/// Pick one of the two distributions that do NOT belong to `label`, each
/// with probability 1/2.
pub fn distorted_pattern(label: ClassLabel, rng: &mut RngStream) -> PatternDistribution {
    let own = class_spec(label).distribution;
    let others: Vec<PatternDistribution> = PatternDistribution::ALL
        .into_iter()
        .filter(|&d| d != own)
        .collect();
    others[rng.next_below(others.len() as u64) as usize]
}

/// The four dataset kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DatasetKind {
    BothCues,
    Symbol,
    Pattern,
    DistBothCues,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [
        DatasetKind::BothCues,
        DatasetKind::Symbol,
        DatasetKind::Pattern,
        DatasetKind::DistBothCues,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::BothCues => "both-cues",
            DatasetKind::Symbol => "symbol",
            DatasetKind::Pattern => "pattern",
            DatasetKind::DistBothCues => "dist-both-cues",
        }
    }

    pub fn from_name(name: &str) -> Option<DatasetKind> {
        DatasetKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn has_symbols(self) -> bool {
        !matches!(self, DatasetKind::Pattern)
    }

    pub fn has_pattern(self) -> bool {
        !matches!(self, DatasetKind::Symbol)
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One labeled image plus its generation provenance.
#[derive(Clone, Debug)]
pub struct SampleRecord {
    pub bitmap: Bitmap,
    pub label: ClassLabel,
    /// True when this sample carries a wrong-class pattern.
    pub distorted: bool,
    /// The distribution the pattern cells were actually drawn from;
    /// `None` for symbol-only samples.
    pub effective_pattern: Option<PatternDistribution>,
    /// Position in the generated dataset, also the sample's RNG stream id.
    pub sample_index: u32,
}

/// Per-dataset counts plus the canonical payload checksum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub class_counts: [u32; CLASS_COUNT],
    pub distorted_per_class: [u32; CLASS_COUNT],
    pub payload_checksum: u64,
}

impl DatasetManifest {
    pub fn distorted_total(&self) -> u32 {
        self.distorted_per_class.iter().sum()
    }

    pub(crate) fn from_records(records: &[SampleRecord]) -> DatasetManifest {
        let mut class_counts = [0u32; CLASS_COUNT];
        let mut distorted_per_class = [0u32; CLASS_COUNT];
        for rec in records {
            class_counts[rec.label.index()] += 1;
            if rec.distorted {
                distorted_per_class[rec.label.index()] += 1;
            }
        }
        DatasetManifest {
            class_counts,
            distorted_per_class,
            payload_checksum: dataset_io::hash_records(records.iter()),
        }
    }
}

/// A full 30,000-sample dataset in generation order.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub seed: u64,
    pub samples: Vec<SampleRecord>,
    pub manifest: DatasetManifest,
}

/// A dataset partitioned into 75% train / 25% test, stratified by class.
#[derive(Clone, Debug)]
pub struct SplitDataset {
    pub kind: DatasetKind,
    pub dataset_seed: u64,
    pub split_seed: u64,
    pub train: Vec<SampleRecord>,
    pub test: Vec<SampleRecord>,
    pub manifest: DatasetManifest,
}

/// Generate one sample with the default pattern kernel width.
///
/// Draw order from `rng` is fixed: distorted-pattern choice (when
/// applicable), then symbol anchors, then pattern cells.
pub fn make_sample(
    kind: DatasetKind,
    label: ClassLabel,
    distorted: bool,
    sample_index: u32,
    rng: &mut RngStream,
) -> Result<SampleRecord, DatasetError> {
    make_sample_with_sigma(kind, label, distorted, sample_index, rng, DEFAULT_PATTERN_SIGMA)
}

/// As [`make_sample`], with an explicit pattern kernel width.
pub fn make_sample_with_sigma(
    kind: DatasetKind,
    label: ClassLabel,
    distorted: bool,
    sample_index: u32,
    rng: &mut RngStream,
    sigma: f64,
) -> Result<SampleRecord, DatasetError> {
    if distorted && kind != DatasetKind::DistBothCues {
        return Err(DatasetError::DistortedKind(kind));
    }
    let spec = class_spec(label);
    let effective_pattern = if !kind.has_pattern() {
        None
    } else if distorted {
        Some(distorted_pattern(label, rng))
    } else {
        Some(spec.distribution)
    };
    let placements = if kind.has_symbols() {
        cue::place_symbols(&spec.glyphs, rng)?
    } else {
        Vec::new()
    };
    let pattern = match effective_pattern {
        Some(dist) => {
            cue::sample_without_replacement(&cue::pattern_pmf_with_sigma(dist, sigma), CUE_PIXELS, rng)
        }
        None => Vec::new(),
    };
    Ok(SampleRecord {
        bitmap: cue::render(&placements, &pattern),
        label,
        distorted,
        effective_pattern,
        sample_index,
    })
}

/// Build a full dataset: 10,000 samples per class in class-major order,
/// each sample drawn from its own RNG stream (stream id = sample index).
/// For the distorted kind, exactly 2,300 samples per class are flagged,
/// chosen uniformly without replacement.
pub fn build_dataset(kind: DatasetKind, seed: u64) -> Result<Dataset, DatasetError> {
    build_dataset_with_sigma(kind, seed, DEFAULT_PATTERN_SIGMA)
}

/// As [`build_dataset`], with an explicit pattern kernel width.
pub fn build_dataset_with_sigma(
    kind: DatasetKind,
    seed: u64,
    sigma: f64,
) -> Result<Dataset, DatasetError> {
    let distorted_flags: Vec<Vec<bool>> = if kind == DatasetKind::DistBothCues {
        (0..CLASS_COUNT).map(|c| choose_distorted(seed, c)).collect()
    } else {
        vec![vec![false; SAMPLES_PER_CLASS]; CLASS_COUNT]
    };

    // The pmf is identical for every sample of a distribution; sampling
    // 30,000 x 27 cells dominates generation, so share the three tables.
    let pmfs: Vec<Vec<f64>> = PatternDistribution::ALL
        .iter()
        .map(|&d| cue::pattern_pmf_with_sigma(d, sigma))
        .collect();
    let pmf_of = |dist: PatternDistribution| {
        &pmfs[PatternDistribution::ALL.iter().position(|&d| d == dist).unwrap()]
    };

    let mut samples = Vec::with_capacity(DATASET_SIZE);
    for index in 0..DATASET_SIZE {
        let class = index / SAMPLES_PER_CLASS;
        let label = ClassLabel::from_index(class).unwrap();
        let distorted = distorted_flags[class][index % SAMPLES_PER_CLASS];
        let mut rng = RngStream::new(seed, index as u64);

        if distorted && kind != DatasetKind::DistBothCues {
            return Err(DatasetError::DistortedKind(kind));
        }
        let spec = class_spec(label);
        let effective_pattern = if !kind.has_pattern() {
            None
        } else if distorted {
            Some(distorted_pattern(label, &mut rng))
        } else {
            Some(spec.distribution)
        };
        let placements = if kind.has_symbols() {
            cue::place_symbols(&spec.glyphs, &mut rng)?
        } else {
            Vec::new()
        };
        let pattern = match effective_pattern {
            Some(dist) => cue::sample_without_replacement(pmf_of(dist), CUE_PIXELS, &mut rng),
            None => Vec::new(),
        };
        samples.push(SampleRecord {
            bitmap: cue::render(&placements, &pattern),
            label,
            distorted,
            effective_pattern,
            sample_index: index as u32,
        });
    }

    let manifest = DatasetManifest::from_records(&samples);
    Ok(Dataset {
        kind,
        seed,
        samples,
        manifest,
    })
}

fn choose_distorted(seed: u64, class_index: usize) -> Vec<bool> {
    let mut rng = RngStream::new(seed, STREAM_DISTORT_BASE + class_index as u64);
    let mut ids: Vec<u32> = (0..SAMPLES_PER_CLASS as u32).collect();
    // Partial Fisher-Yates: after k steps the first k entries are a
    // uniform k-subset in uniform order.
    for i in 0..DISTORTED_PER_CLASS {
        let j = i + rng.next_below((SAMPLES_PER_CLASS - i) as u64) as usize;
        ids.swap(i, j);
    }
    let mut flags = vec![false; SAMPLES_PER_CLASS];
    for &id in &ids[..DISTORTED_PER_CLASS] {
        flags[id as usize] = true;
    }
    flags
}

/// Stratified 75/25 split. Per class, records are shuffled and the first
/// three quarters go to the train side; the train side is then shuffled
/// as a whole, while the test side is kept in ascending sample order.
pub fn split(dataset: Dataset, split_seed: u64) -> SplitDataset {
    let Dataset {
        kind,
        seed,
        samples,
        manifest,
    } = dataset;
    let (train, test) = split_records(samples, split_seed);
    SplitDataset {
        kind,
        dataset_seed: seed,
        split_seed,
        train,
        test,
        manifest,
    }
}

pub(crate) fn split_records(
    samples: Vec<SampleRecord>,
    split_seed: u64,
) -> (Vec<SampleRecord>, Vec<SampleRecord>) {
    let mut rng = RngStream::new(split_seed, STREAM_SPLIT);
    let mut by_class: Vec<Vec<u32>> = vec![Vec::new(); CLASS_COUNT];
    for (pos, rec) in samples.iter().enumerate() {
        by_class[rec.label.index()].push(pos as u32);
    }

    let mut train_pos: Vec<u32> = Vec::new();
    let mut test_pos: Vec<u32> = Vec::new();
    for ids in &mut by_class {
        rng.shuffle(ids);
        let n_train = ids.len() * 3 / 4;
        train_pos.extend_from_slice(&ids[..n_train]);
        test_pos.extend_from_slice(&ids[n_train..]);
    }
    rng.shuffle(&mut train_pos);
    test_pos.sort_unstable();

    let mut slots: Vec<Option<SampleRecord>> = samples.into_iter().map(Some).collect();
    let mut take = |positions: &[u32]| -> Vec<SampleRecord> {
        positions
            .iter()
            .map(|&p| slots[p as usize].take().expect("position taken twice"))
            .collect()
    };
    let train = take(&train_pos);
    let test = take(&test_pos);
    (train, test)
}
