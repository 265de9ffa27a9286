//! Dataset persistence: a human-readable JSON manifest next to a packed
//! binary payload.
//!
//! `<base>.bin` layout: the magic bytes `CUEDS1`, then one 116-byte record
//! per sample in ascending sample order: 113 bitmap bytes (900 bits,
//! row-major, LSB-first, zero-padded), 1 label byte (0/1/2), 1 distorted
//! flag byte (0/1), 1 effective-pattern code (0=uniform, 1=centered,
//! 2=cornered, 255=none). `<base>.manifest.json` carries kind, seeds,
//! counts, split sizes, the format version, and the 64-bit FNV-1a checksum
//! of the whole payload file.
//!
//! The payload stores samples in generation order regardless of the split;
//! loading re-derives the split from the recorded split seed, which makes
//! the round trip exact while keeping the binary format split-agnostic.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bitmap::{Bitmap, BITMAP_BYTES};
use crate::checksum::Fnv1a64;
use crate::cue::PatternDistribution;
use crate::dataset::{
    split_records, ClassLabel, DatasetKind, DatasetManifest, SampleRecord, SplitDataset,
    CLASS_COUNT,
};

pub const DATASET_MAGIC: &[u8; 6] = b"CUEDS1";
pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const RECORD_BYTES: usize = BITMAP_BYTES + 3;

const PATTERN_CODE_NONE: u8 = 255;

#[derive(Debug, thiserror::Error)]
pub enum DataFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid manifest: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("payload does not start with the CUEDS1 magic")]
    BadMagic,
    #[error("unsupported dataset format version {found} (supported: {DATASET_FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("payload length mismatch: expected {expected} bytes, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("payload checksum mismatch: manifest says {expected:016x}, payload hashes to {actual:016x}")]
    ChecksumMismatch { expected: u64, actual: u64 },
    #[error("unknown dataset kind {0:?}")]
    UnknownKind(String),
    #[error("corrupt dataset: {0}")]
    Corrupt(String),
}

/// The on-disk manifest document.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FileManifest {
    pub format_version: u32,
    pub kind: String,
    pub dataset_seed: u64,
    pub split_seed: u64,
    pub total_samples: u32,
    pub class_counts: [u32; CLASS_COUNT],
    pub distorted_total: u32,
    pub distorted_per_class: [u32; CLASS_COUNT],
    pub train_len: u32,
    pub test_len: u32,
    /// 16 lowercase hex digits of the payload's FNV-1a hash.
    pub payload_checksum: String,
}

impl FileManifest {
    pub fn checksum_value(&self) -> Result<u64, DataFileError> {
        u64::from_str_radix(&self.payload_checksum, 16).map_err(|_| {
            DataFileError::Corrupt(format!(
                "payload_checksum {:?} is not a 64-bit hex value",
                self.payload_checksum
            ))
        })
    }
}

pub fn manifest_path(base: &Path) -> PathBuf {
    append_suffix(base, ".manifest.json")
}

pub fn payload_path(base: &Path) -> PathBuf {
    append_suffix(base, ".bin")
}

fn append_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut os = base.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

fn pattern_code(pattern: Option<PatternDistribution>) -> u8 {
    match pattern {
        None => PATTERN_CODE_NONE,
        Some(PatternDistribution::Uniform) => 0,
        Some(PatternDistribution::Centered) => 1,
        Some(PatternDistribution::Cornered) => 2,
    }
}

fn pattern_from_code(code: u8) -> Result<Option<PatternDistribution>, DataFileError> {
    match code {
        0 => Ok(Some(PatternDistribution::Uniform)),
        1 => Ok(Some(PatternDistribution::Centered)),
        2 => Ok(Some(PatternDistribution::Cornered)),
        PATTERN_CODE_NONE => Ok(None),
        other => Err(DataFileError::Corrupt(format!(
            "invalid pattern code {other}"
        ))),
    }
}

fn encode_record(rec: &SampleRecord, out: &mut Vec<u8>) {
    out.extend_from_slice(rec.bitmap.as_bytes());
    out.push(rec.label.index() as u8);
    out.push(u8::from(rec.distorted));
    out.push(pattern_code(rec.effective_pattern));
}

fn decode_record(bytes: &[u8], sample_index: u32) -> Result<SampleRecord, DataFileError> {
    debug_assert_eq!(bytes.len(), RECORD_BYTES);
    let mut bitmap_bytes = [0u8; BITMAP_BYTES];
    bitmap_bytes.copy_from_slice(&bytes[..BITMAP_BYTES]);
    let bitmap = Bitmap::from_bytes(bitmap_bytes).ok_or_else(|| {
        DataFileError::Corrupt(format!("sample {sample_index}: nonzero bitmap padding bits"))
    })?;
    let label = ClassLabel::from_index(bytes[BITMAP_BYTES] as usize).ok_or_else(|| {
        DataFileError::Corrupt(format!(
            "sample {sample_index}: invalid label byte {}",
            bytes[BITMAP_BYTES]
        ))
    })?;
    let distorted = match bytes[BITMAP_BYTES + 1] {
        0 => false,
        1 => true,
        other => {
            return Err(DataFileError::Corrupt(format!(
                "sample {sample_index}: invalid distorted flag {other}"
            )))
        }
    };
    let effective_pattern = pattern_from_code(bytes[BITMAP_BYTES + 2])?;
    Ok(SampleRecord {
        bitmap,
        label,
        distorted,
        effective_pattern,
        sample_index,
    })
}

/// Canonical payload hash: the magic followed by every record in ascending
/// sample order. `records` must already be ordered.
pub(crate) fn hash_records<'a>(records: impl Iterator<Item = &'a SampleRecord>) -> u64 {
    let mut hasher = Fnv1a64::new();
    hasher.update(DATASET_MAGIC);
    let mut buf = Vec::with_capacity(RECORD_BYTES);
    for rec in records {
        buf.clear();
        encode_record(rec, &mut buf);
        hasher.update(&buf);
    }
    hasher.finish()
}

/// Write `<base>.bin` and `<base>.manifest.json`.
pub fn save_dataset(split: &SplitDataset, base: &Path) -> Result<(), DataFileError> {
    let total = split.train.len() + split.test.len();
    let mut ordered: Vec<&SampleRecord> = split.train.iter().chain(split.test.iter()).collect();
    ordered.sort_unstable_by_key(|r| r.sample_index);
    for (pos, rec) in ordered.iter().enumerate() {
        if rec.sample_index as usize != pos {
            return Err(DataFileError::Corrupt(format!(
                "sample indices are not the contiguous range 0..{total}"
            )));
        }
    }

    let mut payload = Vec::with_capacity(DATASET_MAGIC.len() + total * RECORD_BYTES);
    payload.extend_from_slice(DATASET_MAGIC);
    for rec in &ordered {
        encode_record(rec, &mut payload);
    }
    let checksum = crate::checksum::fnv1a64(&payload);

    let manifest = FileManifest {
        format_version: DATASET_FORMAT_VERSION,
        kind: split.kind.name().to_string(),
        dataset_seed: split.dataset_seed,
        split_seed: split.split_seed,
        total_samples: total as u32,
        class_counts: split.manifest.class_counts,
        distorted_total: split.manifest.distorted_total(),
        distorted_per_class: split.manifest.distorted_per_class,
        train_len: split.train.len() as u32,
        test_len: split.test.len() as u32,
        payload_checksum: format!("{checksum:016x}"),
    };

    write_atomic(&payload_path(base), &payload)?;
    let manifest_json =
        serde_json::to_vec_pretty(&manifest).expect("manifest serialization cannot fail");
    write_atomic(&manifest_path(base), &manifest_json)?;
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataFileError> {
    let io_err = |source| DataFileError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let tmp = append_suffix(path, ".tmp");
    {
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(bytes).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

/// Read only `<base>.manifest.json`; the payload stays untouched.
pub fn read_manifest(base: &Path) -> Result<FileManifest, DataFileError> {
    let path = manifest_path(base);
    let bytes = fs::read(&path).map_err(|source| DataFileError::Io {
        path: path.clone(),
        source,
    })?;
    let manifest: FileManifest =
        serde_json::from_slice(&bytes).map_err(|source| DataFileError::Manifest {
            path: path.clone(),
            source,
        })?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(DataFileError::UnsupportedVersion {
            found: manifest.format_version,
        });
    }
    Ok(manifest)
}

/// Load and verify a dataset pair, re-deriving the train/test split.
pub fn load_dataset(base: &Path) -> Result<SplitDataset, DataFileError> {
    let manifest = read_manifest(base)?;
    let kind = DatasetKind::from_name(&manifest.kind)
        .ok_or_else(|| DataFileError::UnknownKind(manifest.kind.clone()))?;

    let bin = payload_path(base);
    let payload = fs::read(&bin).map_err(|source| DataFileError::Io {
        path: bin.clone(),
        source,
    })?;
    if payload.len() < DATASET_MAGIC.len() || &payload[..DATASET_MAGIC.len()] != DATASET_MAGIC {
        return Err(DataFileError::BadMagic);
    }
    let expected_len = DATASET_MAGIC.len() + manifest.total_samples as usize * RECORD_BYTES;
    if payload.len() != expected_len {
        return Err(DataFileError::LengthMismatch {
            expected: expected_len,
            actual: payload.len(),
        });
    }
    let expected_checksum = manifest.checksum_value()?;
    let actual_checksum = crate::checksum::fnv1a64(&payload);
    if actual_checksum != expected_checksum {
        return Err(DataFileError::ChecksumMismatch {
            expected: expected_checksum,
            actual: actual_checksum,
        });
    }

    let mut samples = Vec::with_capacity(manifest.total_samples as usize);
    for (pos, chunk) in payload[DATASET_MAGIC.len()..]
        .chunks_exact(RECORD_BYTES)
        .enumerate()
    {
        samples.push(decode_record(chunk, pos as u32)?);
    }
    validate_against_manifest(kind, &samples, &manifest)?;

    let summary = DatasetManifest {
        class_counts: manifest.class_counts,
        distorted_per_class: manifest.distorted_per_class,
        payload_checksum: actual_checksum,
    };
    let (train, test) = split_records(samples, manifest.split_seed);
    if train.len() != manifest.train_len as usize || test.len() != manifest.test_len as usize {
        return Err(DataFileError::Corrupt(format!(
            "split sizes {}/{} disagree with manifest {}/{}",
            train.len(),
            test.len(),
            manifest.train_len,
            manifest.test_len
        )));
    }
    Ok(SplitDataset {
        kind,
        dataset_seed: manifest.dataset_seed,
        split_seed: manifest.split_seed,
        train,
        test,
        manifest: summary,
    })
}

fn validate_against_manifest(
    kind: DatasetKind,
    samples: &[SampleRecord],
    manifest: &FileManifest,
) -> Result<(), DataFileError> {
    let derived = DatasetManifest::from_records(samples);
    if derived.class_counts != manifest.class_counts {
        return Err(DataFileError::Corrupt(format!(
            "class counts {:?} disagree with manifest {:?}",
            derived.class_counts, manifest.class_counts
        )));
    }
    if derived.distorted_per_class != manifest.distorted_per_class {
        return Err(DataFileError::Corrupt(format!(
            "distortion counts {:?} disagree with manifest {:?}",
            derived.distorted_per_class, manifest.distorted_per_class
        )));
    }
    for rec in samples {
        let idx = rec.sample_index;
        if rec.distorted && kind != DatasetKind::DistBothCues {
            return Err(DataFileError::Corrupt(format!(
                "sample {idx}: distorted flag in a {kind} dataset"
            )));
        }
        match (kind.has_pattern(), rec.effective_pattern) {
            (true, None) => {
                return Err(DataFileError::Corrupt(format!(
                    "sample {idx}: missing pattern code in a {kind} dataset"
                )))
            }
            (false, Some(_)) => {
                return Err(DataFileError::Corrupt(format!(
                    "sample {idx}: pattern code present in a {kind} dataset"
                )))
            }
            _ => {}
        }
        if let Some(eff) = rec.effective_pattern {
            let own = crate::dataset::class_spec(rec.label).distribution;
            if rec.distorted == (eff == own) {
                return Err(DataFileError::Corrupt(format!(
                    "sample {idx}: distorted flag disagrees with its pattern code"
                )));
            }
        }
    }
    Ok(())
}
