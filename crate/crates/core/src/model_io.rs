//! Trained-model persistence.
//!
//! `CUENN1` layout: the magic bytes, a `u32` count of layer widths, the
//! widths themselves (`u32` each, input first), then per layer the weight
//! block (`fan_in x fan_out` row-major `f32`) followed by the bias block
//! (`f32` per output), all little-endian, and finally the 64-bit FNV-1a
//! checksum of every preceding byte.

use std::fs;
use std::path::{Path, PathBuf};

use crate::checksum::fnv1a64;
use crate::mlp::{Layer, NetworkParameters};

pub const MODEL_MAGIC: &[u8; 6] = b"CUENN1";

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model file does not start with the CUENN1 magic")]
    BadMagic,
    #[error("model file checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("model file is truncated or has trailing bytes (expected {expected} bytes, found {actual})")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid model header: {0}")]
    BadHeader(String),
}

pub fn save_model(params: &NetworkParameters<f32>, path: &Path) -> Result<(), ModelFileError> {
    let dims: Vec<u32> = {
        let mut dims = vec![params.layers[0].fan_in as u32];
        dims.extend(params.layers.iter().map(|l| l.fan_out as u32));
        dims
    };

    let mut bytes = Vec::with_capacity(
        MODEL_MAGIC.len() + 4 + dims.len() * 4 + params.param_count() * 4 + 8,
    );
    bytes.extend_from_slice(MODEL_MAGIC);
    bytes.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for dim in &dims {
        bytes.extend_from_slice(&dim.to_le_bytes());
    }
    for layer in &params.layers {
        for w in &layer.weights {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        for b in &layer.bias {
            bytes.extend_from_slice(&b.to_le_bytes());
        }
    }
    let checksum = fnv1a64(&bytes);
    bytes.extend_from_slice(&checksum.to_le_bytes());

    let io_err = |source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn load_model(path: &Path) -> Result<NetworkParameters<f32>, ModelFileError> {
    let bytes = fs::read(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < MODEL_MAGIC.len() + 4 + 8 {
        return Err(ModelFileError::LengthMismatch {
            expected: MODEL_MAGIC.len() + 4 + 8,
            actual: bytes.len(),
        });
    }
    if &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
        return Err(ModelFileError::BadMagic);
    }

    let body_len = bytes.len() - 8;
    let stored = u64::from_le_bytes(bytes[body_len..].try_into().unwrap());
    let computed = fnv1a64(&bytes[..body_len]);
    if stored != computed {
        return Err(ModelFileError::ChecksumMismatch { stored, computed });
    }

    let mut cursor = MODEL_MAGIC.len();
    let dim_count = u32::from_le_bytes(bytes[cursor..cursor + 4].try_into().unwrap()) as usize;
    cursor += 4;
    if dim_count < 2 {
        return Err(ModelFileError::BadHeader(format!(
            "need at least 2 layer widths, found {dim_count}"
        )));
    }
    if body_len < cursor + dim_count * 4 {
        return Err(ModelFileError::LengthMismatch {
            expected: cursor + dim_count * 4 + 8,
            actual: bytes.len(),
        });
    }
    let mut dims = Vec::with_capacity(dim_count);
    for _ in 0..dim_count {
        let dim = u32::from_le_bytes(bytes[cursor..cursor + 4].try_into().unwrap()) as usize;
        cursor += 4;
        if dim == 0 {
            return Err(ModelFileError::BadHeader("zero layer width".into()));
        }
        dims.push(dim);
    }

    let param_count: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let expected = cursor + param_count * 4 + 8;
    if bytes.len() != expected {
        return Err(ModelFileError::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }

    let read_f32 = |cursor: &mut usize| {
        let v = f32::from_le_bytes(bytes[*cursor..*cursor + 4].try_into().unwrap());
        *cursor += 4;
        v
    };
    let mut layers = Vec::with_capacity(dim_count - 1);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let mut weights = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in * fan_out {
            weights.push(read_f32(&mut cursor));
        }
        let mut bias = Vec::with_capacity(fan_out);
        for _ in 0..fan_out {
            bias.push(read_f32(&mut cursor));
        }
        layers.push(Layer {
            fan_in,
            fan_out,
            weights,
            bias,
        });
    }
    Ok(NetworkParameters { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::NetworkConfig;
    use crate::rng::RngStream;

    fn sample_params() -> NetworkParameters<f32> {
        NetworkParameters::init(
            &NetworkConfig::new(12, vec![7, 5], 3),
            &mut RngStream::new(99, 0),
        )
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.model");
        let params = sample_params();
        save_model(&params, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, params);
    }

    #[test]
    fn corrupted_byte_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.model");
        save_model(&sample_params(), &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x80;
        fs::write(&path, &bytes).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, ModelFileError::ChecksumMismatch { .. }));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.model");
        fs::write(&path, b"NOTNN1aaaaaaaaaaaaaaaaaa").unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, ModelFileError::BadMagic));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.model");
        save_model(&sample_params(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 12]).unwrap();
        let err = load_model(&path).unwrap_err();
        // Dropping trailing bytes removes the checksum, so either length or
        // checksum validation may fire first depending on what remains.
        assert!(matches!(
            err,
            ModelFileError::LengthMismatch { .. } | ModelFileError::ChecksumMismatch { .. }
        ));
    }
}
