//! Minibatch SGD training with early stopping.
//!
//! One epoch is a full pass over the shuffled training set in batches of
//! `batch_size` (the final partial batch included). Early stopping watches
//! the mean training loss per epoch: when no epoch improves on the best
//! seen loss by more than `min_delta` for `patience` consecutive epochs,
//! training stops and the parameters of the best epoch are restored. The
//! best parameters are also restored when the epoch cap is reached.

use std::time::Instant;

use crate::bitmap::IMAGE_CELLS;
use crate::dataset::{SampleRecord, CLASS_COUNT};
use crate::mlp::{
    cross_entropy_mean, InputBatch, MlpError, NetworkConfig, NetworkParameters, Workspace,
};
use crate::rng::RngStream;

// Stream ids for the two RNG consumers derived from one training seed.
const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;

/// Optimizer and stopping knobs. Defaults: batches of 32, learning rate
/// 1e-3, at most 1000 epochs, patience 20, min-delta 1e-4.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 1e-3,
            max_epochs: 1000,
            patience: 20,
            min_delta: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if self.max_epochs == 0 {
            return Err(TrainError::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(TrainError::InvalidConfig("patience must be >= 1".into()));
        }
        if self.min_delta < 0.0 {
            return Err(TrainError::InvalidConfig("min_delta must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    EarlyStopped,
    MaxEpochs,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::EarlyStopped => "early-stopped",
            StopReason::MaxEpochs => "max-epochs",
        }
    }
}

/// What happened during one training run.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean training loss of each epoch, `epochs_run` entries.
    pub epoch_losses: Vec<f64>,
    pub stop_reason: StopReason,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }

    pub fn best_loss(&self) -> f64 {
        self.epoch_losses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Delimited export: one `epoch<TAB>mean_loss` line per epoch.
    pub fn write_epoch_log(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "epoch\tmean_loss")?;
        for (epoch, loss) in self.epoch_losses.iter().enumerate() {
            writeln!(out, "{}\t{}", epoch + 1, loss)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("cannot train on an empty sample set")]
    EmptySet,
    #[error("training diverged at epoch {epoch}: mean batch loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

/// Train a fresh network on `samples`.
///
/// Initialization and per-epoch shuffling use independent streams derived
/// from `config.seed`, so a `(samples, net_config, train_config)` triple
/// reproduces the returned parameters bit for bit.
pub fn train(
    samples: &[SampleRecord],
    net_config: &NetworkConfig,
    config: &TrainConfig,
) -> Result<(NetworkParameters<f32>, TrainReport), TrainError> {
    config.validate()?;
    net_config.validate()?;
    if samples.is_empty() {
        return Err(TrainError::EmptySet);
    }
    if net_config.input_dim != IMAGE_CELLS {
        return Err(TrainError::from(MlpError::DimensionMismatch {
            expected: IMAGE_CELLS,
            actual: net_config.input_dim,
        }));
    }
    if net_config.output_dim != CLASS_COUNT {
        return Err(TrainError::InvalidConfig(format!(
            "output_dim must be {CLASS_COUNT} for class-labeled samples"
        )));
    }

    let started = Instant::now();
    let rows: Vec<Vec<u16>> = samples.iter().map(|s| s.bitmap.on_indices()).collect();
    let labels: Vec<u8> = samples.iter().map(|s| s.label.index() as u8).collect();
    let n = rows.len();

    let mut params =
        NetworkParameters::<f32>::init(net_config, &mut RngStream::new(config.seed, STREAM_INIT));
    let mut shuffle_rng = RngStream::new(config.seed, STREAM_SHUFFLE);
    let mut grads = NetworkParameters::zeros(net_config);
    let mut ws = Workspace::new(net_config, config.batch_size);
    let lr = config.learning_rate as f32;

    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut batch_rows: Vec<&[u16]> = Vec::with_capacity(config.batch_size);
    let mut batch_labels: Vec<u8> = Vec::with_capacity(config.batch_size);

    let mut best_loss = f64::INFINITY;
    let mut best_params = params.clone();
    let mut wait = 0usize;
    let mut epoch_losses = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(config.batch_size) {
            batch_rows.clear();
            batch_labels.clear();
            for &i in chunk {
                batch_rows.push(rows[i as usize].as_slice());
                batch_labels.push(labels[i as usize]);
            }
            let input = InputBatch::Binary {
                rows: &batch_rows,
                dim: IMAGE_CELLS,
            };
            let probs = params.forward_into(input, &mut ws);
            let batch_loss = cross_entropy_mean(probs, &batch_labels, CLASS_COUNT);
            if !batch_loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    loss: batch_loss,
                });
            }
            loss_sum += batch_loss * chunk.len() as f64;
            params.backward_into(input, &mut ws, &batch_labels, &mut grads);
            params.sgd_step(&grads, lr);
        }
        let epoch_loss = loss_sum / n as f64;
        epoch_losses.push(epoch_loss);

        // The first epoch always becomes the baseline; afterwards an epoch
        // only counts as improvement when it beats the best by min_delta.
        if best_loss.is_infinite() || epoch_loss < best_loss - config.min_delta {
            best_loss = epoch_loss;
            best_params.clone_from(&params);
            wait = 0;
        } else {
            wait += 1;
            if wait >= config.patience {
                stop_reason = StopReason::EarlyStopped;
                break;
            }
        }
    }

    let report = TrainReport {
        epochs_run: epoch_losses.len(),
        epoch_losses,
        stop_reason,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((best_params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_sample, ClassLabel, DatasetKind};

    fn toy_samples(count: u32) -> Vec<SampleRecord> {
        (0..count)
            .map(|i| {
                let label = ClassLabel::from_index(i as usize % 3).unwrap();
                let mut rng = RngStream::new(1000, i as u64);
                make_sample(DatasetKind::Pattern, label, false, i, &mut rng).unwrap()
            })
            .collect()
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { learning_rate: f64::NAN, ..TrainConfig::default() },
            TrainConfig { max_epochs: 0, ..TrainConfig::default() },
            TrainConfig { patience: 0, ..TrainConfig::default() },
            TrainConfig { min_delta: -1.0, ..TrainConfig::default() },
        ];
        for config in bad {
            assert!(config.validate().is_err(), "{config:?}");
        }
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn defaults_match_protocol() {
        let config = TrainConfig::default();
        assert_eq!(config.batch_size, 32);
        assert_eq!(config.learning_rate, 1e-3);
        assert_eq!(config.max_epochs, 1000);
    }

    #[test]
    fn empty_set_is_rejected() {
        let err = train(
            &[],
            &NetworkConfig::image_classifier(1, 4),
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::EmptySet));
    }

    #[test]
    fn infinite_min_delta_stops_after_two_epochs() {
        let samples = toy_samples(12);
        let config = TrainConfig {
            patience: 1,
            min_delta: f64::INFINITY,
            seed: 3,
            ..TrainConfig::default()
        };
        let (_, report) = train(&samples, &NetworkConfig::image_classifier(1, 4), &config).unwrap();
        assert_eq!(report.epochs_run, 2);
        assert_eq!(report.stop_reason, StopReason::EarlyStopped);
    }

    #[test]
    fn max_epochs_bounds_the_run() {
        let samples = toy_samples(12);
        let config = TrainConfig {
            max_epochs: 5,
            seed: 3,
            ..TrainConfig::default()
        };
        let (_, report) = train(&samples, &NetworkConfig::image_classifier(1, 4), &config).unwrap();
        assert_eq!(report.epochs_run, 5);
        assert_eq!(report.stop_reason, StopReason::MaxEpochs);
        assert_eq!(report.epoch_losses.len(), 5);
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let samples = toy_samples(30);
        let config = TrainConfig {
            max_epochs: 8,
            seed: 42,
            ..TrainConfig::default()
        };
        let net = NetworkConfig::image_classifier(1, 6);
        let (p1, r1) = train(&samples, &net, &config).unwrap();
        let (p2, r2) = train(&samples, &net, &config).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r1.epoch_losses, r2.epoch_losses);

        let other = TrainConfig { seed: 43, ..config };
        let (p3, _) = train(&samples, &net, &other).unwrap();
        assert_ne!(p1, p3);
    }

    #[test]
    fn loss_decreases_on_a_learnable_set() {
        let samples = toy_samples(60);
        let config = TrainConfig {
            max_epochs: 30,
            learning_rate: 0.05,
            seed: 7,
            ..TrainConfig::default()
        };
        let (_, report) = train(&samples, &NetworkConfig::image_classifier(1, 8), &config).unwrap();
        assert!(report.final_loss() < report.epoch_losses[0]);
    }

    #[test]
    fn epoch_log_is_delimited_text() {
        let samples = toy_samples(9);
        let config = TrainConfig {
            max_epochs: 3,
            seed: 1,
            ..TrainConfig::default()
        };
        let (_, report) = train(&samples, &NetworkConfig::image_classifier(1, 4), &config).unwrap();
        let mut buf = Vec::new();
        report.write_epoch_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epoch\tmean_loss");
        assert_eq!(lines.len(), 1 + report.epochs_run);
        assert!(lines[1].starts_with("1\t"));
    }
}
