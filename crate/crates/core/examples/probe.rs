//! Scratch driver for timing and accuracy probes during development.

use cuesel::dataset::{build_dataset, split, DatasetKind};
use cuesel::mlp::{evaluate, NetworkConfig};
use cuesel::train::{train, TrainConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args
        .get(1)
        .and_then(|s| DatasetKind::from_name(s))
        .unwrap_or(DatasetKind::BothCues);
    let max_epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30);
    let width: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(100);

    eprintln!("building datasets...");
    let t0 = Instant::now();
    let splits: Vec<_> = DatasetKind::ALL
        .iter()
        .map(|&k| split(build_dataset(k, 100 + k as u64).unwrap(), 200 + k as u64))
        .collect();
    eprintln!("datasets built in {:.1}s", t0.elapsed().as_secs_f64());

    let train_split = splits.iter().find(|s| s.kind == kind).unwrap();
    let config = NetworkConfig::image_classifier(1, width);
    let train_config = TrainConfig {
        max_epochs,
        seed: 1,
        ..TrainConfig::default()
    };
    eprintln!("training on {} (1x{width}, up to {max_epochs} epochs)...", kind.name());
    let t1 = Instant::now();
    let (params, report) = train(&train_split.train, &config, &train_config).unwrap();
    let wall = t1.elapsed().as_secs_f64();
    eprintln!(
        "epochs={} stop={} wall={:.1}s ({:.3}s/epoch) final_loss={:.5} best_loss={:.5}",
        report.epochs_run,
        report.stop_reason.name(),
        wall,
        wall / report.epochs_run as f64,
        report.final_loss(),
        report.best_loss(),
    );
    for s in &splits {
        let eval = evaluate(&params, &s.test).unwrap();
        eprintln!("  test {:<15} acc = {:.2}%", s.kind.name(), eval.accuracy_percent());
    }
    if report.epochs_run >= 10 {
        let l = &report.epoch_losses;
        eprintln!(
            "loss curve: e1={:.4} e2={:.4} e5={:.4} e10={:.4} ... last={:.4}",
            l[0], l[1], l[4], l[9], l[l.len() - 1]
        );
    }
}
