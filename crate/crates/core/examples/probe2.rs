//! Epoch-resolved diagnostics: train with a hand-rolled loop, tracking
//! train loss plus per-test-set loss/accuracy over time.

use cuesel::bitmap::IMAGE_CELLS;
use cuesel::dataset::{build_dataset, split, DatasetKind, SampleRecord, CLASS_COUNT};
use cuesel::mlp::{
    argmax, cross_entropy_mean, InputBatch, NetworkConfig, NetworkParameters, Workspace,
};
use cuesel::rng::RngStream;

struct Prepared {
    rows: Vec<Vec<u16>>,
    labels: Vec<u8>,
}

fn prepare(samples: &[SampleRecord]) -> Prepared {
    Prepared {
        rows: samples.iter().map(|s| s.bitmap.on_indices()).collect(),
        labels: samples.iter().map(|s| s.label.index() as u8).collect(),
    }
}

fn eval_set(params: &NetworkParameters<f32>, set: &Prepared, ws: &mut Workspace<f32>) -> (f64, f64) {
    let mut correct = 0usize;
    let mut loss_sum = 0.0f64;
    let n = set.rows.len();
    for start in (0..n).step_by(250) {
        let end = (start + 250).min(n);
        let rows: Vec<&[u16]> = set.rows[start..end].iter().map(|r| r.as_slice()).collect();
        let probs = params.forward_into(InputBatch::Binary { rows: &rows, dim: IMAGE_CELLS }, ws);
        let labels = &set.labels[start..end];
        loss_sum += cross_entropy_mean(probs, labels, CLASS_COUNT) * (end - start) as f64;
        for (b, &label) in labels.iter().enumerate() {
            if argmax(&probs[b * 3..b * 3 + 3]) == label as usize {
                correct += 1;
            }
        }
    }
    (loss_sum / n as f64, correct as f64 / n as f64 * 100.0)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).and_then(|s| DatasetKind::from_name(s)).unwrap();
    let max_epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let width: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(100);
    let every: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(5);

    let splits: Vec<_> = DatasetKind::ALL
        .iter()
        .map(|&k| split(build_dataset(k, 100 + k as u64).unwrap(), 200 + k as u64))
        .collect();
    let train_split = splits.iter().find(|s| s.kind == kind).unwrap();
    let train_set = prepare(&train_split.train);
    // 2500-sample test prefixes keep the tracking cheap.
    let test_sets: Vec<Prepared> = splits.iter().map(|s| prepare(&s.test[..2500])).collect();

    let config = NetworkConfig::image_classifier(1, width);
    let mut params = NetworkParameters::<f32>::init(&config, &mut RngStream::new(seed, 1));
    let mut shuffle_rng = RngStream::new(seed, 2);
    let mut grads = NetworkParameters::zeros(&config);
    let mut ws = Workspace::new(&config, 32);
    let mut eval_ws = Workspace::new(&config, 250);
    let n = train_set.rows.len();
    let mut order: Vec<u32> = (0..n as u32).collect();

    println!("epoch\ttrain_loss\tbc_loss\tbc_acc\tsy_loss\tsy_acc\tpa_loss\tpa_acc\tdi_loss\tdi_acc");
    for epoch in 1..=max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(32) {
            let rows: Vec<&[u16]> = chunk.iter().map(|&i| train_set.rows[i as usize].as_slice()).collect();
            let labels: Vec<u8> = chunk.iter().map(|&i| train_set.labels[i as usize]).collect();
            let input = InputBatch::Binary { rows: &rows, dim: IMAGE_CELLS };
            let probs = params.forward_into(input, &mut ws);
            loss_sum += cross_entropy_mean(probs, &labels, CLASS_COUNT) * chunk.len() as f64;
            params.backward_into(input, &mut ws, &labels, &mut grads);
            params.sgd_step(&grads, 1e-3);
        }
        if epoch % every == 0 || epoch == 1 {
            let mut line = format!("{}\t{:.6}", epoch, loss_sum / n as f64);
            for set in &test_sets {
                let (loss, acc) = eval_set(&params, set, &mut eval_ws);
                line.push_str(&format!("\t{loss:.6}\t{acc:.2}"));
            }
            println!("{line}");
        }
    }
}
