//! Full-test checkpoint probe: trains one scenario and reports exact test
//! accuracies (all four sets) plus the confusion matrix at checkpoints.

use cuesel::bitmap::IMAGE_CELLS;
use cuesel::dataset::{build_dataset_with_sigma, split, DatasetKind, SampleRecord, CLASS_COUNT};
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

fn eval_full(
    params: &NetworkParameters<f32>,
    set: &Prepared,
    ws: &mut Workspace<f32>,
) -> (f64, f64, [[u32; 3]; 3]) {
    let mut confusion = [[0u32; 3]; 3];
    let mut loss_sum = 0.0f64;
    let n = set.rows.len();
    for start in (0..n).step_by(250) {
        let end = (start + 250).min(n);
        let rows: Vec<&[u16]> = set.rows[start..end].iter().map(|r| r.as_slice()).collect();
        let probs = params.forward_into(InputBatch::Binary { rows: &rows, dim: IMAGE_CELLS }, ws);
        let labels = &set.labels[start..end];
        loss_sum += cross_entropy_mean(probs, labels, CLASS_COUNT) * (end - start) as f64;
        for (b, &label) in labels.iter().enumerate() {
            confusion[label as usize][argmax(&probs[b * 3..b * 3 + 3])] += 1;
        }
    }
    let correct: u32 = (0..3).map(|c| confusion[c][c]).sum();
    (loss_sum / n as f64, correct as f64 / n as f64 * 100.0, confusion)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).and_then(|s| DatasetKind::from_name(s)).unwrap();
    let max_epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let width: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(100);
    let sigma: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(5.0);
    let every: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(50);

    let splits: Vec<_> = DatasetKind::ALL
        .iter()
        .map(|&k| {
            split(
                build_dataset_with_sigma(k, 100 + k as u64, sigma).unwrap(),
                200 + k as u64,
            )
        })
        .collect();
    let train_split = splits.iter().find(|s| s.kind == kind).unwrap();
    let train_set = prepare(&train_split.train);
    let test_sets: Vec<Prepared> = splits.iter().map(|s| prepare(&s.test)).collect();

    let config = NetworkConfig::image_classifier(1, width);
    let mut params = NetworkParameters::<f32>::init(&config, &mut RngStream::new(seed, 1));
    let mut shuffle_rng = RngStream::new(seed, 2);
    let mut grads = NetworkParameters::zeros(&config);
    let mut ws = Workspace::new(&config, 32);
    let mut eval_ws = Workspace::new(&config, 250);
    let n = train_set.rows.len();
    let mut order: Vec<u32> = (0..n as u32).collect();

    eprintln!("kind={} width={width} seed={seed} sigma={sigma}", kind.name());
    println!("epoch\ttrain_loss\tbc_acc\tsy_acc\tpa_acc\tdi_acc\tbc_loss\tsy_loss\tpa_loss\tdi_loss");
    for epoch in 1..=max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(32) {
            let rows: Vec<&[u16]> =
                chunk.iter().map(|&i| train_set.rows[i as usize].as_slice()).collect();
            let labels: Vec<u8> = chunk.iter().map(|&i| train_set.labels[i as usize]).collect();
            let input = InputBatch::Binary { rows: &rows, dim: IMAGE_CELLS };
            let probs = params.forward_into(input, &mut ws);
            loss_sum += cross_entropy_mean(probs, &labels, CLASS_COUNT) * chunk.len() as f64;
            params.backward_into(input, &mut ws, &labels, &mut grads);
            params.sgd_step(&grads, 1e-3);
        }
        if epoch % every == 0 || epoch == max_epochs {
            let mut accs = Vec::new();
            let mut losses = Vec::new();
            let mut own_confusion = [[0u32; 3]; 3];
            for (i, set) in test_sets.iter().enumerate() {
                let (loss, acc, confusion) = eval_full(&params, set, &mut eval_ws);
                if DatasetKind::ALL[i] == kind {
                    own_confusion = confusion;
                }
                accs.push(acc);
                losses.push(loss);
            }
            println!(
                "{}\t{:.6}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                epoch,
                loss_sum / n as f64,
                accs[0],
                accs[1],
                accs[2],
                accs[3],
                losses[0],
                losses[1],
                losses[2],
                losses[3]
            );
            if epoch == max_epochs {
                eprintln!("own-test confusion at {epoch}: {own_confusion:?}");
            }
        }
    }
}
