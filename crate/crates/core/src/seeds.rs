//! Seed fan-out.
//!
//! A single master seed reproduces an entire experiment. Per run index it
//! derives a data base (shared by all scenarios of that run, so every
//! network of the run trains and evaluates against identical splits), and
//! per scenario a training seed covering initialization and shuffling.
//!
//! By default each run regenerates its own dataset realization; with
//! `fixed_data` the data base depends only on the master seed, so all runs
//! reuse one realization and vary only initialization and batch order.

use crate::dataset::DatasetKind;
use crate::rng::mix64;

const PURPOSE_RUN: u64 = 0x52554E;
const PURPOSE_DATA: u64 = 0x44415441;
const PURPOSE_KIND: u64 = 0x4B494E44;
const PURPOSE_SPLIT: u64 = 0x53504C54;
const PURPOSE_TRAIN: u64 = 0x5452414E;

fn kind_code(kind: DatasetKind) -> u64 {
    DatasetKind::ALL.iter().position(|&k| k == kind).unwrap() as u64
}

pub fn run_base(master_seed: u64, run_index: u32) -> u64 {
    mix64(master_seed ^ mix64(PURPOSE_RUN ^ u64::from(run_index)))
}

pub fn data_base(master_seed: u64, run_index: u32, fixed_data: bool) -> u64 {
    if fixed_data {
        mix64(master_seed ^ mix64(PURPOSE_DATA))
    } else {
        mix64(run_base(master_seed, run_index) ^ mix64(PURPOSE_DATA))
    }
}

pub fn dataset_seed(data_base: u64, kind: DatasetKind) -> u64 {
    mix64(data_base ^ mix64(PURPOSE_KIND ^ kind_code(kind)))
}

pub fn split_seed(data_base: u64, kind: DatasetKind) -> u64 {
    mix64(data_base ^ mix64(PURPOSE_SPLIT ^ kind_code(kind)))
}

/// Identifier of a (train kind, depth, width) scenario.
pub fn scenario_id(kind: DatasetKind, depth: usize, width: usize) -> u64 {
    mix64(kind_code(kind) | (depth as u64) << 8 | (width as u64) << 32)
}

/// Seed handed to the trainer; init and shuffle streams derive from it.
pub fn train_seed(
    master_seed: u64,
    run_index: u32,
    kind: DatasetKind,
    depth: usize,
    width: usize,
) -> u64 {
    mix64(run_base(master_seed, run_index) ^ mix64(PURPOSE_TRAIN ^ scenario_id(kind, depth, width)))
}
