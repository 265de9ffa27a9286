//! Report files: accuracy matrices, the symbolic performance overview,
//! the epochs-to-convergence table, and depth-series data for plotting.
//!
//! Two formats are supported. `Delimited` writes TSV files meant for
//! machines (long format, one aggregate per row); `PlainTable` writes
//! aligned text tables meant for humans. All values come from the parsed
//! results store and all iteration orders are fixed, so emission is
//! byte-deterministic for a given store.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::DatasetKind;
use crate::experiment::{
    aggregate, symbolize, AggregateStats, ExperimentError, ResultSet, HEADLINE_DEPTH,
    HEADLINE_WIDTH,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Delimited,
    PlainTable,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 2] = [ReportFormat::Delimited, ReportFormat::PlainTable];

    fn extension(self) -> &'static str {
        match self {
            ReportFormat::Delimited => "tsv",
            ReportFormat::PlainTable => "txt",
        }
    }
}

fn fmt_stats(stats: &AggregateStats) -> String {
    match stats.sem {
        Some(sem) => format!("{:.2} \u{00B1} {:.2}", stats.mean, sem),
        None => format!("{:.2}", stats.mean),
    }
}

fn fmt_sem_field(stats: &AggregateStats) -> String {
    match stats.sem {
        Some(sem) => format!("{sem:.2}"),
        None => String::from("NA"),
    }
}

/// Emit every applicable report for `results` into `dir`. Returns the
/// written paths.
pub fn emit_reports(
    results: &ResultSet,
    dir: &Path,
    format: ReportFormat,
) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();

    for (depth, width) in results.architectures() {
        let path = dir.join(format!("accuracy_d{depth}_w{width}.{}", format.extension()));
        let text = match format {
            ReportFormat::Delimited => accuracy_matrix_tsv(results, depth, width),
            ReportFormat::PlainTable => accuracy_matrix_table(results, depth, width),
        };
        write_report(&path, &text)?;
        written.push(path);
    }

    if results
        .architectures()
        .contains(&(HEADLINE_DEPTH, HEADLINE_WIDTH))
    {
        let path = dir.join(format!("symbolic_overview.{}", format.extension()));
        write_report(&path, &symbolic_overview(results, format))?;
        written.push(path);
    }

    let path = dir.join(format!("epochs.{}", format.extension()));
    write_report(&path, &epochs_report(results, format))?;
    written.push(path);

    let path = dir.join(format!("depth_series.{}", format.extension()));
    write_report(&path, &depth_series(results, format))?;
    written.push(path);

    Ok(written)
}

fn write_report(path: &Path, text: &str) -> Result<(), ExperimentError> {
    fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cell_stats(
    results: &ResultSet,
    train: DatasetKind,
    depth: usize,
    width: usize,
    test: DatasetKind,
) -> Option<AggregateStats> {
    let values = results.cell(train, depth, width, test);
    if values.is_empty() {
        None
    } else {
        Some(aggregate(&values))
    }
}

fn accuracy_matrix_tsv(results: &ResultSet, depth: usize, width: usize) -> String {
    let mut out = String::from("train_kind\ttest_kind\tmean\tsem\tn\n");
    for train in DatasetKind::ALL {
        for test in DatasetKind::ALL {
            if let Some(stats) = cell_stats(results, train, depth, width, test) {
                writeln!(
                    out,
                    "{}\t{}\t{:.2}\t{}\t{}",
                    train.name(),
                    test.name(),
                    stats.mean,
                    fmt_sem_field(&stats),
                    stats.n
                )
                .unwrap();
            }
        }
    }
    out
}

fn accuracy_matrix_table(results: &ResultSet, depth: usize, width: usize) -> String {
    const CELL: usize = 16;
    let mut out = format!(
        "Mean test accuracy (%, mean \u{00B1} SEM over runs) \u{2014} {depth} hidden layer(s) x {width} neurons\n\n"
    );
    out.push_str(&format!("{:<22}", "train \\ test"));
    for test in DatasetKind::ALL {
        out.push_str(&format!("{:>w$}", test.name(), w = CELL));
    }
    out.push('\n');
    out.push_str(&"-".repeat(22 + CELL * DatasetKind::ALL.len()));
    out.push('\n');
    for train in DatasetKind::ALL {
        let row: Vec<Option<AggregateStats>> = DatasetKind::ALL
            .into_iter()
            .map(|test| cell_stats(results, train, depth, width, test))
            .collect();
        if row.iter().all(Option::is_none) {
            continue;
        }
        out.push_str(&format!("{:<22}", train.name()));
        for stats in row {
            let cell = stats.map_or(String::from("-"), |s| fmt_stats(&s));
            out.push_str(&format!("{cell:>w$}", w = CELL));
        }
        out.push('\n');
    }
    out
}

fn symbolic_overview(results: &ResultSet, format: ReportFormat) -> String {
    let mut out = match format {
        ReportFormat::Delimited => String::from("train_kind\ttest_kind\tmean\tsymbol\n"),
        ReportFormat::PlainTable => format!(
            "Classification performance overview ({HEADLINE_DEPTH} hidden layer x {HEADLINE_WIDTH} neurons)\n\
             \u{2713} mean accuracy > 90%   \u{25CB} 40%..90%   \u{00D7} < 40%\n\n\
             {:<22}{:<22}{}\n",
            "train subset", "test subset", "performance"
        ),
    };
    for train in DatasetKind::ALL {
        for test in DatasetKind::ALL {
            if let Some(stats) = cell_stats(results, train, HEADLINE_DEPTH, HEADLINE_WIDTH, test) {
                let symbol = symbolize(stats.mean).glyph();
                match format {
                    ReportFormat::Delimited => writeln!(
                        out,
                        "{}\t{}\t{:.2}\t{}",
                        train.name(),
                        test.name(),
                        stats.mean,
                        symbol
                    )
                    .unwrap(),
                    ReportFormat::PlainTable => writeln!(
                        out,
                        "{:<22}{:<22}{}",
                        train.name(),
                        test.name(),
                        symbol
                    )
                    .unwrap(),
                }
            }
        }
    }
    out
}

fn epochs_report(results: &ResultSet, format: ReportFormat) -> String {
    let mut out = match format {
        ReportFormat::Delimited => String::from("train_kind\tdepth\twidth\tmean_epochs\tsem\tn\n"),
        ReportFormat::PlainTable => format!(
            "Epochs to convergence (mean \u{00B1} SEM over runs)\n\n{:<22}{:<8}{:<8}{}\n",
            "train dataset", "depth", "width", "epochs"
        ),
    };
    for (depth, width) in results.architectures() {
        for train in DatasetKind::ALL {
            let epochs = results.epochs(train, depth, width);
            if epochs.is_empty() {
                continue;
            }
            let stats = aggregate(&epochs);
            match format {
                ReportFormat::Delimited => writeln!(
                    out,
                    "{}\t{}\t{}\t{:.2}\t{}\t{}",
                    train.name(),
                    depth,
                    width,
                    stats.mean,
                    fmt_sem_field(&stats),
                    stats.n
                )
                .unwrap(),
                ReportFormat::PlainTable => writeln!(
                    out,
                    "{:<22}{:<8}{:<8}{}",
                    train.name(),
                    depth,
                    width,
                    fmt_stats(&stats)
                )
                .unwrap(),
            }
        }
    }
    out
}

fn depth_series(results: &ResultSet, format: ReportFormat) -> String {
    let mut out = match format {
        ReportFormat::Delimited => {
            String::from("train_kind\ttest_kind\twidth\tdepth\tmean\tsem\n")
        }
        ReportFormat::PlainTable => format!(
            "Accuracy vs. depth (data columns for decay/error plots)\n\n\
             {:<16}{:<16}{:<8}{:<8}{:<12}{}\n",
            "train", "test", "width", "depth", "mean", "sem"
        ),
    };
    let mut widths: Vec<usize> = results.architectures().iter().map(|&(_, w)| w).collect();
    widths.sort_unstable();
    widths.dedup();
    let mut depths: Vec<usize> = results.architectures().iter().map(|&(d, _)| d).collect();
    depths.sort_unstable();
    depths.dedup();

    for train in DatasetKind::ALL {
        for test in DatasetKind::ALL {
            for &width in &widths {
                for &depth in &depths {
                    if let Some(stats) = cell_stats(results, train, depth, width, test) {
                        match format {
                            ReportFormat::Delimited => writeln!(
                                out,
                                "{}\t{}\t{}\t{}\t{:.2}\t{}",
                                train.name(),
                                test.name(),
                                width,
                                depth,
                                stats.mean,
                                fmt_sem_field(&stats)
                            )
                            .unwrap(),
                            ReportFormat::PlainTable => writeln!(
                                out,
                                "{:<16}{:<16}{:<8}{:<8}{:<12.2}{}",
                                train.name(),
                                test.name(),
                                width,
                                depth,
                                stats.mean,
                                fmt_sem_field(&stats)
                            )
                            .unwrap(),
                        }
                    }
                }
            }
        }
    }
    out
}

/// Parse a delimited accuracy matrix back into
/// `(train_kind, test_kind, mean, sem, n)` rows.
pub fn read_accuracy_tsv(
    path: &Path,
) -> Result<Vec<(DatasetKind, DatasetKind, f64, Option<f64>, usize)>, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let corrupt =
        |msg: String| ExperimentError::StoreCorrupt(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    match lines.next() {
        Some("train_kind\ttest_kind\tmean\tsem\tn") => {}
        other => return Err(corrupt(format!("unexpected header {other:?}"))),
    }
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(corrupt(format!("bad field count in {line:?}")));
        }
        let train = DatasetKind::from_name(fields[0])
            .ok_or_else(|| corrupt(format!("unknown kind {:?}", fields[0])))?;
        let test = DatasetKind::from_name(fields[1])
            .ok_or_else(|| corrupt(format!("unknown kind {:?}", fields[1])))?;
        let mean: f64 = fields[2].parse().map_err(|e| corrupt(format!("mean: {e}")))?;
        let sem = if fields[3] == "NA" {
            None
        } else {
            Some(fields[3].parse().map_err(|e| corrupt(format!("sem: {e}")))?)
        };
        let n: usize = fields[4].parse().map_err(|e| corrupt(format!("n: {e}")))?;
        rows.push((train, test, mean, sem, n));
    }
    Ok(rows)
}
