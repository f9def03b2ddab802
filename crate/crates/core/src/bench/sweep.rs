//! Grid sweeps with a resumable summary CSV.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use crate::ansatz::AnsatzKind;
use crate::bench::config::{ExperimentConfig, SweepConfig};
use crate::bench::dataset::{load_dataset_split, Dataset};
use crate::bench::train::train_on;
use crate::encodings::OrderingKind;
use crate::error::{Error, Result};
use crate::measure::MeasurementSpec;

pub const SUMMARY_HEADER: [&str; 15] = [
    "run_id",
    "arch",
    "encoding",
    "ansatz",
    "measurement",
    "ordering",
    "seed",
    "status",
    "best_val_acc",
    "best_val_loss",
    "epochs_run",
    "params",
    "quantum_params",
    "wall_seconds",
    "error",
];

/// One grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRun {
    pub run_id: String,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub run_id: String,
    pub fields: Vec<String>,
}

impl SummaryRow {
    pub fn status(&self) -> &str {
        &self.fields[7]
    }

    pub fn best_val_acc(&self) -> Option<f64> {
        self.fields[8].parse().ok()
    }
}

fn or<T: Clone>(v: &[T], d: T) -> Vec<T> {
    if v.is_empty() {
        vec![d]
    } else {
        v.to_vec()
    }
}

pub fn run_id(cfg: &ExperimentConfig) -> String {
    let m = &cfg.model;
    format!(
        "{}-{}-{}-{}-{}-s{}",
        m.arch, m.encoding.kind, m.ansatz.kind, m.measurement.kind, m.encoding.ordering, cfg.seed
    )
}

/// Expands the grid in encoding, ansatz, measurement, ordering, seed order
/// (seed fastest). Empty axes keep the base value.
pub fn expand_grid(sweep: &SweepConfig) -> Vec<SweepRun> {
    let base = &sweep.base;
    let g = &sweep.grid;
    let encodings = or(&g.encodings, base.model.encoding.kind);
    let ansaetze = or(&g.ansaetze, base.model.ansatz.kind);
    let measurements = or(&g.measurements, base.model.measurement.kind);
    let orderings = or(&g.orderings, base.model.encoding.ordering);
    let seeds = if g.seeds.is_empty() { vec![base.seed] } else { g.seeds.clone() };

    let mut runs = Vec::new();
    for &enc in &encodings {
        for &ans in &ansaetze {
            for &meas in &measurements {
                for &ord in &orderings {
                    for &seed in &seeds {
                        let mut cfg = base.clone();
                        cfg.seed = seed;
                        cfg.model.seed = seed;
                        cfg.model.encoding.kind = enc;
                        let ord_seed = match ord {
                            OrderingKind::Random => base.model.encoding.ordering_seed.or(Some(seed)),
                            _ => None,
                        };
                        cfg.model.encoding = cfg.model.encoding.with_ordering(ord, ord_seed);
                        cfg.model.ansatz.kind = ans;
                        cfg.model.ansatz.seed = (ans == AnsatzKind::NoEntanglement).then_some(seed);
                        if meas != base.model.measurement.kind {
                            let mut m = MeasurementSpec::histogram(Vec::new(), base.model.class_count);
                            m.kind = meas;
                            m.pauli_seed = base.model.measurement.pauli_seed;
                            cfg.model.measurement = m;
                        }
                        let dir = &sweep.runs_dir;
                        let id = run_id(&cfg);
                        cfg.metrics_out_path = dir.join(format!("{id}.csv"));
                        cfg.checkpoint_path = Some(dir.join(format!("{id}.ckpt")));
                        runs.push(SweepRun { run_id: id, config: cfg });
                    }
                }
            }
        }
    }
    runs
}

fn identity_fields(run: &SweepRun) -> Vec<String> {
    let m = &run.config.model;
    vec![
        run.run_id.clone(),
        m.arch.to_string(),
        m.encoding.kind.to_string(),
        m.ansatz.kind.to_string(),
        m.measurement.kind.to_string(),
        m.encoding.ordering.to_string(),
        run.config.seed.to_string(),
    ]
}

fn run_one(run: &SweepRun, train: &Dataset, val: &Dataset) -> SummaryRow {
    let start = Instant::now();
    let mut fields = identity_fields(run);
    match train_on(&run.config, train, val) {
        Ok(out) => fields.extend([
            "ok".to_string(),
            out.best_val_acc.to_string(),
            out.best_val_loss.to_string(),
            out.records.len().to_string(),
            out.param_count.to_string(),
            out.quantum_param_count.to_string(),
            format!("{:.3}", start.elapsed().as_secs_f64()),
            String::new(),
        ]),
        Err(e) => fields.extend([
            "error".to_string(),
            String::new(),
            String::new(),
            "0".to_string(),
            String::new(),
            String::new(),
            format!("{:.3}", start.elapsed().as_secs_f64()),
            e.to_string(),
        ]),
    }
    SummaryRow {
        run_id: run.run_id.clone(),
        fields,
    }
}

/// Rows of an existing summary file, or none if it does not exist.
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let header = reader.headers().map_err(|e| Error::ingestion(path, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != SUMMARY_HEADER {
        return Err(Error::ingestion(path, "summary header does not match"));
    }
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| Error::ingestion(path, e.to_string()))?;
            let fields: Vec<String> = r.iter().map(String::from).collect();
            Ok(SummaryRow {
                run_id: fields[0].clone(),
                fields,
            })
        })
        .collect()
}

fn write_rows(path: &Path, rows: &[&SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let err = |e: csv::Error| Error::ingestion(path, e.to_string());
    w.write_record(SUMMARY_HEADER).map_err(err)?;
    for r in rows {
        w.write_record(&r.fields).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Appends finished rows as they arrive so an interrupted sweep keeps them.
struct Appender {
    path: PathBuf,
    lock: Mutex<()>,
}

impl Appender {
    fn append(&self, row: &SummaryRow) -> Result<()> {
        let _guard = self.lock.lock().expect("summary lock");
        let mut buf = csv::Writer::from_writer(Vec::new());
        buf.write_record(&row.fields).map_err(|e| Error::ingestion(&self.path, e.to_string()))?;
        let bytes = buf.into_inner().map_err(|e| Error::ingestion(&self.path, e.to_string()))?;
        let mut f = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&self.path, e))
    }
}

/// Runs every grid point not already present in the summary, `workers`
/// at a time, then rewrites the summary in grid order. Failed runs become
/// `status=error` rows. Returns the rows in grid order.
pub fn sweep(cfg: &SweepConfig, workers: usize) -> Result<Vec<SummaryRow>> {
    let runs = expand_grid(cfg);
    if runs.is_empty() {
        return Err(Error::config("sweep grid is empty"));
    }
    let base = &cfg.base;
    let (train, val) = load_dataset_split(
        &base.dataset_path,
        base.model.image_shape,
        base.model.class_count,
        base.split_fraction,
        base.seed,
    )?;
    for dir in [cfg.runs_dir.as_path(), cfg.summary_path.parent().unwrap_or(Path::new(""))] {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let existing = read_summary(&cfg.summary_path)?;
    let done: HashSet<&str> = existing.iter().map(|r| r.run_id.as_str()).collect();
    let existing_refs: Vec<&SummaryRow> = existing.iter().collect();
    write_rows(&cfg.summary_path, &existing_refs)?;

    let appender = Appender {
        path: cfg.summary_path.clone(),
        lock: Mutex::new(()),
    };
    let pending: Vec<&SweepRun> = runs.iter().filter(|r| !done.contains(r.run_id.as_str())).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::State(e.to_string()))?;
    let fresh: Vec<SummaryRow> = pool.install(|| {
        pending
            .par_iter()
            .map(|run| {
                let row = run_one(run, &train, &val);
                appender.append(&row).map(|_| row)
            })
            .collect::<Result<_>>()
    })?;

    let mut rows = Vec::with_capacity(runs.len());
    for run in &runs {
        let row = fresh
            .iter()
            .chain(existing.iter())
            .find(|r| r.run_id == run.run_id)
            .expect("every run has a row");
        rows.push(row.clone());
    }
    let ordered: Vec<&SummaryRow> = rows.iter().collect();
    write_rows(&cfg.summary_path, &ordered)?;
    Ok(rows)
}
