//! Per-epoch records, confusion matrices and the metrics CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub wall_seconds: f64,
}

pub const METRICS_HEADER: [&str; 9] = [
    "epoch",
    "train_loss",
    "train_acc",
    "val_loss",
    "val_acc",
    "precision",
    "recall",
    "f1",
    "wall_seconds",
];

impl MetricsRecord {
    fn fields(&self) -> [String; 9] {
        [
            self.epoch.to_string(),
            self.train_loss.to_string(),
            self.train_acc.to_string(),
            self.val_loss.to_string(),
            self.val_acc.to_string(),
            self.precision.to_string(),
            self.recall.to_string(),
            self.f1.to_string(),
            format!("{:.3}", self.wall_seconds),
        ]
    }
}

/// `counts[truth][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(class_count: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; class_count]; class_count],
        }
    }

    pub fn from_predictions(class_count: usize, truth: &[usize], predicted: &[usize]) -> Self {
        let mut m = Self::new(class_count);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.add(t, p);
        }
        m
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let hits: usize = (0..self.counts.len()).map(|k| self.counts[k][k]).sum();
        hits as f64 / total as f64
    }

    /// Macro-averaged precision, recall and F1. A class that is never
    /// predicted has precision 0; one without support has recall 0.
    pub fn macro_scores(&self) -> (f64, f64, f64) {
        let k = self.counts.len();
        let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
        for c in 0..k {
            let tp = self.counts[c][c] as f64;
            let predicted: usize = (0..k).map(|t| self.counts[t][c]).sum();
            let support: usize = self.counts[c].iter().sum();
            let p = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
            let r = if support > 0 { tp / support as f64 } else { 0.0 };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            p_sum += p;
            r_sum += r;
            f_sum += f;
        }
        let k = k as f64;
        (p_sum / k, r_sum / k, f_sum / k)
    }
}

/// Writes the metrics CSV afresh and flushes after every row.
pub struct MetricsWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = MetricsWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        w.line(&METRICS_HEADER.map(String::from))?;
        Ok(w)
    }

    fn line(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join(","))
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        self.line(&record.fields())
    }
}

/// Reads a metrics CSV back.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::ingestion(path, e.to_string()))?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::ingestion(path, format!("bad value in column {}", METRICS_HEADER[i])))
        };
        out.push(MetricsRecord {
            epoch: f(0)? as usize,
            train_loss: f(1)?,
            train_acc: f(2)?,
            val_loss: f(3)?,
            val_acc: f(4)?,
            precision: f(5)?,
            recall: f(6)?,
            f1: f(7)?,
            wall_seconds: f(8)?,
        });
    }
    Ok(out)
}
