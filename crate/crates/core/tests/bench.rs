use std::fs;
use std::path::{Path, PathBuf};

use qpqc_core::ansatz::AnsatzKind;
use qpqc_core::bench::dataset::encode_qimg;
use qpqc_core::bench::*;
use qpqc_core::encodings::EncodingKind;
use qpqc_core::measure::{MeasurementKind, MeasurementSpec};
use qpqc_core::models::{Arch, ModelConfig};
use qpqc_core::qsim::Axis;
use qpqc_core::Error;

const RGB16: (usize, usize, usize) = (16, 16, 3);
const GRAY16: (usize, usize, usize) = (16, 16, 1);

fn synth(dir: &Path, shape: (usize, usize, usize), k: usize, per_class: usize) -> PathBuf {
    synth_dataset(dir, shape, k, per_class, 0).unwrap();
    dir.to_path_buf()
}

/// Small pure-quantum config: amplitude SEQNN-FC on 16×16 grayscale.
fn tiny_config(data: &Path, out: &Path, epochs: usize) -> ExperimentConfig {
    let mut m = ModelConfig::new(Arch::SeqnnFc, GRAY16, 4);
    m.ansatz.kind = AnsatzKind::SimplifiedTwoDesign;
    m.ansatz.seed = None;
    m.measurement = MeasurementSpec::pauli(Axis::Z, Vec::new(), 4);
    let mut cfg = ExperimentConfig::new(m, data.to_path_buf(), out.to_path_buf());
    cfg.epochs = epochs;
    cfg.patience = epochs;
    cfg
}

fn without_wall_seconds(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn stratified_split_of_500() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), RGB16, 10, 50);
    let (train, val) = load_dataset(&data, RGB16, 10, 3).unwrap();
    assert_eq!((train.len(), val.len()), (400, 100));
    assert_eq!(train.class_counts(10), vec![40; 10]);
    assert_eq!(val.class_counts(10), vec![10; 10]);
    assert!(train.names.iter().all(|n| !val.names.contains(n)));
    assert!(train.images.iter().all(|t| t.shape == vec![3, 16, 16]));
    assert!(train.images.iter().flat_map(|t| &t.data).all(|v| (0.0..=1.0).contains(v)));

    let again = load_dataset(&data, RGB16, 10, 3).unwrap();
    assert_eq!(again.0.names, train.names);
    assert_eq!(again.1, val);
    let other = load_dataset(&data, RGB16, 10, 4).unwrap();
    assert_ne!(other.0.names, train.names);
}

#[test]
fn ingestion_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = read_dataset(dir.path(), GRAY16, 4);
    assert!(matches!(missing, Err(Error::Ingestion { ref file, .. }) if file.ends_with("manifest.csv")));

    let data = synth(dir.path(), GRAY16, 4, 10);
    let manifest = data.join("manifest.csv");
    let mut text = fs::read_to_string(&manifest).unwrap();
    fs::write(data.join("images/extra.qimg"), encode_qimg(GRAY16, &[0.5; 256])).unwrap();
    text.push_str("images/extra.qimg,10\n");
    fs::write(&manifest, &text).unwrap();
    let eleven = read_dataset(&data, GRAY16, 10);
    assert!(matches!(eleven, Err(Error::Ingestion { .. })), "{eleven:?}");

    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), GRAY16, 4, 10);
    let victim = data.join("images/c02_00003.qimg");
    let bytes = fs::read(&victim).unwrap();
    fs::write(&victim, &bytes[..bytes.len() - 4]).unwrap();
    match read_dataset(&data, GRAY16, 4) {
        Err(Error::Ingestion { file, .. }) => assert_eq!(file, victim),
        other => panic!("expected ingestion error, got {other:?}"),
    }
    // a three-class config against a four-class manifest
    assert!(matches!(read_dataset(&data, GRAY16, 3), Err(Error::Ingestion { .. })));
}

#[test]
fn synthetic_data_is_reproducible_and_separable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth(a.path(), RGB16, 10, 50);
    synth(b.path(), RGB16, 10, 50);
    let manifest = fs::read_to_string(a.path().join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 501);
    assert_eq!(manifest, fs::read_to_string(b.path().join("manifest.csv")).unwrap());
    for line in manifest.lines().skip(1) {
        let name = line.split(',').next().unwrap();
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let (train, val) = load_dataset(a.path(), RGB16, 10, 0).unwrap();
    assert!(centroid_probe(&train, &val, 10) >= 0.8);
    assert!(synth_dataset(a.path(), RGB16, 11, 50, 0).is_err());
}

#[test]
fn classical_twin_learns() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(&dir.path().join("data"), RGB16, 4, 25);
    let m = ModelConfig::new(Arch::ClassicalParallel, RGB16, 4);
    let mut cfg = ExperimentConfig::new(m, data, dir.path().join("m.csv"));
    cfg.epochs = 10;
    let out = train(&cfg).unwrap();
    assert_eq!(out.records.len(), 10);
    let (first, last) = (&out.records[0], out.records.last().unwrap());
    assert!(last.train_acc > first.train_acc, "{} -> {}", first.train_acc, last.train_acc);
    assert_eq!(read_metrics(&cfg.metrics_out_path).unwrap().len(), 10);
    assert!(cfg.checkpoint().is_file());
}

#[test]
fn training_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(&dir.path().join("data"), GRAY16, 4, 20);
    let a = tiny_config(&data, &dir.path().join("a.csv"), 4);
    let mut b = a.clone();
    b.metrics_out_path = dir.path().join("b.csv");
    train(&a).unwrap();
    train(&b).unwrap();
    let text = without_wall_seconds(&a.metrics_out_path);
    assert_eq!(text.lines().count(), 5);
    assert_eq!(text, without_wall_seconds(&b.metrics_out_path));
}

#[test]
fn early_stopping_and_metric_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(&dir.path().join("data"), GRAY16, 4, 20);
    let mut cfg = tiny_config(&data, &dir.path().join("m.csv"), 20);
    cfg.patience = 1;
    cfg.learning_rate = 0.3;
    let out = train(&cfg).unwrap();
    assert!(out.records.len() - out.best_epoch <= cfg.patience);
    for r in &out.records {
        for v in [r.train_acc, r.val_acc, r.precision, r.recall, r.f1] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
    let best = &out.records[out.best_epoch - 1];
    assert_eq!(best.val_loss, out.best_val_loss);

    let ev = eval_checkpoint(&cfg, &cfg.checkpoint()).unwrap();
    assert!((ev.loss - best.val_loss).abs() < 1e-12);
    let c = &ev.confusion;
    let diag: usize = (0..4).map(|i| c.counts[i][i]).sum();
    assert_eq!(c.total(), 16);
    assert!((ev.accuracy - diag as f64 / 16.0).abs() < 1e-12);
    assert!((ev.accuracy - best.val_acc).abs() < 1e-12);
    let (p, r, f) = ev.macro_scores();
    assert_eq!((p, r, f), (best.precision, best.recall, best.f1));
}

fn parallel_sweep(dir: &Path) -> SweepConfig {
    let m = ModelConfig::new(Arch::HqnnParallel, RGB16, 10);
    SweepConfig {
        base: ExperimentConfig::new(m, dir.join("data"), dir.join("unused.csv")),
        grid: SweepGrid {
            encodings: vec![
                EncodingKind::AngleX,
                EncodingKind::AngleY,
                EncodingKind::AngleZ,
                EncodingKind::Amplitude,
                EncodingKind::Iqp,
                EncodingKind::QaoaZ,
            ],
            ansaetze: vec![AnsatzKind::NoEntanglement, AnsatzKind::FullEntanglement, AnsatzKind::Ring, AnsatzKind::NQ],
            measurements: vec![MeasurementKind::PauliX, MeasurementKind::PauliY, MeasurementKind::PauliZ],
            ..SweepGrid::default()
        },
        summary_path: dir.join("summary.csv"),
        runs_dir: dir.join("runs"),
    }
}

#[test]
fn parallel_grid_has_72_runs() {
    let runs = expand_grid(&parallel_sweep(Path::new("/x")));
    assert_eq!(runs.len(), 72);
    let ids: std::collections::HashSet<&str> = runs.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(ids.len(), 72);
    for r in &runs {
        assert_eq!(r.config.model.measurement.class_count, 10);
        let seeded = r.config.model.ansatz.seed.is_some();
        assert_eq!(seeded, r.config.model.ansatz.kind == AnsatzKind::NoEntanglement);
        assert!(r.config.metrics_out_path.starts_with("/x/runs"));
    }
}

#[test]
fn sweep_records_errors_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(&dir.path().join("data"), GRAY16, 4, 10);
    let base = tiny_config(&data, &dir.path().join("unused.csv"), 2);
    let cfg = SweepConfig {
        base,
        grid: SweepGrid {
            // pure-quantum models reject angle encodings
            encodings: vec![EncodingKind::Amplitude, EncodingKind::AngleX],
            seeds: vec![1, 2],
            ..SweepGrid::default()
        },
        summary_path: dir.path().join("out/summary.csv"),
        runs_dir: dir.path().join("out/runs"),
    };
    let rows = sweep(&cfg, 2).unwrap();
    assert_eq!(rows.len(), 4);
    let statuses: Vec<&str> = rows.iter().map(|r| r.status()).collect();
    assert_eq!(statuses, ["ok", "ok", "error", "error"]);
    assert!(rows[..2].iter().all(|r| r.best_val_acc().is_some()));
    assert!(!rows[2].fields[14].is_empty());

    let first = fs::read_to_string(&cfg.summary_path).unwrap();
    let again = sweep(&cfg, 1).unwrap();
    assert_eq!(again, rows);
    assert_eq!(fs::read_to_string(&cfg.summary_path).unwrap(), first);
    assert_eq!(read_summary(&cfg.summary_path).unwrap(), rows);

    // a partial summary only reruns the missing row
    let mut lines: Vec<&str> = first.lines().collect();
    lines.remove(2);
    fs::write(&cfg.summary_path, lines.join("\n") + "\n").unwrap();
    let resumed = sweep(&cfg, 1).unwrap();
    assert_eq!(resumed[0], rows[0]);
    assert_eq!(resumed[2..], rows[2..]);
    assert_eq!(resumed[1].fields[..13], rows[1].fields[..13]);
}

const CONFIG: &str = "
[experiment]
arch = seqnn_fc
dataset = data
image_shape = 16,16,1
class_count = 4
preset = baseline
metrics_out = out/metrics.csv

[encoding]
kind = amplitude

[ansatz]
kind = simplified_two_design
layers = 2

[sweep]
encodings = amplitude, angle_x
seeds = 0, 1, 2
summary = out/summary.csv
";

fn parse(text: &str) -> Result<ExperimentConfig, Error> {
    experiment_from_doc(&ConfigDoc::parse(text, Path::new("/base"))?)
}

#[test]
fn config_files() {
    let doc = ConfigDoc::parse(CONFIG, Path::new("/base")).unwrap();
    let cfg = experiment_from_doc(&doc).unwrap();
    assert_eq!((cfg.epochs, cfg.patience, cfg.batch_size), (10, 10, 16));
    assert_eq!(cfg.dataset_path, Path::new("/base/data"));
    assert_eq!(cfg.metrics_out_path, Path::new("/base/out/metrics.csv"));
    assert_eq!(cfg.checkpoint(), Path::new("/base/out/metrics.ckpt"));
    assert_eq!(cfg.model.ansatz.layers, 2);
    assert_eq!(cfg.model.ansatz.seed, None);

    let sw = sweep_from_doc(&doc).unwrap();
    assert_eq!(sw.runs_dir, Path::new("/base/out/runs"));
    assert_eq!(expand_grid(&sw).len(), 6);

    let quanv = CONFIG.replace("arch = seqnn_fc", "arch = hqnn_quanv").replace("simplified_two_design", "nq");
    assert_eq!(parse(&quanv).unwrap().batch_size, 4);
    let full = parse(&CONFIG.replace("preset = baseline", "")).unwrap();
    assert_eq!((full.epochs, full.patience, full.learning_rate), (30, 10, 0.01));
}

#[test]
fn config_errors() {
    let bad = [
        CONFIG.replace("layers = 2", "layer = 2"),
        CONFIG.replace("preset = baseline", "preset = fast"),
        CONFIG.replace("16,16,1", "16,16"),
        CONFIG.replace("layers = 2", "layers = 2\nseed = 4"),
        CONFIG.replace("preset = baseline", "epochs = 3\npatience = 5"),
        CONFIG.replace("arch = seqnn_fc", "arch = transformer"),
        CONFIG.replace("class_count = 4\n", ""),
        format!("{CONFIG}\n[plotting]\ndpi = 300\n"),
    ];
    for text in &bad {
        assert!(matches!(parse(text), Err(Error::Config(_))), "{text}");
    }
    let typo = CONFIG.replace("seeds = 0, 1, 2", "seed = 0");
    let doc = ConfigDoc::parse(&typo, Path::new("/base")).unwrap();
    assert!(matches!(sweep_from_doc(&doc), Err(Error::Config(_))));
}
