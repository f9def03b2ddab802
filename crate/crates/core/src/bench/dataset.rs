//! Image datasets on disk: `manifest.csv` (`filename,label`) next to raw
//! QIMG tensors.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::Tensor;

pub const MANIFEST: &str = "manifest.csv";
const MAGIC: &[u8; 4] = b"QIMG";
const HEADER: usize = 16;
/// Per-pixel Gaussian noise of synthetic images.
const NOISE_SIGMA: f64 = 0.25;

/// Labelled images as `(C, H, W)` tensors with values in `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub images: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self, class_count: usize) -> Vec<usize> {
        let mut counts = vec![0; class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            images: idx.iter().map(|&i| self.images[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
        }
    }
}

/// Encodes an `(H, W, C)` image stored row-major with channels innermost.
pub fn encode_qimg(shape: (usize, usize, usize), hwc: &[f32]) -> Vec<u8> {
    let (h, w, c) = shape;
    let mut bytes = Vec::with_capacity(HEADER + 4 * hwc.len());
    bytes.extend_from_slice(MAGIC);
    for d in [h, w, c] {
        bytes.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in hwc {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Decodes a QIMG file into a `(C, H, W)` tensor scaled to `[0, 1]`.
/// Files whose values exceed 1 are taken to be on a 0–255 scale.
pub fn decode_qimg(bytes: &[u8], shape: (usize, usize, usize), file: &Path) -> Result<Tensor> {
    let bad = |msg: String| Error::ingestion(file, msg);
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(bad("missing QIMG header".into()));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (h, w, c) = (dim(0), dim(1), dim(2));
    if (h, w, c) != shape {
        return Err(bad(format!("image is {h}x{w}x{c}, expected {shape:?}")));
    }
    let n = h * w * c;
    if bytes.len() != HEADER + 4 * n {
        return Err(bad(format!("expected {n} values, file holds {} bytes", bytes.len())));
    }
    let raw: Vec<f64> = bytes[HEADER..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(bad("pixel values must be finite and non-negative".into()));
    }
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let scale = if max > 1.0 {
        if max > 255.0 {
            return Err(bad(format!("pixel value {max} is above 255")));
        }
        1.0 / 255.0
    } else {
        1.0
    };
    let mut data = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                data[(ch * h + y) * w + x] = raw[(y * w + x) * c + ch] * scale;
            }
        }
    }
    Tensor::new(vec![c, h, w], data)
}

fn manifest_path(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.join(MANIFEST), path.to_path_buf())
    } else {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (path.to_path_buf(), dir)
    }
}

/// Reads every image listed in the manifest.
pub fn read_dataset(path: &Path, shape: (usize, usize, usize), class_count: usize) -> Result<Dataset> {
    let (manifest, dir) = manifest_path(path);
    if !manifest.is_file() {
        return Err(Error::ingestion(&manifest, "manifest not found"));
    }
    let mut reader = csv::Reader::from_path(&manifest).map_err(|e| Error::ingestion(&manifest, e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::ingestion(&manifest, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["filename", "label"] {
        return Err(Error::ingestion(&manifest, "header must be filename,label"));
    }
    let mut ds = Dataset::default();
    let mut seen = vec![false; class_count];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::ingestion(&manifest, e.to_string()))?;
        let name = rec[0].to_string();
        let label: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::ingestion(&manifest, format!("row {}: bad label {:?}", row + 1, &rec[1])))?;
        if label >= class_count {
            return Err(Error::ingestion(
                &manifest,
                format!("label {label} is outside the {class_count} configured classes"),
            ));
        }
        seen[label] = true;
        let file = dir.join(&name);
        let bytes = fs::read(&file).map_err(|e| Error::ingestion(&file, e.to_string()))?;
        ds.images.push(decode_qimg(&bytes, shape, &file)?);
        ds.labels.push(label);
        ds.names.push(name);
    }
    let present = seen.iter().filter(|s| **s).count();
    if present != class_count {
        return Err(Error::ingestion(
            &manifest,
            format!("manifest has {present} classes, config expects {class_count}"),
        ));
    }
    Ok(ds)
}

/// Stratified split: each class is shuffled under `seed` and its first
/// `round(split · n_class)` members go to training. Both halves keep
/// manifest order.
pub fn split_dataset(ds: &Dataset, class_count: usize, split: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::config("split fraction must lie in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for k in 0..class_count {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == k).collect();
        idx.shuffle(&mut rng);
        let cut = (split * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..cut]);
        val.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&val)))
}

/// Reads and splits 80/20.
pub fn load_dataset(
    path: &Path,
    shape: (usize, usize, usize),
    class_count: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    load_dataset_split(path, shape, class_count, 0.8, seed)
}

pub fn load_dataset_split(
    path: &Path,
    shape: (usize, usize, usize),
    class_count: usize,
    split: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let ds = read_dataset(path, shape, class_count)?;
    split_dataset(&ds, class_count, split, seed)
}

/// Intensity pattern of a class at pixel `(y, x)`, in `[0, 1]`.
///
/// The first four classes share one grey palette and are bands at
/// different spatial frequencies: top half, period-8 rows, period-4 rows,
/// period-4 columns. The rest add distinct colours.
fn pattern(class: usize, y: usize, x: usize, h: usize, w: usize) -> f64 {
    let (top, left) = (2 * y < h, 2 * x < w);
    let on = |b: bool| if b { 1.0 } else { 0.0 };
    let (fy, fx) = (y as f64 / h as f64, x as f64 / w as f64);
    match class % 10 {
        0 => on(top),
        1 => on((y / 4) % 2 == 0),
        2 => on((y / 2) % 2 == 0),
        3 => on((x / 2) % 2 == 0),
        4 => on(left),
        5 => on(top == left),
        6 => {
            let r = ((fy - 0.5).powi(2) + (fx - 0.5).powi(2)).sqrt();
            on(r < 0.3)
        }
        7 => on((x + y) % 2 == 0),
        8 => fy,
        _ => 1.0 - fx,
    }
}

fn palette(class: usize, c: usize) -> (f64, f64) {
    const HI: [[f64; 3]; 10] = [
        [0.8, 0.8, 0.8],
        [0.8, 0.8, 0.8],
        [0.8, 0.8, 0.8],
        [0.8, 0.8, 0.8],
        [0.9, 0.3, 0.2],
        [0.2, 0.8, 0.3],
        [0.3, 0.3, 0.9],
        [0.9, 0.8, 0.2],
        [0.8, 0.2, 0.8],
        [0.2, 0.8, 0.8],
    ];
    let hi = HI[class % 10][c % 3];
    (0.1, hi)
}

/// One image in `(H, W, C)` order.
fn synth_image(class: usize, shape: (usize, usize, usize), rng: &mut ChaCha8Rng) -> Vec<f32> {
    let (h, w, c) = shape;
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    let contrast = rng.random_range(0.75..1.0);
    let mut out = Vec::with_capacity(h * w * c);
    for y in 0..h {
        for x in 0..w {
            let p = pattern(class, y, x, h, w);
            for ch in 0..c {
                let (lo, hi) = palette(class, ch);
                let v = lo + (hi - lo) * p * contrast + noise.sample(rng);
                out.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    out
}

/// Writes a procedural texture dataset: `per_class` images per class,
/// class-major, then checks that a nearest-centroid probe separates the
/// classes. Returns the manifest path.
pub fn synth_dataset(
    path: &Path,
    shape: (usize, usize, usize),
    class_count: usize,
    per_class: usize,
    seed: u64,
) -> Result<PathBuf> {
    if class_count < 2 || class_count > 10 || per_class < 2 {
        return Err(Error::config("synthetic data needs 2..=10 classes and at least 2 images each"));
    }
    if shape.0 < 2 || shape.1 < 2 || shape.2 == 0 {
        return Err(Error::config(format!("image shape {shape:?} is too small")));
    }
    let images = path.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let manifest = path.join(MANIFEST);
    let mut writer = csv::Writer::from_path(&manifest).map_err(|e| Error::ingestion(&manifest, e.to_string()))?;
    let io = |e: csv::Error| Error::ingestion(&manifest, e.to_string());
    writer.write_record(["filename", "label"]).map_err(io)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..class_count {
        for i in 0..per_class {
            let name = format!("images/c{k:02}_{i:05}.qimg");
            let file = path.join(&name);
            let img = synth_image(k, shape, &mut rng);
            fs::write(&file, encode_qimg(shape, &img)).map_err(|e| Error::io(&file, e))?;
            writer.write_record([name, k.to_string()]).map_err(io)?;
        }
    }
    writer.flush().map_err(|e| Error::io(&manifest, e))?;
    drop(writer);

    let (train, val) = load_dataset(path, shape, class_count, seed)?;
    let acc = centroid_probe(&train, &val, class_count);
    if acc < 0.8 {
        return Err(Error::State(format!("synthetic classes are not separable (probe accuracy {acc:.3})")));
    }
    Ok(manifest)
}

/// Accuracy on `val` of a nearest-class-mean classifier fitted on `train`.
/// With a shared isotropic covariance this is a linear decision rule.
pub fn centroid_probe(train: &Dataset, val: &Dataset, class_count: usize) -> f64 {
    let dim = train.images[0].len();
    let mut means = vec![vec![0.0; dim]; class_count];
    let counts = train.class_counts(class_count);
    for (img, &l) in train.images.iter().zip(&train.labels) {
        for (m, v) in means[l].iter_mut().zip(&img.data) {
            *m += v / counts[l] as f64;
        }
    }
    let correct = val
        .images
        .iter()
        .zip(&val.labels)
        .filter(|(img, &l)| {
            let dist = |m: &Vec<f64>| m.iter().zip(&img.data).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..class_count)
                .min_by(|&a, &b| dist(&means[a]).total_cmp(&dist(&means[b])))
                .unwrap();
            best == l
        })
        .count();
    correct as f64 / val.len() as f64
}
