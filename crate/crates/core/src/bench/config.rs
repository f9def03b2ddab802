//! INI run configuration. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::ansatz::{AnsatzKind, AnsatzSpec, FcDepth};
use crate::encodings::{EncodingKind, EncodingSpec, OrderingKind};
use crate::error::{Error, Result};
use crate::expressibility::InputDistribution;
use crate::measure::{MeasurementKind, MeasurementSpec};
use crate::models::{Arch, ModelConfig};
use crate::qsim::PauliString;

/// Parsed INI document: section → key → value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigDoc {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    /// Directory relative paths are resolved against.
    base_dir: PathBuf,
}

const SECTIONS: [&str; 8] = [
    "experiment",
    "model",
    "encoding",
    "ansatz",
    "measurement",
    "sweep",
    "data",
    "expressibility",
];

impl ConfigDoc {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::config(e.to_string()))?;
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::config(format!("key {k:?} outside of any section")));
                }
                continue;
            };
            let name = name.trim().to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(Error::config(format!("unknown section [{name}]")));
            }
            let section = sections.entry(name.clone()).or_default();
            for (k, v) in props.iter() {
                let key = k.trim().to_ascii_lowercase();
                if section.insert(key.clone(), v.trim().to_string()).is_some() {
                    return Err(Error::config(format!("duplicate key {key:?} in [{name}]")));
                }
            }
        }
        Ok(ConfigDoc {
            sections,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    fn reader(&self, name: &'static str) -> SectionReader<'_> {
        SectionReader {
            name,
            values: self.sections.get(name),
            used: Vec::new(),
            base_dir: &self.base_dir,
        }
    }
}

/// Typed access to one section that remembers which keys were read.
struct SectionReader<'a> {
    name: &'static str,
    values: Option<&'a BTreeMap<String, String>>,
    used: Vec<&'static str>,
    base_dir: &'a Path,
}

impl<'a> SectionReader<'a> {
    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.used.push(key);
        self.values.and_then(|v| v.get(key)).map(String::as_str)
    }

    fn get<T: FromStr>(&mut self, key: &'static str) -> Result<Option<T>> {
        let name = self.name;
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| Error::config(format!("[{name}] {key} = {s:?} is not valid")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&mut self, key: &'static str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &'static str) -> Result<T> {
        let name = self.name;
        self.get(key)?
            .ok_or_else(|| Error::config(format!("[{name}] {key} is required")))
    }

    fn list<T: FromStr>(&mut self, key: &'static str) -> Result<Option<Vec<T>>> {
        let name = self.name;
        self.raw(key)
            .map(|s| {
                s.split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(|x| {
                        x.parse::<T>()
                            .map_err(|_| Error::config(format!("[{name}] {key}: {x:?} is not valid")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn path(&mut self, key: &'static str) -> Option<PathBuf> {
        let base = self.base_dir;
        self.raw(key).map(|s| {
            let p = PathBuf::from(s);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        })
    }

    /// Errors on any key that was never read.
    fn finish(self) -> Result<()> {
        if let Some(values) = self.values {
            for k in values.keys() {
                if !self.used.contains(&k.as_str()) {
                    return Err(Error::config(format!("unknown key {k:?} in [{}]", self.name)));
                }
            }
        }
        Ok(())
    }
}

fn parse_shape(s: &str) -> Result<(usize, usize, usize)> {
    let dims: Vec<usize> = s
        .split(['x', ',', '×'])
        .map(|d| d.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::config(format!("image_shape {s:?} is not H,W,C")))?;
    match dims[..] {
        [h, w, c] => Ok((h, w, c)),
        _ => Err(Error::config(format!("image_shape {s:?} is not H,W,C"))),
    }
}

fn parse_stage(s: &str) -> Result<(usize, usize)> {
    let (c, st) = s
        .split_once(':')
        .ok_or_else(|| Error::config(format!("extractor stage {s:?} is not channels:stride")))?;
    let bad = |_| Error::config(format!("extractor stage {s:?} is not channels:stride"));
    Ok((c.trim().parse().map_err(bad)?, st.trim().parse().map_err(bad)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub dataset_path: PathBuf,
    pub split_fraction: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub metrics_out_path: PathBuf,
    /// Best-model checkpoint; next to the metrics file if absent.
    pub checkpoint_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Default hyperparameters for a model: 30 epochs, patience 10, lr 0.01,
    /// batch 16 (4 for quanvolution models).
    pub fn new(model: ModelConfig, dataset_path: PathBuf, metrics_out_path: PathBuf) -> Self {
        let batch_size = default_batch(model.arch);
        ExperimentConfig {
            seed: model.seed,
            model,
            dataset_path,
            split_fraction: 0.8,
            batch_size,
            epochs: 30,
            patience: 10,
            learning_rate: 0.01,
            metrics_out_path,
            checkpoint_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::config("split_fraction must lie in (0, 1)"));
        }
        if self.patience > self.epochs {
            return Err(Error::config("patience cannot exceed epochs"));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::config("batch_size and epochs must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.checkpoint_path
            .clone()
            .unwrap_or_else(|| self.metrics_out_path.with_extension("ckpt"))
    }

    /// Same run with a different seed for model, splits and shuffling.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.model.seed = seed;
        if self.model.ansatz.kind == AnsatzKind::NoEntanglement {
            self.model.ansatz.seed = Some(seed);
        }
        self
    }
}

fn default_batch(arch: Arch) -> usize {
    match arch {
        Arch::HqnnQuanv | Arch::ClassicalQuanv => 4,
        _ => 16,
    }
}

/// Reads `[experiment]`, `[model]`, `[encoding]`, `[ansatz]` and
/// `[measurement]`.
pub fn experiment_from_doc(doc: &ConfigDoc) -> Result<ExperimentConfig> {
    let mut ex = doc.reader("experiment");
    let arch: Arch = ex.require("arch")?;
    let image_shape = parse_shape(&ex.require::<String>("image_shape")?)?;
    let class_count: usize = ex.require("class_count")?;
    let seed: u64 = ex.or("seed", 0)?;
    let dataset_path = ex
        .path("dataset")
        .ok_or_else(|| Error::config("[experiment] dataset is required"))?;
    let metrics_out_path = ex.path("metrics_out").unwrap_or_else(|| PathBuf::from("metrics.csv"));
    let checkpoint_path = ex.path("checkpoint");
    let preset: String = ex.or("preset", "full".to_string())?;
    let (default_epochs, default_patience) = match preset.as_str() {
        "full" => (30, 10),
        "baseline" => (10, 10),
        other => return Err(Error::config(format!("unknown preset {other:?}"))),
    };
    let split_fraction = ex.or("split_fraction", 0.8)?;
    let batch_size = ex.or("batch_size", default_batch(arch))?;
    let epochs = ex.or("epochs", default_epochs)?;
    let patience = ex.or("patience", default_patience)?;
    let learning_rate = ex.or("learning_rate", 0.01)?;
    ex.finish()?;

    let mut md = doc.reader("model");
    let mut model = ModelConfig::new(arch, image_shape, class_count);
    model.seed = seed;
    model.qubits_per_circuit = md.or("qubits_per_circuit", model.qubits_per_circuit)?;
    model.qks = md.or("qks", model.qks)?;
    if let Some(stages) = md.list::<String>("extractor")? {
        model.extractor = Some(stages.iter().map(|s| parse_stage(s)).collect::<Result<_>>()?);
    }
    model.head_hidden = md.list("head_hidden")?;
    md.finish()?;

    model.encoding = encoding_from_doc(doc)?;
    model.ansatz = ansatz_from_doc(doc, arch, seed)?;
    model.measurement = measurement_from_doc(doc, class_count)?;

    let cfg = ExperimentConfig {
        model,
        dataset_path,
        split_fraction,
        batch_size,
        epochs,
        patience,
        learning_rate,
        seed,
        metrics_out_path,
        checkpoint_path,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn encoding_from_doc(doc: &ConfigDoc) -> Result<EncodingSpec> {
    let mut r = doc.reader("encoding");
    let kind: EncodingKind = r.or("kind", EncodingKind::Amplitude)?;
    let layers = r.or("layers", 1)?;
    let ordering: OrderingKind = r.or("ordering", OrderingKind::Flatten)?;
    let ordering_seed = r.get("ordering_seed")?;
    r.finish()?;
    let spec = EncodingSpec::new(kind)
        .with_layers(layers)
        .with_ordering(ordering, ordering_seed);
    spec.validate()?;
    Ok(spec)
}

fn default_ansatz(arch: Arch) -> AnsatzKind {
    match arch {
        Arch::Qcnn => AnsatzKind::Qcnn,
        Arch::SeqnnTwoKernel => AnsatzKind::TwoKernel,
        Arch::SeqnnFc => AnsatzKind::SimplifiedTwoDesign,
        _ => AnsatzKind::NoEntanglement,
    }
}

fn ansatz_from_doc(doc: &ConfigDoc, arch: Arch, run_seed: u64) -> Result<AnsatzSpec> {
    let mut r = doc.reader("ansatz");
    let kind: AnsatzKind = r.or("kind", default_ansatz(arch))?;
    let layers = r.or("layers", 1)?;
    let seed: Option<u64> = r.get("seed")?;
    let fc_depth: FcDepth = r.or("fc_depth", FcDepth::Shallow)?;
    r.finish()?;
    let seed = match (kind, seed) {
        (AnsatzKind::NoEntanglement, s) => Some(s.unwrap_or(run_seed)),
        (_, Some(_)) => {
            return Err(Error::config("[ansatz] seed only applies to no_entanglement"));
        }
        (_, None) => None,
    };
    let spec = AnsatzSpec {
        kind,
        layers,
        seed,
        fc_depth,
    };
    spec.validate()?;
    Ok(spec)
}

fn measurement_from_doc(doc: &ConfigDoc, class_count: usize) -> Result<MeasurementSpec> {
    let mut r = doc.reader("measurement");
    let kind: MeasurementKind = r.or("kind", MeasurementKind::PauliZ)?;
    let qubits: Vec<usize> = r.list("qubits")?.unwrap_or_default();
    let strings: Vec<PauliString> = r.list("pauli_strings")?.unwrap_or_default();
    let pauli_seed = r.get("pauli_seed")?;
    r.finish()?;
    let mut spec = match kind {
        MeasurementKind::Histogram => MeasurementSpec::histogram(qubits, class_count),
        MeasurementKind::Paulis => {
            let mut m = MeasurementSpec::paulis(strings.clone());
            m.class_count = class_count;
            m
        }
        _ => MeasurementSpec::pauli(kind.axis().expect("single-qubit kind"), qubits, class_count),
    };
    if !strings.is_empty() && kind != MeasurementKind::Paulis {
        return Err(Error::config("[measurement] pauli_strings only apply to paulis"));
    }
    spec.pauli_seed = pauli_seed;
    Ok(spec)
}

/// Axes of the grid swept over; empty lists keep the base value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepGrid {
    pub encodings: Vec<EncodingKind>,
    pub ansaetze: Vec<AnsatzKind>,
    pub measurements: Vec<MeasurementKind>,
    pub orderings: Vec<OrderingKind>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub grid: SweepGrid,
    pub summary_path: PathBuf,
    /// Per-run metrics and checkpoints go here.
    pub runs_dir: PathBuf,
}

pub fn sweep_from_doc(doc: &ConfigDoc) -> Result<SweepConfig> {
    let base = experiment_from_doc(doc)?;
    let mut r = doc.reader("sweep");
    let grid = SweepGrid {
        encodings: r.list("encodings")?.unwrap_or_default(),
        ansaetze: r.list("ansaetze")?.unwrap_or_default(),
        measurements: r.list("measurements")?.unwrap_or_default(),
        orderings: r.list("orderings")?.unwrap_or_default(),
        seeds: r.list("seeds")?.unwrap_or_default(),
    };
    let summary_path = r.path("summary").unwrap_or_else(|| PathBuf::from("summary.csv"));
    let runs_dir = r.path("runs_dir").unwrap_or_else(|| {
        summary_path
            .parent()
            .map(|p| p.join("runs"))
            .unwrap_or_else(|| PathBuf::from("runs"))
    });
    r.finish()?;
    Ok(SweepConfig {
        base,
        grid,
        summary_path,
        runs_dir,
    })
}

/// `[data]` settings for synthetic dataset generation.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub path: PathBuf,
    pub image_shape: (usize, usize, usize),
    pub class_count: usize,
    pub per_class: usize,
    pub seed: u64,
}

pub fn synth_from_doc(doc: &ConfigDoc) -> Result<SynthConfig> {
    let mut r = doc.reader("data");
    let path = r
        .path("path")
        .ok_or_else(|| Error::config("[data] path is required"))?;
    let image_shape = parse_shape(&r.or("image_shape", "16,16,3".to_string())?)?;
    let class_count = r.or("class_count", 10)?;
    let per_class = r.or("per_class", 50)?;
    let seed = r.or("seed", 0)?;
    r.finish()?;
    Ok(SynthConfig {
        path,
        image_shape,
        class_count,
        per_class,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpressibilityConfig {
    pub variants: Vec<EncodingKind>,
    pub qubits: Vec<usize>,
    pub moments: Vec<u32>,
    pub pairs: usize,
    pub seed: u64,
    pub layers: usize,
    pub inputs: InputDistribution,
}

impl Default for ExpressibilityConfig {
    fn default() -> Self {
        ExpressibilityConfig {
            variants: vec![EncodingKind::QaoaX, EncodingKind::QaoaY, EncodingKind::QaoaZ],
            qubits: vec![4, 8],
            moments: vec![1, 2],
            pairs: 5000,
            seed: 0,
            layers: 1,
            inputs: InputDistribution::default(),
        }
    }
}

pub fn expressibility_from_doc(doc: &ConfigDoc) -> Result<ExpressibilityConfig> {
    let d = ExpressibilityConfig::default();
    let mut r = doc.reader("expressibility");
    let cfg = ExpressibilityConfig {
        variants: r.list("variants")?.unwrap_or(d.variants),
        qubits: r.list("qubits")?.unwrap_or(d.qubits),
        moments: r.list("moments")?.unwrap_or(d.moments),
        pairs: r.or("pairs", d.pairs)?,
        seed: r.or("seed", d.seed)?,
        layers: r.or("layers", d.layers)?,
        inputs: match r.or("inputs", "unit".to_string())?.as_str() {
            "unit" => InputDistribution::default(),
            "wide" => InputDistribution::wide(),
            other => return Err(Error::config(format!("unknown input distribution {other:?}"))),
        },
    };
    r.finish()?;
    Ok(cfg)
}
