//! Experiment harness: configuration, datasets, training, sweeps.

pub mod config;
pub mod dataset;
pub mod metrics;
pub mod sweep;
pub mod train;

pub use config::{
    experiment_from_doc, expressibility_from_doc, sweep_from_doc, synth_from_doc, ConfigDoc,
    ExperimentConfig, ExpressibilityConfig, SweepConfig, SweepGrid, SynthConfig,
};
pub use dataset::{centroid_probe, load_dataset, load_dataset_split, read_dataset, split_dataset, synth_dataset, Dataset};
pub use metrics::{read_metrics, ConfusionMatrix, MetricsRecord, MetricsWriter};
pub use sweep::{expand_grid, read_summary, run_id, sweep, SummaryRow, SweepRun};
pub use train::{eval_checkpoint, evaluate, train, train_on, Evaluation, TrainOutcome};
