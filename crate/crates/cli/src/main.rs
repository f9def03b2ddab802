use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpqc_core::bench::{
    self, experiment_from_doc, expressibility_from_doc, sweep_from_doc, synth_from_doc, ConfigDoc, ExperimentConfig,
};
use qpqc_core::encodings::{verify_kernel_locality, EncodingSpec};
use qpqc_core::expressibility::{estimate_frame_potential, haar_self_test, FramePotentialEstimate};
use qpqc_core::models::{build_model, Arch};
use qpqc_core::Error;

#[derive(Parser)]
#[command(name = "qpqc", version, about = "Quantum circuit classifiers: training, sweeps and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// INI configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (concurrent runs for `sweep`).
    #[arg(long, global = true, env = "QPQC_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic texture dataset described by `[data]`.
    SynthData,
    /// Train one model; `--out` sets the metrics CSV.
    Train,
    /// Run the configured grid; `--out` sets the summary CSV.
    Sweep,
    /// Evaluate the best checkpoint of a `train` run on the validation split.
    Eval {
        /// Checkpoint to load instead of the configured one.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Check two-qubit kernel locality for every position on 3..=8 qubits.
    VerifyAppendixA {
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Frame-potential ratios of the QAOA encodings against Haar.
    Expressibility,
    /// Trainable parameter counts of the configured model and its twin.
    ParamCount,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers.filter(|_| !matches!(cli.command, Command::Sweep)) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn doc(cli: &Cli) -> qpqc_core::Result<ConfigDoc> {
    match &cli.config {
        Some(p) => ConfigDoc::load(p),
        None => Ok(ConfigDoc::default()),
    }
}

fn require_doc(cli: &Cli) -> qpqc_core::Result<ConfigDoc> {
    match &cli.config {
        Some(p) => ConfigDoc::load(p),
        None => Err(Error::Config("--config is required".into())),
    }
}

fn experiment(cli: &Cli) -> qpqc_core::Result<ExperimentConfig> {
    let mut cfg = experiment_from_doc(&require_doc(cli)?)?;
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    Ok(cfg)
}

/// Writes to `--out` or stdout.
fn emit(out: Option<&Path>, text: &str) -> qpqc_core::Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let _ = io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> qpqc_core::Result<()> {
    match &cli.command {
        Command::SynthData => {
            let mut cfg = synth_from_doc(&require_doc(cli)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.path = o.clone();
            }
            let manifest = bench::synth_dataset(&cfg.path, cfg.image_shape, cfg.class_count, cfg.per_class, cfg.seed)?;
            println!("{}", manifest.display());
        }
        Command::Train => {
            let mut cfg = experiment(cli)?;
            if let Some(o) = &cli.out {
                cfg.metrics_out_path = o.clone();
            }
            let out = bench::train(&cfg)?;
            println!(
                "best epoch {} val_loss {} val_acc {} params {} quantum_params {}",
                out.best_epoch, out.best_val_loss, out.best_val_acc, out.param_count, out.quantum_param_count
            );
        }
        Command::Sweep => {
            let d = require_doc(cli)?;
            let mut cfg = sweep_from_doc(&d)?;
            if let Some(s) = cli.seed {
                cfg.base = cfg.base.with_seed(s);
            }
            if let Some(o) = &cli.out {
                cfg.summary_path = o.clone();
            }
            let rows = bench::sweep(&cfg, cli.workers.unwrap_or(1))?;
            let failed = rows.iter().filter(|r| r.status() != "ok").count();
            println!("{} runs, {} failed, summary {}", rows.len(), failed, cfg.summary_path.display());
        }
        Command::Eval { checkpoint } => {
            let cfg = experiment(cli)?;
            let ckpt = checkpoint.clone().unwrap_or_else(|| cfg.checkpoint());
            let ev = bench::eval_checkpoint(&cfg, &ckpt)?;
            let (p, r, f) = ev.macro_scores();
            let text = format!(
                "val_loss,val_acc,precision,recall,f1\n{},{},{},{},{}\n",
                ev.loss, ev.accuracy, p, r, f
            );
            emit(cli.out.as_deref(), &text)?;
        }
        Command::VerifyAppendixA { trials } => {
            let mut text = String::from("n_qubits,position,trials,passed,max_off_group\n");
            let mut all = true;
            for n in 3..=8 {
                for p in 0..=n - 2 {
                    let r = verify_kernel_locality(p, n, *trials)?;
                    all &= r.passed;
                    text.push_str(&format!("{n},{p},{},{},{:e}\n", r.trials, r.passed, r.max_off_group));
                }
            }
            emit(cli.out.as_deref(), &text)?;
            if !all {
                return Err(Error::State("kernel locality check failed".into()));
            }
            eprintln!("all positions passed");
        }
        Command::Expressibility => {
            let mut cfg = expressibility_from_doc(&doc(cli)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let mut text = String::from("variant,n_qubits,t,mean,std_error,ratio\n");
            let line = |name: &str, n: usize, e: &FramePotentialEstimate| {
                format!("{name},{n},{},{},{},{}\n", e.t, e.mean, e.std_error, e.ratio)
            };
            for &n in &cfg.qubits {
                for &t in &cfg.moments {
                    for &kind in &cfg.variants {
                        let spec = EncodingSpec::new(kind).with_layers(cfg.layers);
                        let e = estimate_frame_potential(&spec, n, t, cfg.pairs, cfg.seed, cfg.inputs)?;
                        text.push_str(&line(&kind.to_string(), n, &e));
                    }
                    let h = haar_self_test(n, t, cfg.pairs, cfg.seed)?;
                    text.push_str(&line("haar", n, &h));
                }
            }
            emit(cli.out.as_deref(), &text)?;
        }
        Command::ParamCount => {
            let cfg = experiment(cli)?;
            let model = build_model(&cfg.model)?;
            let mut text = String::from("arch,params,quantum_params\n");
            text.push_str(&format!("{},{},{}\n", cfg.model.arch, model.param_count(), model.quantum_param_count()));
            let twin = match cfg.model.arch {
                Arch::HqnnParallel => Some(Arch::ClassicalParallel),
                Arch::HqnnQuanv => Some(Arch::ClassicalQuanv),
                _ => None,
            };
            if let Some(arch) = twin {
                let mut m = cfg.model.clone();
                m.arch = arch;
                let t = build_model(&m)?;
                text.push_str(&format!("{arch},{},{}\n", t.param_count(), t.quantum_param_count()));
            }
            emit(cli.out.as_deref(), &text)?;
        }
    }
    Ok(())
}
