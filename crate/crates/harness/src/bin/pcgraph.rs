use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pcgraph::topology::{format_kinds, parse_kinds};
use pcgraph::{cost_report, ActivationKind, Backend, InferenceConfig, InitMode, LayerSpec, PredictionConvention};
use pcgraph_harness::config::{EvalSolver, InitChoice};
use pcgraph_harness::dataset::{load_csv, two_moons, xor};
use pcgraph_harness::model::{evaluate, initialize, Predictor};
use pcgraph_harness::verify::{self, Suite};
use pcgraph_harness::{Checkpoint, HarnessError, Result, RunConfig};

#[derive(Parser)]
#[command(name = "pcgraph", version, about = "Train, evaluate and verify predictive coding graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a TOML run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Seed for weight init, data split and shuffling; overrides model.seed.
        #[arg(long)]
        seed: u64,
        /// Override a config entry, e.g. `--set training.epochs=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate a checkpoint on a CSV dataset in testing mode.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        step_size: f64,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Run numerical verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report predicted and measured inference cost for a topology.
    Cost {
        /// Comma-separated layer widths.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value = "forward")]
        connections: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a seeded toy dataset as CSV.
    GenData {
        #[arg(long, value_enum)]
        kind: DataKind,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Exact,
    Gradientdescent,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Xor,
    TwoMoons,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { config, seed, mut overrides } => {
            overrides.push(format!("model.seed={seed}"));
            let cfg = RunConfig::load(&config, &overrides)?;
            let out = pcgraph_harness::train(&cfg)?;
            if let Some(last) = out.metrics.last() {
                println!(
                    "epoch {} energy {} train_acc {} test_acc {}",
                    last.epoch, last.energy, last.train_acc, last.test_acc
                );
            }
            if let Some(p) = &cfg.output.checkpoint {
                println!("checkpoint: {}", p.display());
            }
            if let Some(p) = &cfg.output.metrics {
                println!("metrics: {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { checkpoint, data, solver, steps, step_size, tolerance } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let model = ck.model()?;
            let data = load_csv(&data)?;
            let predictor = Predictor {
                solver: match solver {
                    SolverArg::Auto => EvalSolver::Auto,
                    SolverArg::Exact => EvalSolver::Exact,
                    SolverArg::Gradientdescent => EvalSolver::GradientDescent,
                },
                init: InitChoice::FeedForward,
                descent: InferenceConfig::gradient_descent(steps, step_size).with_tolerance(tolerance),
                seed: ck.seed,
            };
            let report = evaluate(&model, &data, &predictor)?;
            println!("samples: {}", data.len());
            println!("accuracy: {}", report.accuracy);
            println!("mean_error: {}", report.mean_error);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, seed } => {
            let suites = if suite.trim().eq_ignore_ascii_case("all") {
                Suite::ALL.to_vec()
            } else {
                suite.split(',').map(str::parse).collect::<Result<Vec<Suite>>>()?
            };
            let mut ok = true;
            for s in suites {
                for check in verify::run(s, seed) {
                    ok &= check.passed;
                    println!("[{}] {check}", s.tag());
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Cost { sizes, connections, steps, seed } => {
            let spec = LayerSpec::new(sizes)?;
            let kinds = parse_kinds(&connections)?;
            let model = initialize(&spec, &kinds, ActivationKind::Tanh, PredictionConvention::MatrixActivation, 1.0, seed)?;
            let report = cost_report(&spec, model.mask(), steps);
            let cfg = InferenceConfig::gradient_descent(steps, 0.01)
                .with_tolerance(0.0)
                .with_init(InitMode::Gaussian { std: 0.1, seed })
                .with_backend(Backend::Sparse);
            let x = ndarray::Array1::zeros(spec.input_width());
            let measured = model.infer(&x, None, &cfg)?;
            println!("connections: {}", format_kinds(&kinds));
            println!("nodes: {}", report.node_count);
            println!("nonzeros: {}", report.nonzeros);
            println!("steps: {}", report.steps);
            println!("madds_per_nonzero: {}", report.madds_per_nonzero);
            println!("dense_ops: {}", report.dense_ops);
            println!("sparse_ops: {}", report.sparse_ops);
            println!("fnn_ops: {}", report.fnn_ops);
            println!("measured_madds: {}", measured.madds);
            if measured.madds != report.sparse_ops {
                eprintln!("measured count differs from the model");
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenData { kind, samples, noise, seed, out } => {
            let data = match kind {
                DataKind::Xor => xor(),
                DataKind::TwoMoons => two_moons(samples, noise, seed),
            };
            data.save_csv(&out)?;
            println!("wrote {} samples to {}", data.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &HarnessError) -> u8 {
    e.exit_code() as u8
}
