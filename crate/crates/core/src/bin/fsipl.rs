use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fsipl::harness::{run_experiment, ExperimentConfig};
use fsipl::oracles::selftest;
use fsipl::InstanceKind;

#[derive(Parser)]
#[command(
    name = "fsipl",
    version,
    about = "Safeguarded proximal linearized solver benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse PCA experiment on synthetic Gaussian data.
    Spca(GridArgs),
    /// Sparse spectral clustering experiment on synthetic Gaussian data.
    Ssc(GridArgs),
    /// Experiment described by a TOML config file.
    Solve(GridArgs),
    /// Oracle self-checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Termination tolerance on the residual.
    #[arg(long)]
    eps: Option<f64>,
    /// Maximum outer iterations.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file whose values are overridden by the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the per-run trajectory files.
    #[arg(long)]
    no_trajectories: bool,
}

impl GridArgs {
    fn apply(self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.eps {
            cfg.solver.insert("epsilon".into(), toml::Value::Float(v));
        }
        if let Some(v) = self.max_iter {
            cfg.solver
                .insert("max_outer".into(), toml::Value::Integer(v as i64));
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.no_trajectories {
            cfg.trajectories = false;
        }
        cfg
    }
}

fn experiment(kind: Option<InstanceKind>, args: GridArgs) -> fsipl::Result<()> {
    let mut base = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => match kind {
            Some(InstanceKind::Ssc) => ExperimentConfig::ssc(),
            _ => ExperimentConfig::spca(),
        },
    };
    if let Some(kind) = kind {
        if args.config.is_some() && base.kind != kind {
            return Err(fsipl::Error::Config(format!(
                "config file describes a {} experiment, not {kind}",
                base.kind
            )));
        }
        base.kind = kind;
    }
    let cfg = args.apply(base);
    if cfg.out.is_none() {
        eprintln!("no --out given; results are printed only");
    }
    let result = run_experiment(&cfg)?;
    println!("p,mu,runs,converged,objective,seconds,iterations,proj_count");
    for row in &result.aggregate {
        println!(
            "{},{},{},{},{:.6},{:.3},{:.1},{:.1}",
            row.p,
            row.mu,
            row.runs,
            row.converged,
            row.objective,
            row.seconds,
            row.iterations,
            row.proj_count
        );
    }
    for run in result.runs.iter().filter(|r| !r.failure.is_empty()) {
        eprintln!("{}: {}", run.run_id, run.failure);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Spca(args) => experiment(Some(InstanceKind::Spca), args),
        Command::Ssc(args) => experiment(Some(InstanceKind::Ssc), args),
        Command::Solve(args) if args.config.is_none() => {
            Err(fsipl::Error::Config("solve requires --config FILE".into()))
        }
        Command::Solve(args) => experiment(None, args),
        Command::Selftest { seed } => {
            let checks = selftest(seed);
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(fsipl::Error::OracleFailure("self-test failed".into()))
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
