//! Synthetic instances and experiment runs.
//!
//! An experiment is a Cartesian grid over `p` and `μ`, each point repeated
//! with seeds `base_seed + repeat`. Every repeat at a grid point sees the
//! same data seed, so rows of the grid are directly comparable. Results are
//! written as plain CSV: `runs.csv`, `aggregate.csv`, one
//! `trajectory_<runid>.csv` per run and a `metadata.csv` naming the RNG.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composite::{spca_instance, ssc_instance, InstanceKind};
use crate::error::{Error, Result};
use crate::linalg::{gaussian, random_orthonormal, Mat};
use crate::manifold::ManifoldSpec;
use crate::solver::{solve, SolveReport, SolverConfig};

pub const RNG_NAME: &str = "ChaCha8Rng";
pub const RNG_CRATE: &str = "rand_chacha 0.9";

/// Stream used for SPCA initial points, distinct from the data stream.
const INIT_STREAM: u64 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `m × n` matrix of i.i.d. standard normals with zero column means.
pub fn gen_spca_data(m: usize, n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = gaussian(m, n, &mut rng);
    for mut col in b.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    b
}

/// Random point on `St(n, p)` drawn from the initial-point stream of `seed`.
pub fn spca_initial_point(n: usize, p: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    random_orthonormal(n, p, &mut rng)
}

#[derive(Debug, Clone)]
pub struct SscData {
    /// Normalized Laplacian `I − S^{-1/2} W S^{-1/2}`.
    pub laplacian: Mat,
    /// Eigenvectors of the `p` smallest eigenvalues of the Laplacian.
    pub x0: Mat,
}

/// `n` Gaussian points in `R^n`, affinity `W_ij = |⟨a_i, a_j⟩|` including the
/// diagonal, and the normalized Laplacian built from it.
pub fn gen_ssc_data(n: usize, p: usize, seed: u64) -> Result<SscData> {
    if p == 0 || p > n {
        return Err(Error::InvalidInput(format!("need 1 ≤ p ≤ n, got p={p}, n={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // columns are the data points
    let a = gaussian(n, n, &mut rng);
    let w = (a.transpose() * &a).abs();
    let mut scale = Vec::with_capacity(n);
    for (i, row) in w.row_iter().enumerate() {
        let s: f64 = row.sum();
        if !(s > 0.0) {
            return Err(Error::DegenerateAffinity { row: i });
        }
        scale.push(1.0 / s.sqrt());
    }
    let mut l = Mat::from_fn(n, n, |i, j| -scale[i] * w[(i, j)] * scale[j]);
    for i in 0..n {
        l[(i, i)] += 1.0;
    }
    // exact symmetry, independent of summation order above
    let l = (&l + l.transpose()) * 0.5;
    let eig = SymmetricEigen::new(l.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut x0 = Mat::zeros(n, p);
    for (col, &idx) in order.iter().take(p).enumerate() {
        x0.set_column(col, &eig.eigenvectors.column(idx));
    }
    Ok(SscData { laplacian: l, x0 })
}

/// Experiment grid and solver overrides. Deserialized from the `[experiment]`
/// and `[solver]` tables of a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: InstanceKind,
    /// Rows of `B` (SPCA only).
    pub m: usize,
    pub n: usize,
    pub p: Vec<usize>,
    pub mu: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub theta: f64,
    pub out: Option<PathBuf>,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
    pub trajectories: bool,
    /// Applied over the per-instance solver preset, keyed by
    /// [`SolverConfig`] field name.
    #[serde(skip)]
    pub solver: toml::Table,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::spca()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    experiment: ExperimentConfig,
    #[serde(default)]
    solver: toml::Table,
}

impl ExperimentConfig {
    pub fn spca() -> Self {
        Self {
            kind: InstanceKind::Spca,
            m: 50,
            n: 2000,
            p: vec![5, 15, 25, 35, 45],
            mu: vec![0.5],
            repeats: 20,
            seed: 0,
            theta: 0.3,
            out: None,
            threads: None,
            trajectories: true,
            solver: toml::Table::new(),
        }
    }

    pub fn ssc() -> Self {
        Self {
            kind: InstanceKind::Ssc,
            m: 0,
            n: 500,
            p: vec![5, 10, 15, 20],
            repeats: 50,
            ..Self::spca()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = file.experiment;
        cfg.solver = file.solver;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.p.is_empty() || self.mu.is_empty() {
            return Err(Error::Config("p and mu grids must be nonempty".into()));
        }
        if self.n == 0 || (self.kind == InstanceKind::Spca && self.m == 0) {
            return Err(Error::Config("dimensions must be positive".into()));
        }
        if let Some(&p) = self.p.iter().find(|&&p| p == 0 || p > self.n) {
            return Err(Error::Config(format!("p = {p} outside 1..={}", self.n)));
        }
        if let Some(&mu) = self.mu.iter().find(|&&mu| !(mu > 0.0)) {
            return Err(Error::Config(format!("mu must be positive, got {mu}")));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        for p in &self.p {
            self.solver_config(*p)?;
        }
        Ok(())
    }

    /// Instance preset for `p` with the `[solver]` overrides applied.
    pub fn solver_config(&self, p: usize) -> Result<SolverConfig> {
        let preset = match self.kind {
            InstanceKind::Spca => SolverConfig::for_spca(self.n, p),
            InstanceKind::Ssc => SolverConfig::for_ssc(p),
        };
        if self.solver.is_empty() {
            return Ok(preset);
        }
        let mut table = toml::Table::try_from(&preset).map_err(|e| Error::Config(e.to_string()))?;
        for (key, value) in &self.solver {
            table.insert(key.clone(), value.clone());
        }
        let cfg: SolverConfig = table
            .try_into()
            .map_err(|e| Error::Config(format!("[solver]: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `(p, μ)` grid points in output order.
    pub fn grid(&self) -> Vec<(usize, f64)> {
        self.p
            .iter()
            .flat_map(|&p| self.mu.iter().map(move |&mu| (p, mu)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub kind: InstanceKind,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub mu: f64,
    pub repeat: usize,
    pub seed: u64,
    pub objective: f64,
    pub residual: f64,
    pub seconds: f64,
    pub iterations: usize,
    pub proj_count: usize,
    pub termination: String,
    pub failure: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub p: usize,
    pub mu: f64,
    pub runs: usize,
    pub converged: usize,
    pub objective: f64,
    pub seconds: f64,
    pub iterations: f64,
    pub proj_count: f64,
}

/// One trajectory row; `cumulative_proj` counts projection activations up to
/// and including iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub objective: f64,
    pub residual: f64,
    pub h_norm: f64,
    pub t: f64,
    pub delta: f64,
    pub eta: f64,
    pub tau: f64,
    pub backtracks: usize,
    pub cumulative_proj: usize,
}

pub fn trajectory(report: &SolveReport) -> Vec<TrajectoryRow> {
    let mut cumulative = 0;
    report
        .records
        .iter()
        .map(|r| {
            cumulative += r.projected as usize;
            TrajectoryRow {
                k: r.k,
                objective: r.objective,
                residual: r.residual,
                h_norm: r.h_norm,
                t: r.t,
                delta: r.delta,
                eta: r.eta,
                tau: r.tau,
                backtracks: r.backtracks,
                cumulative_proj: cumulative,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub trajectories: Vec<(String, Vec<TrajectoryRow>)>,
}

pub fn run_id(p: usize, mu: f64, repeat: usize) -> String {
    format!("p{p}_mu{mu}_r{repeat}")
}

struct RunOutput {
    record: RunRecord,
    trajectory: Vec<TrajectoryRow>,
}

fn run_one(cfg: &ExperimentConfig, p: usize, mu: f64, repeat: usize) -> RunOutput {
    let seed = cfg.seed.wrapping_add(repeat as u64);
    let mut record = RunRecord {
        run_id: run_id(p, mu, repeat),
        kind: cfg.kind,
        m: if cfg.kind == InstanceKind::Spca { cfg.m } else { 0 },
        n: cfg.n,
        p,
        mu,
        repeat,
        seed,
        objective: f64::NAN,
        residual: f64::NAN,
        seconds: 0.0,
        iterations: 0,
        proj_count: 0,
        termination: "error".into(),
        failure: String::new(),
    };
    let outcome = (|| -> Result<SolveReport> {
        let solver_cfg = cfg.solver_config(p)?;
        let (problem, x0) = match cfg.kind {
            InstanceKind::Spca => {
                let b = gen_spca_data(cfg.m, cfg.n, seed);
                (
                    spca_instance(&b, mu, cfg.theta, p)?,
                    spca_initial_point(cfg.n, p, seed),
                )
            }
            InstanceKind::Ssc => {
                let data = gen_ssc_data(cfg.n, p, seed)?;
                (ssc_instance(&data.laplacian, mu, cfg.theta, p)?, data.x0)
            }
        };
        let manifold = ManifoldSpec::stiefel(cfg.n, p, cfg.theta)?;
        let start = Instant::now();
        let mut report = solve(&problem, &manifold, &solver_cfg, &x0)?;
        report.seconds = start.elapsed().as_secs_f64();
        Ok(report)
    })();
    match outcome {
        Ok(report) => {
            record.objective = report.objective;
            record.residual = report.final_residual();
            record.seconds = report.seconds;
            record.iterations = report.iterations();
            record.proj_count = report.proj_count;
            record.termination = report.termination.to_string();
            record.failure = report.failure.clone().unwrap_or_default();
            let trajectory = if cfg.trajectories {
                trajectory(&report)
            } else {
                Vec::new()
            };
            RunOutput { record, trajectory }
        }
        Err(e) => {
            record.failure = e.to_string();
            RunOutput {
                record,
                trajectory: Vec::new(),
            }
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Means of each numeric column per grid point, over all repeats.
pub fn aggregate(grid: &[(usize, f64)], runs: &[RunRecord]) -> Vec<AggregateRow> {
    grid.iter()
        .map(|&(p, mu)| {
            let rows: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.p == p && r.mu.to_bits() == mu.to_bits())
                .collect();
            AggregateRow {
                p,
                mu,
                runs: rows.len(),
                converged: rows.iter().filter(|r| r.termination == "residual").count(),
                objective: mean(rows.iter().map(|r| r.objective)),
                seconds: mean(rows.iter().map(|r| r.seconds)),
                iterations: mean(rows.iter().map(|r| r.iterations as f64)),
                proj_count: mean(rows.iter().map(|r| r.proj_count as f64)),
            }
        })
        .collect()
}

/// Runs every `(grid point, repeat)` pair and, if `cfg.out` is set, writes
/// the CSV outputs there. Solver failures are recorded, not propagated.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = cfg.grid();
    let jobs: Vec<(usize, f64, usize)> = grid
        .iter()
        .flat_map(|&(p, mu)| (0..cfg.repeats).map(move |r| (p, mu, r)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    // collect preserves job order regardless of scheduling
    let outputs: Vec<RunOutput> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, mu, r)| run_one(cfg, p, mu, r))
            .collect()
    });

    let mut runs = Vec::with_capacity(outputs.len());
    let mut trajectories = Vec::new();
    for out in outputs {
        if cfg.trajectories && !out.trajectory.is_empty() {
            trajectories.push((out.record.run_id.clone(), out.trajectory));
        }
        runs.push(out.record);
    }
    let aggregate = aggregate(&grid, &runs);
    let result = ExperimentResult {
        runs,
        aggregate,
        trajectories,
    };
    if let Some(dir) = &cfg.out {
        write_outputs(dir, cfg, &result)?;
    }
    Ok(result)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("cannot parse {s:?} as a number")))
}

fn parse_u<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("cannot parse {s:?} as an integer")))
}

pub const RUNS_HEADER: [&str; 15] = [
    "run_id",
    "kind",
    "m",
    "n",
    "p",
    "mu",
    "repeat",
    "seed",
    "objective",
    "residual",
    "seconds",
    "iterations",
    "proj_count",
    "termination",
    "failure",
];

pub const AGGREGATE_HEADER: [&str; 8] = [
    "p",
    "mu",
    "runs",
    "converged",
    "objective",
    "seconds",
    "iterations",
    "proj_count",
];

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "k",
    "objective",
    "residual",
    "h_norm",
    "t",
    "delta",
    "eta",
    "tau",
    "backtracks",
    "cumulative_proj",
];

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

pub fn write_runs_csv(path: &Path, runs: &[RunRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RUNS_HEADER)?;
    for r in runs {
        w.write_record([
            r.run_id.clone(),
            r.kind.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            fmt_f(r.mu),
            r.repeat.to_string(),
            r.seed.to_string(),
            fmt_f(r.objective),
            fmt_f(r.residual),
            fmt_f(r.seconds),
            r.iterations.to_string(),
            r.proj_count.to_string(),
            r.termination.clone(),
            r.failure.clone(),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.p.to_string(),
            fmt_f(r.mu),
            r.runs.to_string(),
            r.converged.to_string(),
            fmt_f(r.objective),
            fmt_f(r.seconds),
            fmt_f(r.iterations),
            fmt_f(r.proj_count),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            fmt_f(r.objective),
            fmt_f(r.residual),
            fmt_f(r.h_norm),
            fmt_f(r.t),
            fmt_f(r.delta),
            fmt_f(r.eta),
            fmt_f(r.tau),
            r.backtracks.to_string(),
            r.cumulative_proj.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

fn write_metadata(path: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let lines = [
        (
            "package",
            format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        ),
        ("rng", RNG_NAME.to_string()),
        ("rng_crate", RNG_CRATE.to_string()),
        ("kind", cfg.kind.to_string()),
        ("base_seed", cfg.seed.to_string()),
        ("seed_rule", "base_seed + repeat".to_string()),
        ("repeats", cfg.repeats.to_string()),
        ("theta", fmt_f(cfg.theta)),
    ];
    writeln!(w, "key,value").map_err(io_err(path))?;
    for (k, v) in lines {
        writeln!(w, "{k},{v}").map_err(io_err(path))?;
    }
    for (k, v) in &cfg.solver {
        writeln!(w, "solver.{k},{}", v.to_string().replace(',', ";")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_runs_csv(&dir.join("runs.csv"), &result.runs)?;
    write_aggregate_csv(&dir.join("aggregate.csv"), &result.aggregate)?;
    for (id, rows) in &result.trajectories {
        write_trajectory_csv(&dir.join(format!("trajectory_{id}.csv")), rows)?;
    }
    write_metadata(&dir.join("metadata.csv"), cfg)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().has_headers(true).from_path(path)?)
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rows = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let kind = match f(1) {
            "spca" => InstanceKind::Spca,
            "ssc" => InstanceKind::Ssc,
            other => return Err(Error::InvalidInput(format!("unknown kind {other:?}"))),
        };
        rows.push(RunRecord {
            run_id: f(0).to_string(),
            kind,
            m: parse_u(f(2))?,
            n: parse_u(f(3))?,
            p: parse_u(f(4))?,
            mu: parse_f(f(5))?,
            repeat: parse_u(f(6))?,
            seed: parse_u(f(7))?,
            objective: parse_f(f(8))?,
            residual: parse_f(f(9))?,
            seconds: parse_f(f(10))?,
            iterations: parse_u(f(11))?,
            proj_count: parse_u(f(12))?,
            termination: f(13).to_string(),
            failure: f(14).to_string(),
        });
    }
    Ok(rows)
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut rows = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(AggregateRow {
            p: parse_u(f(0))?,
            mu: parse_f(f(1))?,
            runs: parse_u(f(2))?,
            converged: parse_u(f(3))?,
            objective: parse_f(f(4))?,
            seconds: parse_f(f(5))?,
            iterations: parse_f(f(6))?,
            proj_count: parse_f(f(7))?,
        });
    }
    Ok(rows)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(TrajectoryRow {
            k: parse_u(f(0))?,
            objective: parse_f(f(1))?,
            residual: parse_f(f(2))?,
            h_norm: parse_f(f(3))?,
            t: parse_f(f(4))?,
            delta: parse_f(f(5))?,
            eta: parse_f(f(6))?,
            tau: parse_f(f(7))?,
            backtracks: parse_u(f(8))?,
            cumulative_proj: parse_u(f(9))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: InstanceKind) -> ExperimentConfig {
        let base = match kind {
            InstanceKind::Spca => ExperimentConfig {
                m: 10,
                n: 20,
                p: vec![2],
                ..ExperimentConfig::spca()
            },
            InstanceKind::Ssc => ExperimentConfig {
                n: 20,
                p: vec![2],
                ..ExperimentConfig::ssc()
            },
        };
        ExperimentConfig {
            repeats: 1,
            seed: 3,
            threads: Some(1),
            ..base
        }
    }

    #[test]
    fn spca_data_is_deterministic_and_centered() {
        let a = gen_spca_data(7, 11, 5);
        let b = gen_spca_data(7, 11, 5);
        assert_eq!(a, b);
        assert_ne!(a, gen_spca_data(7, 11, 6));
        for col in a.column_iter() {
            assert!(col.mean().abs() < 1e-12);
        }
    }

    #[test]
    fn spca_data_variance() {
        let b = gen_spca_data(100, 1000, 1);
        let var = b.iter().map(|v| v * v).sum::<f64>() / (b.len() - 1000) as f64;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn initial_point_is_orthonormal_and_independent_of_data_stream() {
        let x = spca_initial_point(30, 4, 9);
        assert!((x.transpose() * &x - Mat::identity(4, 4)).norm() < 1e-12);
        assert_eq!(x, spca_initial_point(30, 4, 9));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_ne!(x, random_orthonormal(30, 4, &mut rng));
    }

    #[test]
    fn ssc_data_properties() {
        let data = gen_ssc_data(40, 3, 2).unwrap();
        let l = &data.laplacian;
        assert!((l - l.transpose()).norm() < 1e-12);
        let x = &data.x0;
        assert!((x.transpose() * x - Mat::identity(3, 3)).norm() < 1e-10);
        assert_eq!(l, &gen_ssc_data(40, 3, 2).unwrap().laplacian);
        // ⟨x, Lx⟩ as a matrix product and as an explicit double sum
        let v = Mat::from_fn(40, 1, |i, _| ((i * 7 + 3) % 11) as f64 - 5.0);
        let direct = (v.transpose() * l * &v)[(0, 0)];
        let mut summed = 0.0;
        for i in 0..40 {
            for j in 0..40 {
                summed += v[i] * l[(i, j)] * v[j];
            }
        }
        assert!((direct - summed).abs() <= 1e-10 * (1.0 + direct.abs()));
        // X0 spans the bottom of the spectrum
        let eig = SymmetricEigen::new(l.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        let trace = (x.transpose() * l * x).trace();
        assert!((trace - vals[..3].iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn ssc_rejects_bad_p() {
        assert!(gen_ssc_data(5, 0, 1).is_err());
        assert!(gen_ssc_data(5, 6, 1).is_err());
    }

    #[test]
    fn config_parsing_and_overrides() {
        let cfg = ExperimentConfig::from_toml_str(
            "[experiment]\nkind = \"ssc\"\nn = 30\np = [2, 3]\nmu = [0.2, 0.4]\nrepeats = 2\n\n[solver]\nepsilon = 1e-6\nmax_outer = 17\n",
        )
        .unwrap();
        assert_eq!(cfg.kind, InstanceKind::Ssc);
        assert_eq!(cfg.grid(), vec![(2, 0.2), (2, 0.4), (3, 0.2), (3, 0.4)]);
        let s = cfg.solver_config(3).unwrap();
        assert_eq!(s.epsilon, 1e-6);
        assert_eq!(s.max_outer, 17);
        assert_eq!(s.delta_c2, 3.0);
        assert!(ExperimentConfig::from_toml_str("[experiment]\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[solver]\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[solver]\ngamma = 2.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[experiment]\nrepeats = 0\n").is_err());
    }

    #[test]
    fn single_run_gives_single_record() {
        for kind in [InstanceKind::Spca, InstanceKind::Ssc] {
            let result = run_experiment(&tiny(kind)).unwrap();
            assert_eq!(result.runs.len(), 1);
            assert_eq!(result.aggregate.len(), 1);
            assert_eq!(result.runs[0].termination, "residual", "{:?}", result.runs[0]);
        }
    }

    #[test]
    fn aggregate_is_mean_of_runs() {
        let cfg = ExperimentConfig {
            repeats: 3,
            mu: vec![0.3, 0.6],
            ..tiny(InstanceKind::Spca)
        };
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.runs.len(), 6);
        for row in &result.aggregate {
            let objs: Vec<f64> = result
                .runs
                .iter()
                .filter(|r| r.mu == row.mu)
                .map(|r| r.objective)
                .collect();
            let m = objs.iter().sum::<f64>() / objs.len() as f64;
            assert!((row.objective - m).abs() < 1e-12);
            assert_eq!(row.runs, 3);
        }
    }

    #[test]
    fn csv_round_trip_and_rerun_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            repeats: 2,
            threads: Some(2),
            out: Some(dir.path().to_path_buf()),
            ..tiny(InstanceKind::Spca)
        };
        let first = run_experiment(&cfg).unwrap();
        let runs = read_runs_csv(&dir.path().join("runs.csv")).unwrap();
        assert_eq!(runs, first.runs);
        let agg = read_aggregate_csv(&dir.path().join("aggregate.csv")).unwrap();
        assert_eq!(agg, first.aggregate);
        for (id, rows) in &first.trajectories {
            let back = read_trajectory_csv(&dir.path().join(format!("trajectory_{id}.csv"))).unwrap();
            assert_eq!(&back, rows);
        }
        let second = run_experiment(&ExperimentConfig {
            out: None,
            threads: Some(1),
            ..cfg
        })
        .unwrap();
        for (a, b) in first.runs.iter().zip(&second.runs) {
            assert_eq!(
                RunRecord {
                    seconds: 0.0,
                    ..a.clone()
                },
                RunRecord {
                    seconds: 0.0,
                    ..b.clone()
                }
            );
        }
        assert_eq!(first.trajectories, second.trajectories);
    }

    #[test]
    fn unconverged_runs_are_recorded() {
        let mut cfg = tiny(InstanceKind::Spca);
        cfg.solver.insert("max_outer".into(), toml::Value::Integer(2));
        cfg.solver.insert("epsilon".into(), toml::Value::Float(1e-300));
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.runs[0].termination, "max_outer");
        assert!(result.runs[0].objective.is_finite());
    }

    #[test]
    fn trajectory_counts_projections() {
        let cfg = tiny(InstanceKind::Spca);
        let result = run_experiment(&cfg).unwrap();
        let rows = &result.trajectories[0].1;
        assert_eq!(rows.last().unwrap().cumulative_proj, result.runs[0].proj_count);
        assert!(rows
            .windows(2)
            .all(|w| w[0].cumulative_proj <= w[1].cumulative_proj));
    }
}
