//! Command-line front end: `decompose`, `eval`, `synth` and `trace`.
//!
//! Exit codes: 0 success (converged), 1 usage, configuration or I/O error,
//! 2 decomposition stopped at the iteration cap (outputs are still written).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::dataio::{
    load_ground_truth, load_sequence, read_manifest, read_mask_dir, read_trace, split_by_manifest,
    to_observation, write_results, DatasetLayout, LoadOptions, RunSummary,
};
use crate::eval::{evaluate_masks, report_rows, write_metrics_csv};
use crate::observation::ObservationMatrix;
use crate::solver::{solve_sml, solve_uml, DecompositionResult, SmlProblem, SolverConfig};
use crate::synth::{generate, read_spec, write_dataset};
use crate::weights::Connectivity;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gflbs",
    version,
    about = "Low-rank + fused-lasso background subtraction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a frame sequence into background and foreground masks.
    Decompose(DecomposeArgs),
    /// Score foreground masks against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic dataset from a JSON spec.
    Synth(SynthArgs),
    /// Print the convergence trace of a previous run.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Uml,
    Sml,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Uml => "uml",
            Mode::Sml => "sml",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DecomposeArgs {
    /// JSON file with flat keys named like the flags; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// uml decomposes all frames; sml codes mixed frames over known background frames (default: uml).
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Directory of frames, or a dataset root when --layout is set.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Pure background frames, one file name per line (sml mode).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Run directory for background/, mask/, trace.json and run.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset directory convention (default: generic).
    #[arg(long, value_enum)]
    pub layout: Option<DatasetLayout>,
    /// Sparsity weight, positive (default: 1/sqrt(max(pixels, frames))).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fusion weight relative to sparsity (default: 1).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Intensity scale of the edge weights, pixels in [0, 1] (default: 0.05).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Initial penalty (default: 1.25 / spectral norm of the data).
    #[arg(long)]
    pub mu0: Option<f64>,
    /// Penalty growth factor, greater than 1 (default: 1.5).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Penalty cap (default: 1e7 * mu0).
    #[arg(long = "mu-max")]
    pub mu_max: Option<f64>,
    /// Stop once the relative residual reaches this (default: 1e-7).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Outer iteration limit; hitting it exits with code 2 (default: 100).
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Inner iterations of the sml coefficient step (default: 200).
    #[arg(long = "fista-iters")]
    pub fista_iters: Option<usize>,
    /// Integer box-filter downscale factor (default: 1).
    #[arg(long)]
    pub downscale: Option<usize>,
    /// Pixel neighborhood, 4 or 8 (default: 4).
    #[arg(long)]
    pub connectivity: Option<u32>,
    /// A pixel is foreground when |F| exceeds this (default: 0).
    #[arg(long = "mask-eps")]
    pub mask_eps: Option<f64>,
    /// Worker threads for the per-frame steps (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Recorded in run.json; the solver itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl DecomposeArgs {
    /// Fills unset flags from the config file, if any.
    fn with_config_file(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)
            .with_context(|| format!("--config: cannot read {}", path.display()))?;
        let file: DecomposeArgs = serde_json::from_str(&text)
            .with_context(|| format!("--config: invalid JSON in {}", path.display()))?;
        merge_fields!(
            self,
            file,
            mode,
            input,
            manifest,
            out,
            layout,
            lambda,
            rho,
            sigma,
            mu0,
            beta,
            mu_max,
            tol,
            max_iters,
            fista_iters,
            downscale,
            connectivity,
            mask_eps,
            workers,
            seed
        );
        Ok(self)
    }
}

/// Fully resolved decomposition run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: PathBuf,
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub layout: DatasetLayout,
    pub solver: SolverConfig,
    pub mask_eps: f64,
    pub downscale: usize,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_args(args: DecomposeArgs) -> Result<Self> {
        let a = args.with_config_file()?;
        let mode = a.mode.unwrap_or(Mode::Uml);
        let input = a.input.ok_or_else(|| anyhow!("--input is required"))?;
        let out = a.out.ok_or_else(|| anyhow!("--out is required"))?;
        if mode == Mode::Sml && a.manifest.is_none() {
            bail!("--manifest is required with --mode sml");
        }
        if let Some(l) = a.lambda {
            if !(l.is_finite() && l > 0.0) {
                bail!("--lambda must be positive, got {l}");
            }
        }
        let defaults = SolverConfig::default();
        let connectivity = match a.connectivity {
            Some(c) => Connectivity::from_count(c).map_err(|e| anyhow!("--connectivity: {e}"))?,
            None => defaults.connectivity,
        };
        let solver = SolverConfig {
            lambda: a.lambda,
            rho: a.rho.unwrap_or(defaults.rho),
            sigma: a.sigma.unwrap_or(defaults.sigma),
            mu0: a.mu0,
            beta: a.beta.unwrap_or(defaults.beta),
            mu_max: a.mu_max,
            tol: a.tol.unwrap_or(defaults.tol),
            max_outer_iters: a.max_iters.unwrap_or(defaults.max_outer_iters),
            fista_iters: a.fista_iters.unwrap_or(defaults.fista_iters),
            connectivity,
        };
        solver.validate().context("invalid solver flags")?;
        let mask_eps = a.mask_eps.unwrap_or(0.0);
        if !(mask_eps.is_finite() && mask_eps >= 0.0) {
            bail!("--mask-eps must be nonnegative, got {mask_eps}");
        }
        let downscale = a.downscale.unwrap_or(1);
        if downscale == 0 {
            bail!("--downscale must be at least 1");
        }
        if a.workers == Some(0) {
            bail!("--workers must be at least 1");
        }
        Ok(RunConfig {
            mode,
            input,
            manifest: a.manifest,
            out,
            layout: a.layout.unwrap_or_default(),
            solver,
            mask_eps,
            downscale,
            workers: a.workers,
            seed: a.seed,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of binary mask images (e.g. `<run>/mask`).
    #[arg(long)]
    pub masks: PathBuf,
    /// Dataset root holding the ground truth.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = DatasetLayout::Generic)]
    pub layout: DatasetLayout,
    #[arg(long, default_value_t = 1)]
    pub downscale: usize,
    /// Sequence name in the report (default: the ground-truth directory name).
    #[arg(long)]
    pub sequence: Option<String>,
    /// Run directory holding run.json (default: parent of --masks).
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Synthetic sequence spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    /// Run directory or trace.json path.
    pub run: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        // A closed stdout (e.g. `gflbs trace run | head`) is not a failure.
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Decompose(a) => cmd_decompose(RunConfig::from_args(a)?),
        Command::Eval(a) => cmd_eval(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Trace(a) => cmd_trace(&a),
    }
}

fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot start worker pool")?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn cmd_decompose(cfg: RunConfig) -> Result<i32> {
    let opts = LoadOptions {
        downscale: cfg.downscale,
        layout: cfg.layout,
    };
    let seq = load_sequence(&cfg.input, &opts).context("--input")?;
    let started = Instant::now();

    let (result, stems, training): (DecompositionResult, Vec<String>, Vec<String>) = match cfg.mode
    {
        Mode::Uml => {
            let obs = to_observation(&seq)?;
            let res = with_workers(cfg.workers, || solve_uml(&obs, &cfg.solver))??;
            (res, seq.source_names.clone(), Vec::new())
        }
        Mode::Sml => {
            let manifest = cfg.manifest.as_deref().expect("validated in RunConfig");
            let entries = read_manifest(manifest).context("--manifest")?;
            let (train_idx, mixed_idx) =
                split_by_manifest(&seq, &entries, manifest).context("--manifest")?;
            let train = seq.select(&train_idx);
            let mixed = seq.select(&mixed_idx);
            let prob = SmlProblem::new(to_observation(&train)?, to_observation(&mixed)?)?;
            let res = with_workers(cfg.workers, || solve_sml(&prob, &cfg.solver))??;
            (res, mixed.source_names, train.source_names)
        }
    };
    let runtime = started.elapsed().as_secs_f64();

    write_results(
        &result,
        seq.width,
        seq.height,
        &stems,
        &cfg.out,
        cfg.mask_eps,
    )
    .context("--out")?;
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: cfg.mode.as_str().to_string(),
        converged: result.converged,
        iterations: result.iterations(),
        final_residual: result.final_residual(),
        lambda: result.lambda,
        runtime_seconds: runtime,
        frames: stems,
        training_frames: training,
        training_rank: result.training_rank,
    };
    let run_path = cfg.out.join("run.json");
    fs::write(&run_path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("--out: cannot write {}", run_path.display()))?;

    eprintln!(
        "{} after {} iterations (residual {:.3e}, {:.2}s)",
        if result.converged {
            "converged"
        } else {
            "stopped without converging"
        },
        result.iterations(),
        result.final_residual().unwrap_or(0.0),
        runtime
    );
    Ok(if result.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn read_summary(dir: &Path) -> Option<RunSummary> {
    let text = fs::read_to_string(dir.join("run.json")).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let masks = read_mask_dir(&args.masks).context("--masks")?;
    if masks.is_empty() {
        bail!("--masks: no mask images in {}", args.masks.display());
    }
    let opts = LoadOptions {
        downscale: args.downscale.max(1),
        layout: args.layout,
    };
    let gt = load_ground_truth(&args.gt, &opts).context("--gt")?;
    let bools = masks
        .iter()
        .map(|(stem, m)| (stem.clone(), m.mask.clone()))
        .collect();
    let report = evaluate_masks(&bools, &gt).context("--masks vs --gt")?;
    for stem in &report.unmatched {
        eprintln!("warning: no ground truth for mask {stem}; not scored");
    }
    if report.frames_evaluated() == 0 {
        bail!(
            "no mask in {} has ground truth in {}",
            args.masks.display(),
            args.gt.display()
        );
    }

    let run_dir = args
        .run
        .clone()
        .or_else(|| args.masks.parent().map(Path::to_path_buf));
    let summary = run_dir.as_deref().and_then(read_summary);
    let sequence = args.sequence.clone().unwrap_or_else(|| {
        args.gt
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "sequence".to_string())
    });
    let rows = report_rows(
        &sequence,
        &report,
        summary.as_ref().map(|s| s.runtime_seconds),
        summary.as_ref().map(|s| s.iterations),
    );
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path)
                .with_context(|| format!("--out: cannot create {}", path.display()))?;
            write_metrics_csv(file, &rows)?;
        }
        None => write_metrics_csv(std::io::stdout().lock(), &rows)?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    let mut spec = read_spec(&args.spec).context("--spec")?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let data = generate(&spec).context("--spec")?;
    write_dataset(&data, &args.out).context("--out")?;
    if data.clamped > 0 {
        eprintln!("note: {} values were clamped to [0, 1]", data.clamped);
    }
    Ok(EXIT_OK)
}

pub fn cmd_trace(args: &TraceArgs) -> Result<i32> {
    let path = if args.run.is_dir() {
        args.run.join("trace.json")
    } else {
        args.run.clone()
    };
    let trace = read_trace(&path)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:>5} {:>16} {:>16} {:>12} {:>12}",
        "iter", "objective", "lagrangian", "residual", "mu"
    )?;
    for r in &trace {
        writeln!(
            out,
            "{:>5} {:>16.8e} {:>16.8e} {:>12.4e} {:>12.4e}",
            r.iteration, r.objective, r.lagrangian, r.residual, r.mu
        )?;
    }
    Ok(EXIT_OK)
}

/// Observation of a whole sequence directory, for library users mirroring
/// the CLI's loading path.
pub fn load_observation(input: &Path, opts: &LoadOptions) -> Result<ObservationMatrix> {
    Ok(to_observation(&load_sequence(input, opts)?)?)
}
