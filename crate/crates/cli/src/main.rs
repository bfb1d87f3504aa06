use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynrmt::evalfn::{Admissibility, Inadmissible};
use dynrmt::FourierSpec;
use dynrmt_cli::commands;
use dynrmt_cli::config::FlowTime;
use dynrmt_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "dynrmt", version, about = "Spectral experiments on matrices filled along doubling-map orbits")]
struct Cli {
    /// Worker threads for trial-level parallelism (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Overrides both the config file and DYNRMT_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Evaluation function as JSON, e.g. '{"coeffs": [[1, 1.0, 0.0]]}'.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    resample_window: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Limiting density against the pooled eigenvalue histogram.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Stieltjes-transform error against 1/(N eta) for eta = N^-a.
    Locallaw {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        eta_exponents: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Gap ratios and spacing statistics of H_X and H_Y against GUE.
    Universality {
        #[command(flatten)]
        common: Common,
        /// Energy window as lo,hi.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window: Option<Vec<f64>>,
    },
    /// Statistics along the Ornstein-Uhlenbeck flow toward the Gaussian comparison.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Flow times, e.g. 0,0.5,inf.
        #[arg(long, value_delimiter = ',')]
        t_list: Option<Vec<FlowTime>>,
    },
    /// Bulk eigenvector sup-norms.
    Deloc {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Eigenvalues of one orbit matrix.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Raw dump of one orbit matrix with a JSON sidecar.
    ExportMatrix {
        #[command(flatten)]
        common: Common,
    },
    /// Re-executes a manifest and checks that every artifact is byte-identical.
    Rerun {
        /// manifest.json or the directory containing it.
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(text) = &common.spec {
        cfg.spec = serde_json::from_str::<FourierSpec>(text).map_err(|e| CliError::Config(format!("invalid --spec: {e}")))?;
    }
    if let Some(w) = common.resample_window {
        cfg.window = Some(w);
    }
    Ok(cfg)
}

fn pair(v: &[f64]) -> (f64, f64) {
    (v[0], v[1])
}

fn warn_if_inadmissible(cfg: &RunConfig) {
    if let Admissibility::NotAdmissible(Inadmissible::SymbolVanishes { witness, value }) = cfg.spec.is_admissible() {
        eprintln!("warning: spec is not admissible: symbol g({witness}) = {value:e} is not bounded away from zero");
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (name, common, cfg) = match cli.command {
        Command::Rerun { manifest, out } => {
            let m = commands::rerun(&manifest, out.as_deref())?;
            println!("rerun of {} reproduced {} artifacts byte-identically", m.command, m.artifacts.len());
            return Ok(());
        }
        Command::Density { common, grid, eta } => {
            let mut cfg = resolve(&common)?;
            if let Some(g) = grid {
                cfg.density.grid = g;
            }
            if let Some(e) = eta {
                cfg.density.eta = e;
            }
            ("density", common, cfg)
        }
        Command::Locallaw { common, eta_exponents, n_list } => {
            let mut cfg = resolve(&common)?;
            if let Some(a) = eta_exponents {
                cfg.locallaw.eta_exponents = a;
            }
            if let Some(ns) = n_list {
                cfg.locallaw.n_list = ns;
            }
            ("locallaw", common, cfg)
        }
        Command::Universality { common, window } => {
            let mut cfg = resolve(&common)?;
            if let Some(w) = window {
                cfg.universality.window = Some(pair(&w));
            }
            ("universality", common, cfg)
        }
        Command::Flow { common, t_list } => {
            let mut cfg = resolve(&common)?;
            if let Some(t) = t_list {
                cfg.flow.t_list = t;
            }
            ("flow", common, cfg)
        }
        Command::Deloc { common, window, n_list } => {
            let mut cfg = resolve(&common)?;
            if let Some(w) = window {
                cfg.deloc.window = pair(&w);
            }
            if let Some(ns) = n_list {
                cfg.deloc.n_list = ns;
            }
            ("deloc", common, cfg)
        }
        Command::Spectrum { common } => {
            let cfg = resolve(&common)?;
            ("spectrum", common, cfg)
        }
        Command::ExportMatrix { common } => {
            let cfg = resolve(&common)?;
            ("export-matrix", common, cfg)
        }
    };
    warn_if_inadmissible(&cfg);
    let m = commands::run(name, &cfg, &common.out)?;
    println!("{name}: wrote {} artifacts to {} (manifest {})", m.artifacts.len(), common.out.display(), m.manifest_hash);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    dynrmt::linalg::init();
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
        eprintln!("error: cannot start worker pool: {e}");
        return ExitCode::from(2);
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
