//! `hsf` - run corridor sweeps, dump schedules and ray paths, and evaluate
//! the latency budget from a flat config file.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hsf_core::config::{parse_config, ExperimentConfig};
use hsf_core::experiment::{
    configure, emit_csv, format_sig9_trimmed, run_sweep_with_workers, write_paths_csv,
    write_schedule_csv,
};
use hsf_core::mobility::dislocation;
use hsf_core::steering::{materialize_normals, SteeringMode};
use hsf_core::tracer::{efficiency, received_power};

#[derive(Parser)]
#[command(name = "hsf", version, about = "HyperSurface corridor beam-steering simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Efficiency of every configured scheme across the dislocation sweep.
    Sweep {
        config: PathBuf,
        /// Output CSV; overrides `output.csv`, defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Trace one fan at a fixed dislocation and dump every ray path.
    Trace {
        config: PathBuf,
        #[arg(long)]
        dx: f64,
        #[arg(long)]
        paths: PathBuf,
        #[command(flatten)]
        pick: ModePick,
        /// Override `tracer.n_rays`.
        #[arg(long)]
        rays: Option<usize>,
    },
    /// Per-subunit position assignment and virtual normals.
    Schedule {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pick: ModePick,
    },
    /// Cycle latency and the resulting user dislocation.
    Delay { config: PathBuf },
}

#[derive(clap::Args)]
struct ModePick {
    /// static, unbiased or biased; defaults to the first configured mode.
    #[arg(long)]
    mode: Option<String>,
    /// Which configured bias to use with `--mode biased`.
    #[arg(long)]
    bias_p: Option<f64>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn pick_mode(cfg: &ExperimentConfig, pick: &ModePick) -> Result<SteeringMode, Failure> {
    let modes = cfg.modes();
    let found = modes.into_iter().find(|m| {
        pick.mode.as_deref().is_none_or(|want| m.label() == want)
            && pick.bias_p.is_none_or(|p| m.bias_p() == Some(p))
    });
    found.ok_or_else(|| {
        Failure::Config(format!(
            "no configured steering mode matches --mode {} --bias-p {}",
            pick.mode.as_deref().unwrap_or("*"),
            pick.bias_p.map_or("*".to_string(), |p| p.to_string())
        ))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            workers,
        } => {
            let cfg = load(&config)?;
            let workers = if workers == 0 {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            } else {
                workers
            };
            let result = run_sweep_with_workers(&cfg, workers).map_err(Failure::runtime)?;
            match out.or(cfg.output_csv.clone()) {
                Some(path) => emit_csv(&result, &path)
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
                None => hsf_core::experiment::write_sweep_csv(&result, std::io::stdout().lock())
                    .map_err(Failure::runtime)?,
            }
        }
        Command::Trace {
            config,
            dx,
            paths,
            pick,
            rays,
        } => {
            let mut cfg = load(&config)?;
            if let Some(n) = rays {
                cfg.tracer.n_rays = n;
            }
            cfg.tracer.record_paths = true;
            cfg.tracer
                .validate()
                .map_err(|e| Failure::Config(e.to_string()))?;
            let mode = pick_mode(&cfg, &pick)?;
            let scene = cfg
                .build_scene()
                .map_err(|e| Failure::Config(e.to_string()))?;
            let schedule = configure(&cfg, &scene, mode).map_err(Failure::runtime)?;
            let panel = materialize_normals(&schedule, &scene).map_err(Failure::runtime)?;
            let power = cfg.tx_power_w();
            let outcome =
                received_power(&scene, &panel, dx, power, &cfg.tracer).map_err(Failure::runtime)?;
            write_paths_csv(&outcome, create(&paths)?).map_err(Failure::runtime)?;
            println!(
                "{} d_x = {} m: efficiency {}",
                mode.label(),
                format_sig9_trimmed(dx),
                format_sig9_trimmed(efficiency(&outcome, power).map_err(Failure::runtime)?)
            );
        }
        Command::Schedule { config, out, pick } => {
            let cfg = load(&config)?;
            let mode = pick_mode(&cfg, &pick)?;
            let scene = cfg
                .build_scene()
                .map_err(|e| Failure::Config(e.to_string()))?;
            let schedule = configure(&cfg, &scene, mode).map_err(Failure::runtime)?;
            let panel = materialize_normals(&schedule, &scene).map_err(Failure::runtime)?;
            write_schedule_csv(&schedule, &panel, create(&out)?).map_err(Failure::runtime)?;
        }
        Command::Delay { config } => {
            let cfg = load(&config)?;
            let tau = cfg.latency.total();
            println!("tau_tot = {} s", format_sig9_trimmed(tau));
            println!(
                "d_x = {} m",
                format_sig9_trimmed(dislocation(&cfg.mobility, tau))
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("hsf: config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("hsf: {msg}");
            ExitCode::from(1)
        }
    }
}
