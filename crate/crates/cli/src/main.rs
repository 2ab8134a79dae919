use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdon_cli::{run, CliError, Command, RunConfig, FULL_SCALE_EPOCHS};

#[derive(Parser)]
#[command(
    name = "fdon",
    version,
    about = "Fusion-DeepONet data generation, training and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    epochs: Option<u64>,
    /// Full-length training (100k epochs)
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Extra KEY=VALUE overrides, applied last
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write datasets or geometry files
    GenData {
        /// leblanc, synth2d, nozzle-geom or ellipse-mask
        #[arg(long)]
        generator: Option<String>,
    },
    /// Train a model
    Train {
        #[arg(long)]
        train_data: Option<PathBuf>,
        #[arg(long)]
        test_data: Option<PathBuf>,
        /// Continue from this checkpoint
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Relative L2 errors of a checkpoint on a dataset
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Singular-value spectra of the trunk hidden layers
    AnalyzeSvd {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Boundary heat flux from temperature gradients
    Heatflux {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// `circle` or a CSV of segment,x,y,nx,ny
        #[arg(long)]
        boundary: Option<String>,
    },
}

fn push<T: ToString>(v: &mut Vec<(String, String)>, key: &str, value: Option<T>) {
    if let Some(x) = value {
        v.push((key.to_string(), x.to_string()));
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let path = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
    let mut flags = Vec::new();
    let command = match cli.command {
        Cmd::GenData { generator } => {
            push(&mut flags, "generator", generator);
            Command::GenData
        }
        Cmd::Train {
            train_data,
            test_data,
            resume,
        } => {
            push(&mut flags, "train_data", path(train_data));
            push(&mut flags, "test_data", path(test_data));
            push(&mut flags, "resume", path(resume));
            Command::Train
        }
        Cmd::Eval { checkpoint, data } => {
            push(&mut flags, "checkpoint", path(checkpoint));
            push(&mut flags, "data", path(data));
            Command::Eval
        }
        Cmd::AnalyzeSvd {
            checkpoint,
            data,
            sample,
        } => {
            push(&mut flags, "checkpoint", path(checkpoint));
            push(&mut flags, "data", path(data));
            push(&mut flags, "sample", sample);
            Command::AnalyzeSvd
        }
        Cmd::Heatflux {
            checkpoint,
            boundary,
        } => {
            push(&mut flags, "checkpoint", path(checkpoint));
            push(&mut flags, "boundary", boundary);
            Command::Heatflux
        }
    };
    let c = cli.common;
    push(&mut flags, "seed", c.seed);
    push(&mut flags, "out", path(c.out));
    push(&mut flags, "epochs", c.epochs);
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        flags.push((k.trim().to_string(), v.trim().to_string()));
    }
    let file = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("i/o error on {}: {e}", p.display())))?;
            fdon_cli::parse_config_text(&text, &p.display().to_string())?
        }
        None => Vec::new(),
    };
    let mut full = Vec::new();
    if c.paper_scale {
        if command != Command::Train {
            return Err(CliError::Config(
                "--paper-scale applies to train only".into(),
            ));
        }
        full.push(("epochs".to_string(), FULL_SCALE_EPOCHS.to_string()));
    }
    RunConfig::resolve(command, &[file, full, flags])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match resolve(cli).and_then(|cfg| run(&cfg)) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fdon: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
