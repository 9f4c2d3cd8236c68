use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gatedfusion::app::{self, PredictInput};
use gatedfusion::config::{RunConfig, TaskSet};
use gatedfusion::data::Modality;
use gatedfusion::Error;

#[derive(Parser)]
#[command(name = "gatedfusion", version, about = "Gated multimodal fusion for cognitive-impairment prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into the data directory.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long)]
        ad_fraction: Option<f64>,
        #[arg(long)]
        signal_strength: Option<f64>,
    },
    /// Write per-segment statistics for every session.
    Featurize {
        #[command(flatten)]
        common: Common,
    },
    /// Tag disfluencies in the transcripts.
    Tag {
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validate, then fit on all sessions and save a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
    },
    /// Session-level metrics of a checkpoint on the data directory.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Predict one session.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Frame-feature CSV of the session.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Transcript JSONL of the session.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long, default_value = "")]
        session_id: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, value_parser = parse_modality)]
    modality: Option<Modality>,
    #[arg(long, value_parser = parse_task)]
    task: Option<TaskSet>,
    /// Turn disfluency tags off.
    #[arg(long)]
    no_disfluency: bool,
}

fn parse_modality(s: &str) -> Result<Modality, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> Result<TaskSet, String> {
    match s {
        "cls" => Ok(TaskSet::Cls),
        "reg" => Ok(TaskSet::Reg),
        "both" => Ok(TaskSet::Both),
        _ => Err(format!("unknown task {s:?}, expected cls, reg or both")),
    }
}

impl Common {
    fn load(&self) -> gatedfusion::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if let Some(d) = &self.data_dir {
            cfg.paths.data_dir = d.clone();
        }
        if let Some(d) = &self.out_dir {
            cfg.paths.out_dir = d.clone();
        }
        if let Some(e) = &self.embeddings {
            cfg.paths.embeddings = Some(e.clone());
        }
        if let Some(m) = self.modality {
            cfg.features.modality = m;
            if !m.uses_text() {
                cfg.features.disfluency = false;
            }
        }
        if let Some(t) = self.task {
            cfg.model.task = t;
        }
        if self.no_disfluency {
            cfg.features.disfluency = false;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> gatedfusion::Result<serde_json::Value> {
    match cli.command {
        Command::Synth { common, sessions, ad_fraction, signal_strength } => {
            let mut cfg = common.load()?;
            if let Some(n) = sessions {
                cfg.synth.n_sessions = n;
            }
            if let Some(f) = ad_fraction {
                cfg.synth.ad_fraction = f;
            }
            if let Some(s) = signal_strength {
                cfg.synth.signal_strength = s;
            }
            app::cmd_synth(&cfg)
        }
        Command::Featurize { common } => app::cmd_featurize(&common.load()?),
        Command::Tag { common } => app::cmd_tag(&common.load()?),
        Command::Train { common, epochs, folds, lr, batch_size, patience } => {
            let mut cfg = common.load()?;
            let t = &mut cfg.train;
            t.epochs = epochs.unwrap_or(t.epochs);
            t.folds = folds.unwrap_or(t.folds);
            t.lr = lr.unwrap_or(t.lr);
            t.batch_size = batch_size.unwrap_or(t.batch_size);
            t.patience = patience.unwrap_or(t.patience);
            app::cmd_train(&cfg)
        }
        Command::Eval { common, checkpoint } => app::cmd_eval(&common.load()?, &checkpoint),
        Command::Predict { common, checkpoint, features, transcript, session_id } => {
            let input = PredictInput { session_id, features, transcript };
            app::cmd_predict(&common.load()?, &checkpoint, &input)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json value serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
