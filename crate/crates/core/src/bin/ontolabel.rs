//! Pipeline driver and corpus-exploration tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ontolabel::error::Error;
use ontolabel::pipeline::{
    PipelineConfig, SearchQuery, Stage, StageError, build_labeling_functions, load_task,
    run_pipeline, search_corpus, stage_eval, stage_fit, stage_ingest, stage_label, stage_predict,
    stage_report, stage_train, sweep_partitions,
};
use ontolabel::presets::{Preset, generate_preset};

#[derive(Parser)]
#[command(name = "ontolabel", version, about = "Weakly supervised sequence tagging: terminology and rule labeling functions, a label model, and a noise-aware token classifier")]
struct Cli {
    /// Pipeline configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed list overriding the configuration, e.g. `--seed 0,1,2`.
    #[arg(long, global = true, value_delimiter = ',')]
    seed: Option<Vec<u64>>,

    /// Run directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate all corpora; write corpus statistics.
    Ingest,
    /// Apply the configured labeling functions; write label matrices.
    LfApply,
    /// Fit the label model on the training matrix.
    Fit,
    /// Write posterior soft labels for the train and test splits.
    Predict,
    /// Train the noise-aware end model (one per seed).
    Train,
    /// Evaluate majority vote, label model, and end model on the test split.
    Eval,
    /// Run the whole pipeline: ingest, label, fit, predict, train, eval.
    Run,
    /// Aggregate eval files in the run directory into report.txt.
    Report,
    /// Partition sweep: refit with the top-s terminologies for each s.
    Sweep {
        /// Partition sizes, e.g. `-s 1,2,4,8`.
        #[arg(short = 's', value_delimiter = ',', required = true)]
        s_values: Vec<usize>,
    },
    /// Search the training corpus for a pattern with token context.
    Search {
        /// Regular expression or literal phrase.
        query: String,
        /// Context window in tokens.
        #[arg(long, default_value_t = 3)]
        window: usize,
        /// Annotate context tokens with current labeling-function votes.
        #[arg(long)]
        with_votes: bool,
    },
    /// Generate a bundled synthetic task directory into --out.
    Synth {
        /// `default` (six terminologies, tier configs) or `sweep` (ten).
        #[arg(long, default_value = "default")]
        preset: String,
    },
}

fn need_config(cli: &Cli) -> Result<PathBuf, StageError> {
    cli.config.clone().ok_or(StageError {
        stage: Stage::Ingest,
        source: Error::config("--config <path> is required for this command"),
    })
}

fn need_out(cli: &Cli) -> Result<PathBuf, StageError> {
    cli.out.clone().ok_or(StageError {
        stage: Stage::Ingest,
        source: Error::config("--out <dir> is required for this command"),
    })
}

fn load(cli: &Cli) -> Result<(PipelineConfig, PathBuf), StageError> {
    let config_path = need_config(cli)?;
    let mut cfg = PipelineConfig::load(&config_path)
        .map_err(|source| StageError { stage: Stage::Ingest, source })?;
    if let Some(seeds) = &cli.seed {
        cfg.seeds = seeds.clone();
    }
    Ok((cfg, config_path))
}

fn at(stage: Stage) -> impl Fn(Error) -> StageError {
    move |source| StageError { stage, source }
}

fn dispatch(cli: &Cli) -> Result<(), StageError> {
    match &cli.command {
        Command::Ingest => {
            let (cfg, _) = load(cli)?;
            let out = need_out(cli)?;
            let task = load_task(&cfg).map_err(at(Stage::Ingest))?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Error::io(&out, e))
                .map_err(at(Stage::Ingest))?;
            stage_ingest(&task, &out).map_err(at(Stage::Ingest))?;
            println!("ingested; stats written to {}", out.join("corpus.stats.json").display());
        }
        Command::LfApply => {
            let (cfg, _) = load(cli)?;
            let out = need_out(cli)?;
            let task = load_task(&cfg).map_err(at(Stage::Ingest))?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Error::io(&out, e))
                .map_err(at(Stage::Label))?;
            let warnings = stage_label(&task, &cfg, &out).map_err(at(Stage::Label))?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            println!("label matrices written to {}", out.display());
        }
        Command::Fit => {
            let (cfg, _) = load(cli)?;
            let out = need_out(cli)?;
            let task = load_task(&cfg).map_err(at(Stage::Ingest))?;
            let params = stage_fit(&task, &cfg, &out, cfg.label_model.seed).map_err(at(Stage::Fit))?;
            for w in &params.warnings {
                eprintln!("warning: {w}");
            }
            println!("label model written to {}", out.join("label_model.json").display());
        }
        Command::Predict => {
            let (cfg, _) = load(cli)?;
            let out = need_out(cli)?;
            let task = load_task(&cfg).map_err(at(Stage::Ingest))?;
            stage_predict(&task, &out).map_err(at(Stage::Predict))?;
            println!("soft labels written to {}", out.display());
        }
        Command::Train => {
            let (cfg, _) = load(cli)?;
            let out = need_out(cli)?;
            let task = load_task(&cfg).map_err(at(Stage::Ingest))?;
            stage_train(&task, &cfg, &out, &cfg.seeds).map_err(at(Stage::Train))?;
            println!("end models written to {}", out.display());
        }
        Command::Eval => {
            let (cfg, _) = load(cli)?;
            let out = need_out(cli)?;
            let task = load_task(&cfg).map_err(at(Stage::Ingest))?;
            let report = stage_eval(&task, &cfg, &out, &cfg.seeds).map_err(at(Stage::Eval))?;
            print!("{report}");
        }
        Command::Run => {
            let config_path = need_config(cli)?;
            let out = need_out(cli)?;
            let report = run_pipeline(&config_path, &out, cli.seed.clone())?;
            print!("{report}");
        }
        Command::Report => {
            let out = need_out(cli)?;
            let report = stage_report(&out).map_err(at(Stage::Report))?;
            print!("{report}");
        }
        Command::Sweep { s_values } => {
            let config_path = need_config(cli)?;
            let out = need_out(cli)?;
            let rows = sweep_partitions(&config_path, &out, s_values)?;
            println!("s\tmv_f1\tlm_f1");
            for row in rows {
                println!("{}\t{:.6}\t{:.6}", row.s, row.mv_f1, row.lm_f1);
            }
        }
        Command::Search { query, window, with_votes } => {
            let (cfg, _) = load(cli)?;
            let task = load_task(&cfg).map_err(at(Stage::Ingest))?;
            let q = SearchQuery { pattern: query.clone(), window: *window, with_votes: *with_votes };
            let listing = if *with_votes {
                let lfs =
                    build_labeling_functions(&task, &cfg, cfg.partition_s).map_err(at(Stage::Label))?;
                search_corpus(&task.train, &q, Some((&lfs, &task.schema))).map_err(at(Stage::Label))?
            } else {
                search_corpus(&task.train, &q, None).map_err(at(Stage::Label))?
            };
            print!("{listing}");
        }
        Command::Synth { preset } => {
            let out = need_out(cli)?;
            let preset: Preset = preset.parse().map_err(at(Stage::Ingest))?;
            let configs = generate_preset(&out, preset, cli.seed.as_ref().map_or(7, |s| s[0]))
                .map_err(at(Stage::Ingest))?;
            println!("synthetic task written to {}; configs: {}", out.display(), configs.join(", "));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.stage, e.source);
            ExitCode::FAILURE
        }
    }
}
