use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use utv_core::pipeline::{Pipeline, PipelineConfig};
use utv_core::Error;

/// Ensemble-class knowledge-graph movie recommender.
#[derive(Debug, Parser)]
#[command(name = "utv", version)]
struct Cli {
    /// TOML configuration file; data paths inside it are relative to its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Forces single-threaded, reproducible execution.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Output directory for tables, per-user artifacts and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Target {
    /// Target user id.
    #[arg(long)]
    user: u32,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the rating, movie and user files into normalized tables.
    Ingest,
    /// Score the 30 fuzzy rules for a user and pick the ensemble.
    Rules(Target),
    /// Build the user's heterogeneous movie graph.
    Graph(Target),
    /// Run biased walks over the graph and train node embeddings.
    Embed(Target),
    /// Write the user's top-k recommendations.
    Recommend {
        #[command(flatten)]
        target: Target,
        /// List length; defaults to `k` from the config.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Evaluate against the popularity and user-neighborhood baselines.
    Evaluate,
}

fn load_config(cli: &Cli) -> utv_core::Result<(PipelineConfig, PathBuf)> {
    let (mut config, base) = match &cli.config {
        Some(path) => {
            let base = path
                .parent()
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
            (PipelineConfig::load(path)?, base)
        }
        None => (PipelineConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.deterministic {
        config.deterministic = true;
    }
    config.validate()?;
    Ok((config, base))
}

fn run(cli: Cli) -> utv_core::Result<()> {
    let (config, base) = load_config(&cli)?;
    let k_default = config.k;
    let mut pipeline = Pipeline::new(config, base, &cli.out)?;
    match cli.command {
        Command::Ingest => pipeline.ingest(),
        Command::Rules(t) => {
            let selection = pipeline.rules(t.user)?;
            let rows: Vec<String> = selection.top3.iter().map(|r| r.row.to_string()).collect();
            println!("user {}: ensemble rules {}", t.user, rows.join(", "));
            Ok(())
        }
        Command::Graph(t) => {
            let g = pipeline.graph(t.user)?;
            println!(
                "user {}: {} nodes, {} edges",
                t.user,
                g.node_count(),
                g.edge_count()
            );
            Ok(())
        }
        Command::Embed(t) => {
            let m = pipeline.embed(t.user)?;
            println!(
                "user {}: {} vectors of dimension {}",
                t.user,
                m.node_count(),
                m.dim()
            );
            Ok(())
        }
        Command::Recommend { target, k } => {
            let list = pipeline.recommend(target.user, k.unwrap_or(k_default))?;
            for (i, r) in list.items.iter().enumerate() {
                println!(
                    "{:>3}  movie {:>6}  {:.4}  {}",
                    i + 1,
                    r.movie_id,
                    r.score,
                    r.best_component
                );
            }
            Ok(())
        }
        Command::Evaluate => {
            let report = pipeline.evaluate()?;
            for m in &report.models {
                let avg = &m.avg;
                println!(
                    "{:<11} P={:.4} R={:.4} ACC={:.4} F1={:.4} AUC={}",
                    m.model.to_string(),
                    avg.precision,
                    avg.recall,
                    avg.accuracy,
                    avg.f1,
                    avg.auc
                        .map_or_else(|| "NA".to_owned(), |a| format!("{a:.4}")),
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code().clamp(1, 255) as u8
}
