use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use figura_core::evaluation::{
    generate_template_cqs, read_ground_truth, run_evaluation, write_answers, write_ground_truth, EvalServices,
    ExactMatchJudge, Judge, MetricConfig,
};
use figura_core::ontology::{reify, turtle, MappingConfig};
use figura_core::rag::RagConfig;
use figura_service::eval_judge::LlmJudge;
use figura_service::jsonl::JsonlLog;
use figura_service::state::{load_ontology, load_templates, read};
use figura_service::{router, AppState, ServiceConfig, Services};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "figura", version, about = "Rhetorical figure ontology service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API. Configured through FIGURA_* environment variables.
    Serve,
    /// Rewrite compound relations of a Turtle file into separate triples.
    Reify {
        input: PathBuf,
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the transformation report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build (or rebuild) the vector index at FIGURA_INDEX.
    Index,
    /// Generate template competency questions as JSONL.
    GenCqs {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate RAG configurations on a ground-truth dataset.
    Eval {
        dataset: PathBuf,
        /// TOML file with a `[[config]]` table per configuration; defaults to the six-setting grid.
        #[arg(long)]
        configs: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Write generated answers (JSONL, one file per configuration) into this directory.
        #[arg(long)]
        answers: Option<PathBuf>,
    },
    /// Dump examples and annotations as JSONL.
    Export {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List recent submissions not yet marked harmful.
    Review {
        #[arg(long)]
        since: DateTime<Utc>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalPlan {
    config: Vec<RagConfig>,
}

type Failure = Box<dyn std::error::Error>;

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn services(config: &ServiceConfig) -> Result<Services, Failure> {
    let audit = config.audit_log.as_ref().map(JsonlLog::open).transpose()?.map(Arc::new);
    Ok(Services::from_config(config, audit))
}

fn serve(config: ServiceConfig) -> Result<(), Failure> {
    let services = services(&config)?;
    let state = Arc::new(AppState::new(&config, services)?);
    tracing::info!("ontology loaded, database at {}", config.database.display());
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let builder = state.clone();
        let index_path = config.index.clone();
        tokio::task::spawn_blocking(move || match builder.build_index(index_path.as_deref()) {
            Ok(()) => tracing::info!("vector index ready"),
            Err(e) => tracing::error!("building the vector index failed: {e}"),
        });
        let listener = tokio::net::TcpListener::bind(config.bind).await?;
        tracing::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Serve => serve(ServiceConfig::from_env()?),
        Command::Reify {
            input,
            mapping,
            output: out,
            report,
        } => {
            let mapping = match mapping {
                Some(p) => MappingConfig::parse(&read(&p)?)?,
                None => MappingConfig::default_mapping(),
            };
            let store = turtle::parse(&read(&input)?)?;
            let r = reify(&store, &mapping)?;
            output(&out)?.write_all(turtle::serialize(&r.store).as_bytes())?;
            let text = format!("{}{}", r.report.summary(), r.report.to_text(r.store.prefixes()));
            match report {
                Some(p) => std::fs::write(p, text)?,
                None => eprint!("{text}"),
            }
            Ok(())
        }
        Command::Index => {
            let config = ServiceConfig::from_env()?;
            let path = config.index.clone().ok_or("FIGURA_INDEX is not set")?;
            if path.exists() {
                std::fs::remove_file(&path)?;
            }
            let state = AppState::new(&config, services(&config)?)?;
            state.build_index(Some(&path))?;
            eprintln!("index written to {}", path.display());
            Ok(())
        }
        Command::GenCqs { output: out } => {
            let config = ServiceConfig::from_env()?;
            let store = load_ontology(&config)?;
            let cqs = generate_template_cqs(&store, &load_templates(&config)?);
            write_ground_truth(&cqs, output(&out)?)?;
            eprintln!("{} questions", cqs.len());
            Ok(())
        }
        Command::Eval {
            dataset,
            configs,
            format,
            answers,
        } => {
            let config = ServiceConfig::from_env()?;
            let records = read_ground_truth(BufReader::new(File::open(&dataset)?))?;
            let grid = match configs {
                Some(p) => toml::from_str::<EvalPlan>(&read(&p)?)?.config,
                None => RagConfig::evaluation_grid(),
            };
            let sv = services(&config)?;
            let document = AppState::new(&config, sv.clone())?.document;
            let judge: Box<dyn Judge> = if config.llm.is_some() {
                Box::new(LlmJudge { llm: sv.llm.clone() })
            } else {
                eprintln!("no FIGURA_LLM_URL set, judging by exact match against the ground truth");
                Box::new(ExactMatchJudge::new(
                    records.iter().map(|r| (r.question.as_str(), r.ground_truth.as_str())),
                ))
            };
            let eval = run_evaluation(
                &records,
                &grid,
                &document,
                &EvalServices {
                    retrieval_embedder: sv.embedder.as_ref(),
                    reranker: sv.reranker.as_ref(),
                    llm: sv.llm.as_ref(),
                    judge: judge.as_ref(),
                    metric_embedder: sv.embedder.as_ref(),
                },
                &MetricConfig::default(),
            )?;
            for (question, reason) in &eval.failures {
                eprintln!("excluded: {question}: {reason}");
            }
            if let Some(dir) = answers {
                std::fs::create_dir_all(&dir)?;
                for (i, rows) in eval.answers.iter().enumerate() {
                    write_answers(rows, BufWriter::new(File::create(dir.join(format!("config{i}.jsonl")))?))?;
                }
            }
            match format {
                Format::Table => println!("{}", eval.report.to_table()),
                Format::Json => println!("{}", eval.report.to_json()),
            }
            Ok(())
        }
        Command::Export { output: out } => {
            let config = ServiceConfig::from_env()?;
            let state = AppState::new(&config, Services::stubs())?;
            let n = state.store.export_jsonl(output(&out)?)?;
            eprintln!("{n} lines");
            Ok(())
        }
        Command::Review { since } => {
            let config = ServiceConfig::from_env()?;
            let state = AppState::new(&config, Services::stubs())?;
            for ex in state.store.review_queue(since)? {
                println!("{}", serde_json::to_string(&ex)?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
