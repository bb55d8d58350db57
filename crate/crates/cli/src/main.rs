use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use futures::stream::{self, StreamExt};
use tulun_core::metrics::{export_csv, run_eval, summary_table, EvalOptions};
use tulun_core::service::{self, ServiceOptions};
use tulun_core::store::{ImportKind, RunStatus};
use tulun_core::{ConfiguredBackends, Engine, Store};

const PARALLELISM: usize = 4;

#[derive(Parser)]
#[command(name = "tulun", version, about = "Terminology-aware MT post-editing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Engine config (JSON) installed into the store before serving.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Translate a file, one segment per line.
    Translate {
        #[arg(long)]
        store: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// Skip post-editing.
        #[arg(long)]
        mt_only: bool,
        /// Also write each full result as a JSON line.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Score MT-only and MT+APE output against references.
    Eval {
        #[arg(long)]
        store: PathBuf,
        /// CSV with source_text,reference_text columns.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Bulk-load glossary or TM entries from CSV.
    Import {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        csv: PathBuf,
        /// Exit 0 even when rows were rejected.
        #[arg(long)]
        lenient: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Glossary,
    Tm,
}

impl From<Kind> for ImportKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Glossary => ImportKind::Glossary,
            Kind::Tm => ImportKind::Tm,
        }
    }
}

/// Ends the run with an exit code and a message for stderr.
enum Failure {
    Partial(String),
    Usage(String),
}

impl Failure {
    fn usage(context: &str, e: impl std::fmt::Display) -> Self {
        Failure::Usage(format!("{context}: {e}"))
    }

    fn partial(context: &str, e: impl std::fmt::Display) -> Self {
        Failure::Partial(format!("{context}: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = runtime.block_on(async {
        match cli.command {
            Command::Serve { store, bind, config } => serve(&store, bind, config.as_deref()).await,
            Command::Translate {
                store,
                input,
                output,
                mt_only,
                results,
            } => translate(&store, &input, &output, mt_only, results.as_deref()).await,
            Command::Eval { store, dataset, report } => eval(&store, &dataset, &report).await,
            Command::Import {
                store,
                kind,
                csv,
                lenient,
            } => import(&store, kind.into(), &csv, lenient),
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn open_store(dir: &Path) -> Result<Arc<Store>, Failure> {
    Store::open(dir)
        .map(Arc::new)
        .map_err(|e| Failure::usage("cannot open store", e))
}

async fn serve(store: &Path, bind: SocketAddr, config: Option<&Path>) -> Outcome {
    service::serve(config, store, bind, ConfiguredBackends::shared(), ServiceOptions::from_env())
        .await
        .map_err(|e| match e {
            service::ServeError::Io(e) => Failure::partial("server stopped", e),
            other => Failure::Usage(other.to_string()),
        })
}

struct LineOutcome {
    text: String,
    json: Option<String>,
    problem: Option<String>,
}

async fn translate_line(engine: &Engine, line: &str, mt_only: bool) -> LineOutcome {
    if line.trim().is_empty() {
        return LineOutcome {
            text: String::new(),
            json: None,
            problem: None,
        };
    }
    if mt_only {
        return match engine.machine_translate(line).await {
            Ok(mt) => LineOutcome {
                text: mt.translated_text,
                json: None,
                problem: None,
            },
            Err(e) => LineOutcome {
                text: String::new(),
                json: None,
                problem: Some(e.to_string()),
            },
        };
    }
    match engine.translate(line).await {
        Ok(result) => LineOutcome {
            problem: result.llm_error.clone().map(|e| format!("post-editing failed, kept MT draft: {e}")),
            json: serde_json::to_string(&result).ok(),
            text: result.post_edited_text,
        },
        Err(e) => LineOutcome {
            text: String::new(),
            json: None,
            problem: Some(e.to_string()),
        },
    }
}

/// Output lines never contain raw newlines, so line N of the output always
/// belongs to line N of the input.
fn one_line(text: &str) -> String {
    text.replace(['\r', '\n'], " ")
}

async fn translate(store: &Path, input: &Path, output: &Path, mt_only: bool, results: Option<&Path>) -> Outcome {
    let text = fs::read_to_string(input).map_err(|e| Failure::usage(&format!("cannot read {}", input.display()), e))?;
    let store = open_store(store)?;
    let engine = Engine::new(store, ConfiguredBackends::shared());

    let pending: Vec<_> = text.lines().map(|line| translate_line(&engine, line, mt_only)).collect();
    let outcomes: Vec<LineOutcome> = stream::iter(pending).buffered(PARALLELISM).collect().await;

    let mut out = String::new();
    let mut json = String::new();
    let mut failed = 0;
    for (i, o) in outcomes.iter().enumerate() {
        out.push_str(&one_line(&o.text));
        out.push('\n');
        if let Some(j) = &o.json {
            json.push_str(j);
            json.push('\n');
        }
        if let Some(problem) = &o.problem {
            failed += 1;
            eprintln!("warning: line {}: {problem}", i + 1);
        }
    }
    let write_err = |path: &Path| {
        let context = format!("cannot write {}", path.display());
        move |e: std::io::Error| Failure::partial(&context, e)
    };
    fs::write(output, out).map_err(write_err(output))?;
    if let Some(path) = results {
        fs::write(path, json).map_err(write_err(path))?;
    }
    if failed > 0 {
        return Err(Failure::Partial(format!("{failed} of {} lines failed", outcomes.len())));
    }
    Ok(())
}

async fn eval(store: &Path, dataset: &Path, report: &Path) -> Outcome {
    let bytes = fs::read(dataset).map_err(|e| Failure::usage(&format!("cannot read {}", dataset.display()), e))?;
    let store = open_store(store)?;
    let name = dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let (dataset, import) = store
        .create_dataset(&name, &bytes)
        .map_err(|e| Failure::usage("invalid dataset", e))?;
    for r in &import.rejected {
        eprintln!("warning: dataset line {}: {}", r.line, r.reason);
    }

    let engine = Engine::new(store, ConfiguredBackends::shared());
    let run = run_eval(&engine, &dataset, None, EvalOptions::default())
        .await
        .map_err(|e| Failure::partial("evaluation failed", e))?;
    let csv = export_csv(&run).map_err(|e| Failure::partial("cannot build report", e))?;
    fs::write(report, csv).map_err(|e| Failure::partial(&format!("cannot write {}", report.display()), e))?;

    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", summary_table(&run));
    let _ = writeln!(stdout, "run {}: {} scored, {} failed", run.id, run.scored_items, run.failed_items);
    for item in run.per_item.iter().filter(|i| i.error.is_some()) {
        eprintln!("warning: item {}: {}", item.index, item.error.as_deref().unwrap_or_default());
    }
    if run.status == RunStatus::Failed || run.failed_items > 0 || !import.rejected.is_empty() {
        return Err(Failure::Partial(format!("run {} incomplete", run.id)));
    }
    Ok(())
}

fn import(store: &Path, kind: ImportKind, csv: &Path, lenient: bool) -> Outcome {
    let bytes = fs::read(csv).map_err(|e| Failure::usage(&format!("cannot read {}", csv.display()), e))?;
    let store = open_store(store)?;
    let report = store
        .import_csv(kind, &bytes)
        .map_err(|e| Failure::usage("import failed", e))?;
    println!(
        "inserted {}, rejected {}, warnings {}",
        report.inserted,
        report.rejected.len(),
        report.warnings.len()
    );
    for r in &report.rejected {
        eprintln!("rejected line {}: {}", r.line, r.reason);
    }
    for w in &report.warnings {
        eprintln!("warning line {}: {}", w.line, w.message);
    }
    if !report.rejected.is_empty() && !lenient {
        return Err(Failure::Partial(format!("{} rows rejected", report.rejected.len())));
    }
    Ok(())
}
