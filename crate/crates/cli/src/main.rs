use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use sod_core::dataset::{load_corpus, split_shots};
use sod_core::harness::{
    check_seed_execution, evaluate, run_pipeline, sweep, sweep_to_csv, write_evaluation, HarnessError, RunConfig,
    DEFAULT_SWEEP_SUBSET,
};
use sod_core::metrics::{rates, RateScore};
use sod_core::prompting::{build_prompt, doc_snippets_for, PromptSettings, Summarizer, TemplateBaseline};
use sod_core::retrieval::{
    assemble_rag_prompt, chunk_documents, rate_score, read_rate_results, ChunkIndex, DocChunk, DEFAULT_MAX_CHARS,
    DEFAULT_OVERLAP_CHARS, DEFAULT_TOP_K,
};
use sod_core::transpile::{transpile_detailed, SourceDialect};
use sod_core::workbook::{compare, execute_logged, load_workbook, save_workbook, Workbook, DEFAULT_TOLERANCE};
use sod_core::xwapi::{parse_script, serialize_script, validate_script, ActionCatalog, ActionScript};

#[derive(Parser)]
#[command(name = "sod", version, about = "Document spreadsheet operations and evaluate step summaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an action script and print it as JSON.
    Parse {
        file: PathBuf,
        /// Extra action definitions.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Check an action script, or a whole corpus with --corpus.
    Validate {
        file: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        corpus: Option<PathBuf>,
        /// Also run each instance on its seed workbook from this directory.
        #[arg(long, requires = "corpus")]
        workbooks: Option<PathBuf>,
    },
    /// Print the action-script text of a JSON script.
    Serialize { file: PathBuf },
    /// Translate a VBA or Apps Script macro into an action script.
    Transpile {
        file: PathBuf,
        #[arg(long)]
        dialect: SourceDialect,
        /// Print steps, diagnostics and target sheets as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run an action script on a workbook.
    Execute {
        script: PathBuf,
        /// Seed workbook; a blank one when omitted.
        #[arg(long)]
        workbook: Option<PathBuf>,
        /// Where to save the result; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two workbooks; exits 1 when they differ.
    Compare {
        expected: PathBuf,
        actual: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Print the few-shot prompt for one corpus instance as JSON.
    Prompt {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 4)]
        shots: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Evaluate the configured backends over the corpus.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        allow_remote: bool,
    },
    /// Score the sweep subset for several shot counts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Shot counts: `1..19`, `1..=19` or a comma list.
        #[arg(long, default_value = "1..=19")]
        shots: String,
        #[arg(long, default_value_t = DEFAULT_SWEEP_SUBSET)]
        subset: usize,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_remote: bool,
    },
    /// Exec@1 and Pass@1 from a `task_id,executed,passed` CSV.
    Rates { file: PathBuf },
    /// Chunk and index text documents with TF-IDF.
    RagIndex {
        /// Files, or directories whose files are all read.
        #[arg(required = true)]
        docs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_CHARS)]
        max_chars: usize,
        #[arg(long, default_value_t = DEFAULT_OVERLAP_CHARS)]
        overlap: usize,
    },
    /// Retrieve the chunks closest to a query.
    RagQuery {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(short, default_value_t = DEFAULT_TOP_K)]
        k: usize,
        /// Print a code-generation prompt built from the results.
        #[arg(long)]
        prompt: bool,
        /// JSON list of {"task": ..., "code": ...} examples for --prompt.
        #[arg(long, requires = "prompt")]
        few_shot: Option<PathBuf>,
    },
    /// Transpile, execute and describe a macro; exits 1 on a workbook mismatch.
    Pipeline {
        file: PathBuf,
        #[arg(long)]
        dialect: SourceDialect,
        #[arg(long)]
        workbook: Option<PathBuf>,
        #[arg(long)]
        expected: Option<PathBuf>,
        /// Run config whose backend describes the steps (template baseline otherwise).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, requires = "config")]
        backend: Option<String>,
        #[arg(long)]
        allow_remote: bool,
        /// Save the executed workbook here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Why a command stopped: `Usage` exits 2, `Found` exits 1.
enum Fail {
    Usage(String),
    Found(String),
}

impl From<HarnessError> for Fail {
    fn from(e: HarnessError) -> Self {
        Fail::Usage(e.to_string())
    }
}

fn usage(e: impl std::fmt::Display) -> Fail {
    Fail::Usage(e.to_string())
}

fn found(e: impl std::fmt::Display) -> Fail {
    Fail::Found(e.to_string())
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn catalog(extra: Option<&Path>) -> Result<ActionCatalog, Fail> {
    let mut c = ActionCatalog::seed();
    if let Some(path) = extra {
        c.extend_from_file(path).map_err(usage)?;
    }
    Ok(c)
}

fn load_book(path: Option<&Path>) -> Result<Workbook, Fail> {
    match path {
        Some(p) => load_workbook(p).map_err(usage),
        None => Ok(Workbook::blank()),
    }
}

/// Prints to stdout, ending quietly when the reader has gone away.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let mut out = std::io::stdout().lock();
        if let Err(e) = write!(out, $($arg)*).and_then(|_| out.flush()) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(usage(format!("stdout: {e}")));
        }
    }};
}

macro_rules! pretty {
    ($v:expr) => {
        serde_json::to_string_pretty($v).expect("values are serializable")
    };
}

/// `a..b` (exclusive), `a..=b`, or `a,b,c`.
fn parse_shots(text: &str) -> Result<Vec<usize>, Fail> {
    let bad = || usage(format!("cannot read shot list `{text}`"));
    let n = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = text.split_once("..=") {
        return Ok((n(a)?..=n(b)?).collect());
    }
    if let Some((a, b)) = text.split_once("..") {
        return Ok((n(a)?..n(b)?).collect());
    }
    text.split(',').map(n).collect()
}

fn run(cli: Cli) -> Result<(), Fail> {
    match cli.command {
        Command::Parse { file, catalog: extra } => {
            let script = parse_script(&read(&file)?, &catalog(extra.as_deref())?).map_err(found)?;
            say!("{}\n", pretty!(&script));
        }
        Command::Validate {
            file,
            catalog: extra,
            corpus,
            workbooks,
        } => {
            if let Some(path) = corpus {
                let corpus = load_corpus(&path).map_err(found)?;
                let problems = workbooks.map(|d| check_seed_execution(&corpus, &d)).unwrap_or_default();
                for p in &problems {
                    eprintln!("{p}");
                }
                if !problems.is_empty() {
                    return Err(found(format!("{} instance(s) failed to execute", problems.len())));
                }
                say!("{}: {} instances ok\n", path.display(), corpus.len());
                return Ok(());
            }
            let file = file.ok_or_else(|| usage("give a script file or --corpus"))?;
            let cat = catalog(extra.as_deref())?;
            let script = parse_script(&read(&file)?, &cat).map_err(found)?;
            let diags = validate_script(&script, &cat);
            for d in &diags {
                say!("{d}\n");
            }
            let errors = diags.iter().filter(|d| d.is_error()).count();
            if errors > 0 {
                return Err(found(format!("{errors} error(s)")));
            }
            if diags.is_empty() {
                say!("ok: {} step(s) in {} group(s)\n", script.len(), script.groups.len());
            }
        }
        Command::Serialize { file } => {
            let script: ActionScript = serde_json::from_str(&read(&file)?).map_err(usage)?;
            say!("{}\n", serialize_script(&script));
        }
        Command::Transpile { file, dialect, json } => {
            let t = transpile_detailed(&read(&file)?, dialect, &ActionCatalog::seed()).map_err(found)?;
            if json {
                say!("{}\n", pretty!(&t));
            } else {
                for d in &t.diagnostics {
                    eprintln!("{d}");
                }
                say!("{}\n", serialize_script(&t.script));
            }
        }
        Command::Execute { script, workbook, out } => {
            let script = parse_script(&read(&script)?, &ActionCatalog::seed()).map_err(found)?;
            let (book, warnings) = execute_logged(&script, load_book(workbook.as_deref())?).map_err(found)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            match out {
                Some(path) => save_workbook(&book, &path).map_err(usage)?,
                None => say!("{}\n", sod_core::workbook::workbook_to_json(&book)),
            }
        }
        Command::Compare {
            expected,
            actual,
            tol,
            json,
        } => {
            let report = compare(&load_book(Some(&expected))?, &load_book(Some(&actual))?, tol);
            if json {
                say!("{}\n", pretty!(&report));
            } else {
                say!("{report}");
            }
            if !report.equivalent {
                return Err(Fail::Found(String::new()));
            }
        }
        Command::Prompt { corpus, id, shots, seed } => {
            let corpus = load_corpus(&corpus).map_err(usage)?;
            let target = corpus.get(&id).ok_or_else(|| usage(format!("no instance `{id}`")))?;
            let (exemplars, _) = split_shots(&corpus, shots, seed).map_err(usage)?;
            let exemplars: Vec<_> = exemplars.into_iter().filter(|e| e.id != id).collect();
            let docs = doc_snippets_for(&target.code, &ActionCatalog::seed());
            let bundle = build_prompt(target, &exemplars, &docs, &PromptSettings::default()).map_err(usage)?;
            say!("{}\n", pretty!(&bundle));
        }
        Command::Evaluate {
            config,
            out,
            workers,
            allow_remote,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(w) = workers {
                config.workers = w;
            }
            let out = out.unwrap_or_else(|| config.out.clone());
            let corpus = load_corpus(&config.corpus).map_err(usage)?;
            let outcome = evaluate(&config, &corpus, allow_remote)?;
            write_evaluation(&out, &outcome)?;
            say!("{}", outcome.report.to_markdown());
            eprintln!("wrote {} record(s) to {}", outcome.records.len(), out.display());
            let errors = outcome.error_count();
            if errors > 0 {
                return Err(found(format!("{errors} record(s) have errors")));
            }
        }
        Command::Sweep {
            config,
            shots,
            subset,
            backend,
            out,
            allow_remote,
        } => {
            let config = RunConfig::load(&config)?;
            let corpus = load_corpus(&config.corpus).map_err(usage)?;
            let rows = sweep(&config, &corpus, backend.as_deref(), &parse_shots(&shots)?, subset, allow_remote)?;
            let csv = sweep_to_csv(&rows);
            match out {
                Some(dir) => write(&dir.join("sweep.csv"), &csv)?,
                None => say!("{csv}"),
            }
        }
        Command::Rates { file } => {
            let records = read_rate_results(&file).map_err(usage)?;
            let score: RateScore = rate_score(&records);
            let (exec, pass) = rates(&score).map_err(usage)?;
            say!(
                "total {}  exec {} ({:.0}%)  pass {} ({:.0}%)\n",
                score.total(),
                score.exec_count(),
                exec * 100.0,
                score.pass_count(),
                pass * 100.0
            );
        }
        Command::RagIndex {
            docs,
            out,
            max_chars,
            overlap,
        } => {
            let mut files = Vec::new();
            for p in docs {
                if p.is_dir() {
                    let mut entries: Vec<PathBuf> = fs::read_dir(&p)
                        .map_err(|e| usage(format!("{}: {e}", p.display())))?
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|p| p.is_file())
                        .collect();
                    entries.sort();
                    files.extend(entries);
                } else {
                    files.push(p);
                }
            }
            let mut texts = Vec::new();
            for f in &files {
                let name = f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned());
                texts.push((name, read(f)?));
            }
            let chunks = chunk_documents(&texts, max_chars, overlap).map_err(usage)?;
            let index = ChunkIndex::tfidf(chunks).map_err(usage)?;
            index.save(&out).map_err(usage)?;
            say!(
                "indexed {} document(s) as {} chunk(s), {} terms\n",
                files.len(),
                index.len(),
                index.dimension
            );
        }
        Command::RagQuery {
            index,
            query,
            k,
            prompt,
            few_shot,
        } => {
            let index = ChunkIndex::load(&index).map_err(usage)?;
            let hits = index.retrieve(&query, k).map_err(usage)?;
            if prompt {
                let shots: Vec<(String, String)> = match few_shot {
                    Some(p) => {
                        let v: Vec<serde_json::Value> = serde_json::from_str(&read(&p)?).map_err(usage)?;
                        v.iter()
                            .map(|e| match (e["task"].as_str(), e["code"].as_str()) {
                                (Some(t), Some(c)) => Ok((t.to_string(), c.to_string())),
                                _ => Err(usage("few-shot entries need `task` and `code` strings")),
                            })
                            .collect::<Result<_, _>>()?
                    }
                    None => Vec::new(),
                };
                let chunks: Vec<DocChunk> = hits.iter().map(|(c, _)| (*c).clone()).collect();
                let bundle = assemble_rag_prompt(&query, &chunks, &shots, &PromptSettings::default()).map_err(usage)?;
                say!("{}\n", pretty!(&bundle));
            } else {
                let rows: Vec<_> = hits
                    .iter()
                    .map(|(c, s)| json!({"id": c.id, "source_doc": c.source_doc, "score": s}))
                    .collect();
                say!("{}\n", pretty!(&rows));
            }
        }
        Command::Pipeline {
            file,
            dialect,
            workbook,
            expected,
            config,
            backend,
            allow_remote,
            out,
        } => {
            let source = read(&file)?;
            let seed = load_book(workbook.as_deref())?;
            let expected = expected.map(|p| load_book(Some(&p))).transpose()?;
            let (summarizer, settings): (Box<dyn Summarizer>, PromptSettings) = match config {
                Some(path) => {
                    let config = RunConfig::load(&path)?;
                    let bc = match backend {
                        Some(name) => config
                            .backends
                            .iter()
                            .find(|b| b.label() == name)
                            .ok_or_else(|| usage(format!("no backend named `{name}`")))?,
                        None => &config.backends[0],
                    };
                    if bc.is_remote() && !allow_remote {
                        return Err(usage(format!("backend `{}` is remote; pass --allow-remote", bc.label())));
                    }
                    (bc.build().map_err(usage)?, config.settings_for(bc))
                }
                None => (Box::new(TemplateBaseline::default()), PromptSettings::default()),
            };
            let result = run_pipeline(&source, dialect, seed, summarizer.as_ref(), expected.as_ref(), &settings)
                .map_err(found)?;
            if let Some(path) = out {
                save_workbook(&result.workbook, &path).map_err(usage)?;
            }
            say!("{}\n", pretty!(&result));
            if !result.diff.equivalent {
                return Err(found(format!("{} workbook mismatch(es)", result.diff.mismatches.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Found(msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(1)
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
