//! `evipath` command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 data or configuration, 3 backend.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evipath::config::GenerationBackend;
use evipath::eval::{parse_tau_grid, read_corpus_path, render_table, sweep_csv, CorpusRecord, Evaluator};
use evipath::pipeline::{build_index, load_graph, ExplanationRecord};
use evipath::{Engine, EngineConfig, Error, ErrorKind, Index, ItemCatalog};

#[derive(Debug, Parser)]
#[command(name = "evipath", version, about = "Preference-aware knowledge-graph evidence selection and explanation metrics")]
struct Cli {
    /// Worker threads for path scoring and corpus evaluation [default: available cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and persist the graph index.
    Index {
        #[command(flatten)]
        common: Common,
        /// Index directory [default: <run dir>/index]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select evidence paths for (user, target) queries.
    Retrieve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        query: Query,
    },
    /// Generate explanations from selected evidence.
    Explain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        query: Query,
        /// Write prompt bundles without calling any backend.
        #[arg(long)]
        dump_prompt: bool,
    },
    /// Score an explanation corpus.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Corpus of JSON lines with user, item, explanation and optional features.
        #[arg(long)]
        corpus: PathBuf,
        /// Report P-EHR over a threshold grid, e.g. 0.0:1.0:0.1
        #[arg(long, value_name = "START:END:STEP")]
        tau_sweep: Option<String>,
    },
    /// Run index, retrieval, explanation and evaluation on the bundled toy data.
    Demo {
        /// Run directory [default: runs/<timestamp>-demo]
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Engine configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Run directory [default: runs/<UTC timestamp>-<config hash>]
    #[arg(long)]
    run_dir: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct Query {
    /// Persisted index; built in memory when omitted.
    #[arg(long)]
    index: Option<PathBuf>,
    /// User id; with --target, a single query. Otherwise every listed target.
    #[arg(long, requires = "target")]
    user: Option<String>,
    #[arg(long, requires = "user")]
    target: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Stub,
    Http,
}

#[derive(Debug, Args, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Relevance/diversity trade-off in [0, 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of paths to select.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    max_hops: Option<usize>,
    /// Preference proxy threshold.
    #[arg(long)]
    tau: Option<f64>,
    /// Generation backend.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Prompt without knowledge-graph evidence.
    #[arg(long)]
    no_kg: bool,
    /// Relevance-only scoring and plain top-N selection.
    #[arg(long)]
    no_pruning: bool,
    /// Disable node specificity.
    #[arg(long)]
    no_spec: bool,
    /// Disable diversity-aware selection.
    #[arg(long)]
    no_mmr: bool,
    /// One-hop paths only.
    #[arg(long = "only-1hop")]
    only_1hop: bool,
}

impl Overrides {
    fn apply(&self, c: &mut EngineConfig) {
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(g) = self.gamma {
            c.retrieval.gamma = g;
        }
        if let Some(n) = self.paths {
            c.retrieval.paths = n;
        }
        if let Some(h) = self.max_hops {
            c.retrieval.max_hops = h;
        }
        if let Some(t) = self.tau {
            c.eval.tau = t;
        }
        if let Some(b) = self.backend {
            c.generation.backend = match b {
                BackendArg::Stub => GenerationBackend::Stub,
                BackendArg::Http => GenerationBackend::Http,
            };
        }
        let a = &mut c.ablation;
        a.no_kg |= self.no_kg;
        a.no_pruning |= self.no_pruning;
        a.no_spec |= self.no_spec;
        a.no_mmr |= self.no_mmr;
        a.only_1hop |= self.only_1hop;
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: match e.kind() {
                ErrorKind::Data => 2,
                ErrorKind::Backend => 3,
            },
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn load_config(common: &Common) -> CliResult<EngineConfig> {
    let mut c = EngineConfig::from_path(&common.config)?;
    common.overrides.apply(&mut c);
    c.validate()?;
    Ok(c)
}

fn run_dir(explicit: Option<&Path>, tag: &str) -> CliResult<PathBuf> {
    let dir = match explicit {
        Some(d) => d.to_path_buf(),
        None => {
            let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
            let base = PathBuf::from("runs").join(format!("{stamp}-{tag}"));
            let mut dir = base.clone();
            let mut n = 2;
            while dir.exists() {
                dir = PathBuf::from(format!("{}-{n}", base.display()));
                n += 1;
            }
            dir
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string(v).map_err(|e| Failure::from(Error::from(e)))
}

fn to_json_pretty<T: serde::Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::from(Error::from(e)))
}

fn open_engine(config: EngineConfig, index: Option<&Path>) -> CliResult<Engine> {
    Ok(match index {
        Some(dir) => Engine::open(config, dir)?,
        None => {
            eprintln!("no --index given; building the index in memory");
            Engine::build(config)?
        }
    })
}

fn queries(engine: &Engine, q: &Query) -> CliResult<Vec<(String, String)>> {
    let list = match (&q.user, &q.target) {
        (Some(u), Some(t)) => vec![(u.clone(), t.clone())],
        _ => engine.queries(),
    };
    if list.is_empty() {
        return Err(Error::EmptyInput("queries: pass --user and --target or list targets in the histories").into());
    }
    Ok(list)
}

fn cmd_index(common: &Common, out: Option<&Path>) -> CliResult<()> {
    let config = load_config(common)?;
    let run = run_dir(common.run_dir.as_deref(), &config.hash())?;
    let started = Instant::now();
    let index = build_index(&config)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| run.join("index"));
    index.save(&dir)?;
    write_file(&run.join("config.toml"), &config.to_toml())?;
    let m = &index.manifest;
    println!(
        "entities {} relations {} triples {} (skipped {} duplicates, {} self-loops)",
        m.entities, m.relations, m.triples, m.duplicates_skipped, m.self_loops_skipped
    );
    println!("index {}", dir.display());
    eprintln!("wall time {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_retrieve(common: &Common, q: &Query) -> CliResult<()> {
    let config = load_config(common)?;
    let run = run_dir(common.run_dir.as_deref(), &config.hash())?;
    let engine = open_engine(config, q.index.as_deref())?;
    let mut out = String::new();
    for (user, target) in queries(&engine, q)? {
        let r = engine.retrieve(&user, &target)?;
        if r.truncated {
            eprintln!("{user} {target}: candidate paths truncated at {}", engine.retrieval.candidate_cap);
        }
        out.push_str(&to_json(&engine.record(&r))?);
        out.push('\n');
    }
    write_file(&run.join("retrieval.jsonl"), &out)?;
    write_file(&run.join("config.toml"), &engine.config.to_toml())?;
    print!("{out}");
    Ok(())
}

fn prompt_file(run: &Path, user: &str, target: &str) -> PathBuf {
    run.join("prompts").join(format!("{user}__{target}.txt"))
}

fn explain_all(engine: &Engine, list: &[(String, String)], run: &Path) -> CliResult<Vec<ExplanationRecord>> {
    let generator = engine.generator()?;
    let mut records = Vec::new();
    for (user, target) in list {
        let (prepared, record) = engine.explain(user, target, generator.as_ref())?;
        write_file(&prompt_file(run, user, target), &prepared.bundle.text())?;
        records.push(record);
    }
    let jsonl: String = records
        .iter()
        .map(|r| to_json(r).map(|s| s + "\n"))
        .collect::<CliResult<_>>()?;
    write_file(&run.join("explanations.jsonl"), &jsonl)?;
    Ok(records)
}

fn cmd_explain(common: &Common, q: &Query, dump_prompt: bool) -> CliResult<()> {
    let config = load_config(common)?;
    let run = run_dir(common.run_dir.as_deref(), &config.hash())?;
    let engine = open_engine(config, q.index.as_deref())?;
    let list = queries(&engine, q)?;
    write_file(&run.join("config.toml"), &engine.config.to_toml())?;
    if dump_prompt {
        for (user, target) in &list {
            let text = engine.prepare(user, target)?.bundle.text();
            let path = prompt_file(&run, user, target);
            write_file(&path, &text)?;
            println!("{}", path.display());
        }
        return Ok(());
    }
    for r in explain_all(&engine, &list, &run)? {
        println!("{}\t{}\t{}", r.user, r.item, r.explanation);
    }
    Ok(())
}

fn evaluate(config: &EngineConfig, records: &[CorpusRecord], sweep: Option<&str>, run: &Path) -> CliResult<String> {
    let grid = sweep.map(parse_tau_grid).transpose()?;
    let graph = load_graph(config)?;
    let catalog = ItemCatalog::from_path(&config.data.catalog, &graph)?;
    let histories = evipath::kg::Histories::from_path(&config.data.histories, &catalog, config.data.max_history)?;
    let encoder = config.text_encoder()?;
    let evaluator = Evaluator::new(&catalog, &histories, &encoder, config.eval.tau)?;
    let report = evaluator.run(records, grid.as_deref())?;
    write_file(&run.join("report.json"), &(to_json_pretty(&report)? + "\n"))?;
    if grid.is_some() {
        write_file(&run.join("tau_sweep.csv"), &sweep_csv(&report))?;
    }
    let mut table = render_table(&report);
    if grid.is_some() {
        table.push('\n');
        table.push_str(&sweep_csv(&report));
    }
    Ok(table)
}

fn cmd_eval(common: &Common, corpus: &Path, sweep: Option<&str>) -> CliResult<()> {
    let config = load_config(common)?;
    let run = run_dir(common.run_dir.as_deref(), &config.hash())?;
    let records = read_corpus_path(corpus)?;
    let table = evaluate(&config, &records, sweep, &run)?;
    write_file(&run.join("config.toml"), &config.to_toml())?;
    print!("{table}");
    Ok(())
}

fn cmd_demo(run_dir_arg: Option<&Path>, overrides: &Overrides) -> CliResult<()> {
    let run = run_dir(run_dir_arg, "demo")?;
    let bundle = evipath::toy::write_bundle(&run.join("data"))?;
    let mut config = EngineConfig::from_path(&bundle.toy_config)?;
    overrides.apply(&mut config);
    config.validate()?;
    let started = Instant::now();
    let index = build_index(&config)?;
    index.save(&run.join("index"))?;
    let index = Index::load(&run.join("index"), config.text_encoder()?)?;
    let engine = Engine::new(config, index)?;
    write_file(&run.join("config.toml"), &engine.config.to_toml())?;

    let list = engine.queries();
    let mut retrieval = String::new();
    for (user, target) in &list {
        let r = engine.retrieve(user, target)?;
        retrieval.push_str(&to_json(&engine.record(&r))?);
        retrieval.push('\n');
        println!("{user} -> {target}");
        for s in &r.selected {
            println!(
                "  {}. {:.4}  {}",
                s.rank,
                s.scored.score.score,
                evipath::explain::render_path(&s.scored.path, engine.graph())
            );
        }
    }
    write_file(&run.join("retrieval.jsonl"), &retrieval)?;

    let records = explain_all(&engine, &list, &run)?;
    println!();
    for r in &records {
        println!("{} / {}: {}", r.user, r.item, r.explanation);
    }
    let corpus: Vec<CorpusRecord> = records.iter().map(ExplanationRecord::corpus_record).collect();
    println!();
    print!("{}", evaluate(&engine.config, &corpus, None, &run)?);
    println!("\nartifacts in {}", run.display());
    eprintln!("wall time {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure {
                code: 1,
                message: "--jobs must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
    }
    match &cli.command {
        Command::Index { common, out } => cmd_index(common, out.as_deref()),
        Command::Retrieve { common, query } => cmd_retrieve(common, query),
        Command::Explain {
            common,
            query,
            dump_prompt,
        } => cmd_explain(common, query, *dump_prompt),
        Command::Eval {
            common,
            corpus,
            tau_sweep,
        } => cmd_eval(common, corpus, tau_sweep.as_deref()),
        Command::Demo { run_dir, overrides } => cmd_demo(run_dir.as_deref(), overrides),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
