//! Command-line front end. The library is the primary interface; this stays
//! a thin veneer over [`crate::config`], [`crate::matcher`] and
//! [`crate::eval`].

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, KgChoice, OracleChoice, RunConfig};
use crate::eval::{self, EvalError};
use crate::explore::Explorer;
use crate::kg::EntityRef;
use crate::matcher::{write_traces, MatchDecision, MatchError, Matcher};
use crate::tee::{AttributeSpec, SchemaSide, TeeOutcome, TeePipeline};

/// Exit code 2: configuration problems (bad file, bad flag combination).
pub const EXIT_CONFIG: u8 = 2;
/// Exit code 3: backend failures (knowledge graph or oracle).
pub const EXIT_BACKEND: u8 = 3;
/// Exit code 4: malformed input data (pairs or trace files).
pub const EXIT_DATA: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: u8,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError {
            exit_code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

impl From<MatchError> for CliError {
    fn from(e: MatchError) -> Self {
        let exit_code = match &e {
            MatchError::TraceIo(_) => EXIT_DATA,
            _ => EXIT_BACKEND,
        };
        CliError {
            exit_code,
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError {
            exit_code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendFlag {
    Local,
    Remote,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleFlag {
    Mock,
    Remote,
}

#[derive(Debug, Parser)]
#[command(name = "smog", about = "Schema matching over a knowledge graph")]
pub struct Cli {
    /// Run configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Knowledge-graph backend override.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendFlag>,
    /// Oracle backend override.
    #[arg(long, global = true, value_enum)]
    oracle: Option<OracleFlag>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Match attribute pairs and write a decision trace.
    Match(MatchArgs),
    /// Evaluate a decision trace: metrics, depth and TEE score tables.
    Eval(EvalArgs),
    /// Extract the topic entity for a single attribute.
    Tee(TeeArgs),
    /// Explore the graph from seed entities and print the best chains.
    Explore(ExploreArgs),
}

#[derive(Debug, Args)]
struct MatchArgs {
    /// CSV file of labelled attribute pairs.
    #[arg(long)]
    pairs: PathBuf,
    /// Decision trace output (newline-delimited JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum exploration depth override.
    #[arg(long)]
    depth: Option<usize>,
    /// Beam width override.
    #[arg(long)]
    beam_width: Option<usize>,
    /// Worker thread count override.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Decision trace produced by `match`.
    #[arg(long)]
    traces: PathBuf,
    /// Emit the report as JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Report output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TeeArgs {
    #[arg(long, default_value = "table")]
    table: String,
    /// Attribute name.
    #[arg(long)]
    attr: String,
    /// Attribute description.
    #[arg(long, default_value = "")]
    desc: String,
    /// Which schema the attribute belongs to.
    #[arg(long, value_enum, default_value = "source")]
    side: SideFlag,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideFlag {
    Source,
    Target,
}

#[derive(Debug, Args)]
struct ExploreArgs {
    /// Seed entity id; repeat for multiple seeds.
    #[arg(long = "topic", required = true)]
    topics: Vec<String>,
    /// Natural-language question guiding the exploration.
    #[arg(long)]
    query: String,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    beam_width: Option<usize>,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(flag) = cli.backend {
        config.kg.backend = match flag {
            BackendFlag::Local => KgChoice::Local,
            BackendFlag::Remote => KgChoice::Remote,
        };
    }
    if let Some(flag) = cli.oracle {
        config.oracle.backend = match flag {
            OracleFlag::Mock => OracleChoice::Mock,
            OracleFlag::Remote => OracleChoice::Remote,
        };
    }
    config.validate()?;
    Ok(config)
}

/// Matches all pairs with `workers` threads. Decisions come back in input
/// order whatever the thread count; the first error wins deterministically
/// (lowest pair index).
pub fn match_pairs_parallel(
    matcher: &Matcher<'_>,
    pairs: &[crate::matcher::AttributePair],
    workers: usize,
) -> Result<Vec<MatchDecision>, MatchError> {
    let workers = workers.max(1).min(pairs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<MatchDecision, MatchError>>>> =
        pairs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= pairs.len() {
                    break;
                }
                let result = matcher.match_pair(&pairs[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    let mut out = Vec::with_capacity(pairs.len());
    for slot in slots {
        match slot.into_inner().unwrap() {
            Some(Ok(decision)) => out.push(decision),
            Some(Err(e)) => return Err(e),
            None => unreachable!("worker pool left a pair unprocessed"),
        }
    }
    Ok(out)
}

fn run_match(cli: &Cli, args: &MatchArgs) -> Result<(), CliError> {
    let mut config = load_config(cli)?;
    if let Some(depth) = args.depth {
        config.beam.max_depth = depth;
    }
    if let Some(width) = args.beam_width {
        config.beam.width = width;
    }
    if let Some(workers) = args.workers {
        config.run.workers = workers;
    }
    config.validate()?;

    let pairs = eval::load_pairs(&args.pairs, &config.run.columns)?;
    let kg = config.build_kg()?;
    let oracle = config.build_oracle()?;
    let provider = config.embedder();
    let text = config.text_config()?;
    let matcher = Matcher::new(kg.as_ref(), &oracle, &provider, &text, &config.beam);

    let decisions = match_pairs_parallel(&matcher, &pairs, config.run.workers)?;
    let out_path = args.out.clone().or_else(|| config.run.out.clone());
    match &out_path {
        Some(path) => write_traces(path, &decisions)?,
        None => {
            for decision in &decisions {
                println!(
                    "{}\t{}.{} ~ {}.{}",
                    if decision.predicted { "match" } else { "no-match" },
                    decision.pair.source.table_name,
                    decision.pair.source.attribute_name,
                    decision.pair.target.table_name,
                    decision.pair.target.attribute_name,
                );
            }
        }
    }
    let positives = decisions.iter().filter(|d| d.predicted).count();
    eprintln!(
        "matched {} pairs, {} predicted positive{}",
        decisions.len(),
        positives,
        out_path
            .map(|p| format!(", trace written to {}", p.display()))
            .unwrap_or_default()
    );
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    let decisions = crate::matcher::read_traces(&args.traces)?;
    let report = eval::evaluate(&decisions)?;
    let rendered = if args.json {
        serde_json::to_string_pretty(&report).map_err(|e| CliError {
            exit_code: EXIT_DATA,
            message: e.to_string(),
        })?
    } else {
        report.render_text()
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered).map_err(|e| CliError {
            exit_code: EXIT_DATA,
            message: format!("{}: {e}", path.display()),
        })?,
        None => println!("{rendered}"),
    }
    Ok(())
}

fn run_tee(cli: &Cli, args: &TeeArgs) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let kg = config.build_kg()?;
    let oracle = config.build_oracle()?;
    let provider = config.embedder();
    let text = config.text_config()?;
    let pipeline = TeePipeline::new(kg.as_ref(), &provider, &oracle, &text);
    let spec = AttributeSpec {
        side: match args.side {
            SideFlag::Source => SchemaSide::Source,
            SideFlag::Target => SchemaSide::Target,
        },
        table_name: args.table.clone(),
        attribute_name: args.attr.clone(),
        description: args.desc.clone(),
    };
    let outcome = pipeline.extract_topic_entity(&spec).map_err(|e| CliError {
        exit_code: EXIT_BACKEND,
        message: e.to_string(),
    })?;
    match outcome {
        TeeOutcome::Selected(selection) => {
            println!(
                "topic: {} ({})",
                selection.chosen.id, selection.chosen.label
            );
            println!("keywords: {}", selection.keywords.join(", "));
            for candidate in &selection.candidates {
                println!(
                    "  {}\t{:.4}\t{}",
                    candidate.entity.id, candidate.score.total, candidate.full_text
                );
            }
            if selection.fallback_used {
                println!("(oracle disambiguation failed; top-ranked candidate used)");
            }
        }
        TeeOutcome::NoTopicEntity { reason } => println!("no topic entity: {reason}"),
    }
    Ok(())
}

fn run_explore(cli: &Cli, args: &ExploreArgs) -> Result<(), CliError> {
    let mut config = load_config(cli)?;
    if let Some(depth) = args.depth {
        config.beam.max_depth = depth;
    }
    if let Some(width) = args.beam_width {
        config.beam.width = width;
    }
    config.validate()?;
    let kg = config.build_kg()?;
    let oracle = config.build_oracle()?;
    let labels = kg
        .fetch_labels(&args.topics)
        .map_err(|e| CliError {
            exit_code: EXIT_BACKEND,
            message: e.to_string(),
        })?;
    let topics: Vec<EntityRef> = args
        .topics
        .iter()
        .map(|id| {
            EntityRef::new(
                id.clone(),
                labels.get(id).cloned().unwrap_or_else(|| id.clone()),
                String::new(),
            )
        })
        .collect();
    let explorer = Explorer::new(kg.as_ref(), &oracle, &config.beam);
    let result = explorer.explore(&topics, &args.query).map_err(|e| CliError {
        exit_code: EXIT_BACKEND,
        message: e.to_string(),
    })?;
    println!("stop: {:?} after {} rounds", result.stop_mode, result.rounds);
    for (i, chain) in result.chains.iter().enumerate() {
        println!("{}. {}", i + 1, chain.render());
    }
    Ok(())
}

/// Parses `argv` and runs the selected subcommand. Returns the process exit
/// code; errors go to stderr.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/usage text
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Match(args) => run_match(&cli, args),
        Command::Eval(args) => run_eval(args),
        Command::Tee(args) => run_tee(&cli, args),
        Command::Explore(args) => run_explore(&cli, args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.exit_code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::AttributePair;
    use crate::oracle::{MockChatModel, Oracle, Temperatures};
    use crate::text::{HashedNgramEmbedder, TextConfig};
    use crate::explore::BeamConfig;
    use crate::kg::LocalStore;
    use std::sync::Arc;

    fn pairs(n: usize) -> Vec<AttributePair> {
        (0..n)
            .map(|i| AttributePair {
                source: AttributeSpec {
                    side: SchemaSide::Source,
                    table_name: "cms".into(),
                    attribute_name: format!("a{i}"),
                    description: format!("attribute number {i}"),
                },
                target: AttributeSpec {
                    side: SchemaSide::Target,
                    table_name: "omop".into(),
                    attribute_name: format!("b{i}"),
                    description: format!("other attribute {i}"),
                },
                gold_label: Some(false),
            })
            .collect()
    }

    #[test]
    fn parallel_matching_preserves_input_order() {
        let store = LocalStore::builder()
            .entity("Q1", "attribute", "a schema attribute")
            .build();
        let oracle = Oracle::new(Arc::new(MockChatModel::new()), Temperatures::default());
        let provider = HashedNgramEmbedder::default();
        let text = TextConfig::default();
        let beam = BeamConfig::default();
        let matcher = Matcher::new(&store, &oracle, &provider, &text, &beam);
        let pairs = pairs(7);
        let serial = match_pairs_parallel(&matcher, &pairs, 1).unwrap();
        let parallel = match_pairs_parallel(&matcher, &pairs, 4).unwrap();
        assert_eq!(serial.len(), 7);
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.pair, b.pair);
            assert_eq!(a.predicted, b.predicted);
            assert_eq!(
                serde_json::to_string(a).unwrap(),
                serde_json::to_string(b).unwrap()
            );
        }
    }

    #[test]
    fn bad_flag_exits_with_config_code() {
        assert_eq!(run(["smog", "match"]), EXIT_CONFIG); // missing --pairs
        assert_eq!(run(["smog", "--help"]), 0);
    }

    #[test]
    fn missing_pairs_file_is_data_error() {
        let code = run(["smog", "match", "--pairs", "/nonexistent/pairs.csv"]);
        assert_eq!(code, EXIT_DATA);
    }

    #[test]
    fn bad_config_file_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[beam]\nwidth = 0\n").unwrap();
        let code = run([
            "smog",
            "match",
            "--config",
            path.to_str().unwrap(),
            "--pairs",
            "/nonexistent/pairs.csv",
        ]);
        assert_eq!(code, EXIT_CONFIG);
    }
}
