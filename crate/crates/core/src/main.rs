use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, anyhow};
use clap::{Args, Parser, Subcommand};

use ctxmine::annotation::parse_document;
use ctxmine::extract::{self, ExtractOptions, ExtractedExample, ExtractionStats};
use ctxmine::rules::{self, RuleError, RulePack};
use ctxmine::score::{self, Hypothesis};
use ctxmine::solvers::DEFAULT_MAX_DISTANCE;
use ctxmine::split::{self, SplitConfig};
use ctxmine::text::Segmentation;

#[derive(Parser)]
#[command(name = "ctxmine", version, about = "Mine, split and score context-dependent translation examples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract examples from an annotated JSONL corpus.
    Extract(ExtractArgs),
    /// Split extracted examples into dev/devtest/test files per label.
    Split(SplitArgs),
    /// Score system outputs against extracted examples.
    Score(ScoreArgs),
    /// Print extraction statistics for a corpus without writing examples.
    Stats(CorpusArgs),
    /// Load rule packs and report problems.
    ValidateRules(RulesArgs),
    /// Write the animacy pack derived from a pronoun pack.
    ReverseRules(ReverseArgs),
}

#[derive(Args)]
struct RulesArgs {
    /// Rule pack file or pack name (repeatable). Names are looked up in
    /// $CTXMINE_RULES_DIR or the shipped rules directory.
    #[arg(long = "rules", value_name = "PACK")]
    rules: Vec<String>,
    /// Directory for pack names; overrides $CTXMINE_RULES_DIR.
    #[arg(long, value_name = "DIR")]
    rules_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    #[command(flatten)]
    rules: RulesArgs,
    /// Annotated corpus (JSONL); `-` reads standard input.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_DISTANCE)]
    max_distance: usize,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Skip malformed records instead of stopping.
    #[arg(long)]
    continue_on_error: bool,
    /// Corpus name stored in every example (default: input file stem).
    #[arg(long)]
    corpus: Option<String>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Output directory for examples.jsonl and stats.json.
    #[arg(long)]
    out: PathBuf,
    /// Also write a uniform random sample of N examples to sample.jsonl.
    #[arg(long, value_name = "N")]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SplitArgs {
    /// Extracted examples (JSONL).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    min_label_count: usize,
    #[arg(long, default_value_t = 5000)]
    test_cap: usize,
    /// Rule packs whose labels without examples are noted in the manifest.
    #[command(flatten)]
    rules: RulesArgs,
}

#[derive(Args)]
struct ScoreArgs {
    /// Extracted examples (JSONL).
    #[arg(long)]
    input: PathBuf,
    /// System outputs, JSONL {"example_id", "text"}.
    #[arg(long, required_unless_present = "references")]
    hypotheses: Option<PathBuf>,
    /// Score each example's own reference translation.
    #[arg(long)]
    references: bool,
    /// Score the whole output instead of its final sentence.
    #[arg(long, conflicts_with = "presegmented")]
    no_segmentation: bool,
    /// Outputs are one sentence per line; score the last line.
    #[arg(long)]
    presegmented: bool,
    /// Directory for report.json and pairs.tsv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReverseArgs {
    #[command(flatten)]
    rules: RulesArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes, mapped to exit codes 2, 1 and 3.
enum Failure {
    Usage(anyhow::Error),
    Validation(anyhow::Error),
    Fatal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Fatal(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Split(a) => cmd_split(a),
        Command::Score(a) => cmd_score(a),
        Command::Stats(a) => cmd_stats(a),
        Command::ValidateRules(a) => cmd_validate_rules(a),
        Command::ReverseRules(a) => cmd_reverse_rules(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, err) = match f {
                Failure::Usage(e) => (2, e),
                Failure::Validation(e) => (1, e),
                Failure::Fatal(e) => (3, e),
            };
            eprintln!("error: {}", render_chain(&err));
            ExitCode::from(code)
        }
    }
}

/// Joins the error chain, skipping causes the previous message already quotes.
fn render_chain(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if last.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
        last = text;
    }
    out
}

fn rules_dir(args: &RulesArgs) -> PathBuf {
    args.rules_dir.clone().unwrap_or_else(rules::default_rules_dir)
}

fn load_packs(args: &RulesArgs) -> Result<Vec<RulePack>, Failure> {
    let dir = rules_dir(args);
    args.rules
        .iter()
        .map(|spec| {
            rules::resolve_pack(spec, &dir).map_err(|e| match e {
                RuleError::NotFound { .. } => Failure::Usage(e.into()),
                RuleError::Io { .. } => Failure::Usage(e.into()),
                other => Failure::Validation(anyhow!(other).context(format!("rule pack {spec}"))),
            })
        })
        .collect()
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, Failure> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdin().lock()));
    }
    let file =
        File::open(path).map_err(|e| Failure::Usage(anyhow!(e).context(format!("cannot open {}", path.display()))))?;
    Ok(Box::new(BufReader::new(file)))
}

/// Direction of the first document in a corpus file.
fn corpus_direction(path: &Path) -> Result<(String, String), Failure> {
    let reader = open_input(path)?;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_document(&line).context("first record")?;
        return Ok((doc.source_lang, doc.target_lang));
    }
    Err(Failure::Usage(anyhow!("{} contains no documents", path.display())))
}

fn corpus_packs(args: &CorpusArgs) -> Result<Vec<RulePack>, Failure> {
    if !args.rules.rules.is_empty() {
        return load_packs(&args.rules);
    }
    if args.input == Path::new("-") {
        return Err(Failure::Usage(anyhow!("--rules is required when reading standard input")));
    }
    let (src, tgt) = corpus_direction(&args.input)?;
    let dir = rules_dir(&args.rules);
    let packs = rules::packs_for_direction(&dir, &src, &tgt).map_err(|e| Failure::Usage(e.into()))?;
    if packs.is_empty() {
        return Err(Failure::Usage(anyhow!("no rule packs for {src}-{tgt} in {}", dir.display())));
    }
    Ok(packs)
}

fn run_corpus<F>(args: &CorpusArgs, sink: F) -> Result<ExtractionStats, Failure>
where
    F: FnMut(&ExtractedExample) -> io::Result<()>,
{
    let packs = corpus_packs(args)?;
    let names: Vec<&str> = packs.iter().map(|p| p.pack_id.as_str()).collect();
    eprintln!("rule packs: {}", names.join(", "));
    let reader = open_input(&args.input)?;
    let opts = ExtractOptions {
        max_distance: args.max_distance,
        jobs: args.jobs,
        continue_on_error: args.continue_on_error,
        corpus: args
            .corpus
            .clone()
            .unwrap_or_else(|| args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()),
    };
    let stats = extract::extract_stream(reader, &packs, &opts, sink)
        .with_context(|| format!("extracting from {}", args.input.display()))?;
    Ok(stats)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Outcome {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("examples.jsonl");
    let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    let mut kept = Vec::new();
    let stats = run_corpus(&args.corpus, |ex| {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n")?;
        if args.sample.is_some() {
            kept.push(ex.clone());
        }
        Ok(())
    })?;
    out.flush()?;
    write_json(&args.out.join("stats.json"), &stats)?;
    if let Some(n) = args.sample {
        let path = args.out.join("sample.jsonl");
        let mut w = BufWriter::new(File::create(&path)?);
        for ex in extract::sample(kept, n, args.seed) {
            serde_json::to_writer(&mut w, &ex)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    eprintln!(
        "{} documents, {} lines, {} examples, {} skipped",
        stats.documents, stats.total_lines, stats.examples, stats.skipped_records
    );
    Ok(())
}

fn cmd_stats(args: CorpusArgs) -> Outcome {
    let stats = run_corpus(&args, |_| Ok(()))?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn read_examples(path: &Path) -> Result<Vec<ExtractedExample>, Failure> {
    let reader = open_input(path)?;
    Ok(extract::read_examples(reader).with_context(|| format!("reading {}", path.display()))?)
}

fn cmd_split(args: SplitArgs) -> Outcome {
    let examples = read_examples(&args.input)?;
    let test_cap = args.test_cap.max(1);
    let config = SplitConfig {
        min_label_count: args.min_label_count,
        test_cap,
        dev_cap: (test_cap / 5).max(1),
        devtest_cap: (test_cap / 5).max(1),
        ..SplitConfig::default()
    };
    let known: Vec<String> = load_packs(&args.rules)?
        .iter()
        .flat_map(|p| p.rules.iter().map(move |r| format!("{}/{}", p.pack_id, r.rule_id)))
        .collect();
    let assignments = split::split(&examples, &config);
    let manifest = split::write_splits(&assignments, &examples, &args.out, &known)?;
    for (label, entry) in &manifest.labels {
        let note = entry.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
        eprintln!(
            "{label}: dev {} devtest {} test {} unassigned {}{note}",
            entry.dev, entry.devtest, entry.test, entry.unassigned
        );
    }
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Outcome {
    let examples = read_examples(&args.input)?;
    let hypotheses: Vec<Hypothesis> = match &args.hypotheses {
        Some(path) if !args.references => {
            score::read_hypotheses(open_input(path)?).with_context(|| format!("reading {}", path.display()))?
        }
        _ => examples
            .iter()
            .map(|e| Hypothesis { example_id: e.example_id.clone(), text: e.tgt_sentence.clone() })
            .collect(),
    };
    let segmentation = if args.no_segmentation {
        Segmentation::Off
    } else if args.presegmented {
        Segmentation::Lines
    } else {
        Segmentation::Rules
    };
    let report = score::score(&examples, &hypotheses, segmentation).map_err(|e| Failure::Validation(e.into()))?;
    print!("{}", score::render_table(&report));
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        write_json(&out.join("report.json"), &report)?;
        let file = BufWriter::new(File::create(out.join("pairs.tsv"))?);
        let counts = score::export_pairs(&examples, &hypotheses, segmentation, file)?;
        eprintln!("pairs.tsv: {} lines, {} examples without output", counts.written, counts.missing);
    }
    Ok(())
}

fn cmd_validate_rules(args: RulesArgs) -> Outcome {
    if args.rules.is_empty() {
        return Err(Failure::Usage(anyhow!("no rule packs given")));
    }
    let packs = load_packs(&args)?;
    for pack in &packs {
        let diagnostics = rules::validate_pack(pack);
        println!("{}: {} rules, {} diagnostics", pack.pack_id, pack.rules.len(), diagnostics.len());
        for d in diagnostics {
            println!("  warning: {d}");
        }
    }
    Ok(())
}

fn cmd_reverse_rules(args: ReverseArgs) -> Outcome {
    let [pack] =
        load_packs(&args.rules)?.try_into().map_err(|_| Failure::Usage(anyhow!("give exactly one --rules pack")))?;
    let reversed = pack.reversed_for_animacy();
    write_json(&args.out, &reversed.to_json())?;
    eprintln!("{}: {} rules", reversed.pack_id, reversed.rules.len());
    Ok(())
}
