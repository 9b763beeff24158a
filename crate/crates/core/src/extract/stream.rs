use std::collections::HashSet;
use std::io::{self, BufRead};

use rand::SeedableRng;
use rand::seq::IteratorRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::{ExtractedExample, ExtractionStats, LanguageMismatchError, StatsBuilder, extract_with_corpus};
use crate::annotation::{AnnotationError, parse_document};
use crate::rules::RulePack;
use crate::solvers::DEFAULT_MAX_DISTANCE;

const BATCH_LINES: usize = 2048;

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub max_distance: usize,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    /// Skip and count bad records instead of failing on the first one.
    pub continue_on_error: bool,
    /// Corpus name recorded in every example.
    pub corpus: String,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            max_distance: DEFAULT_MAX_DISTANCE,
            jobs: None,
            continue_on_error: false,
            corpus: String::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: AnnotationError,
    },
    #[error("line {line}: {source}")]
    Language {
        line: usize,
        #[source]
        source: LanguageMismatchError,
    },
    #[error("line {line}: duplicate doc_id {doc_id:?}")]
    DuplicateDocument { line: usize, doc_id: String },
    #[error("rule packs disagree on direction: {0}")]
    MixedPacks(String),
    #[error("line {line}: invalid example record: {message}")]
    Example { line: usize, message: String },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

enum LineOutcome {
    Blank,
    Document { doc_id: String, sentences: usize, examples: Vec<ExtractedExample> },
    Failed(StreamError),
}

fn process_line(line_no: usize, line: &str, packs: &[RulePack], opts: &ExtractOptions) -> LineOutcome {
    if line.trim().is_empty() {
        return LineOutcome::Blank;
    }
    let doc = match parse_document(line) {
        Ok(doc) => doc,
        Err(source) => return LineOutcome::Failed(StreamError::Parse { line: line_no, source }),
    };
    let mut examples = Vec::new();
    for pack in packs {
        match extract_with_corpus(&doc, pack, opts.max_distance, &opts.corpus) {
            Ok(found) => examples.extend(found),
            Err(source) => return LineOutcome::Failed(StreamError::Language { line: line_no, source }),
        }
    }
    // Interleave packs by position; the sort is stable, so pack order and
    // rule order break ties.
    examples.sort_by_key(|e| (e.t_src.at.sentence_index, e.t_src.at.token_index, e.t_tgt.at.token_index));
    LineOutcome::Document { doc_id: doc.doc_id, sentences: doc.source.len(), examples }
}

/// Extracts examples from a JSONL corpus, handing them to `sink` in input order.
///
/// Lines are parsed and mined in parallel batches; results are consumed in
/// line order, so the output is the same for any number of workers. Blank
/// lines are ignored.
pub fn extract_stream<R, F>(
    reader: R,
    packs: &[RulePack],
    opts: &ExtractOptions,
    mut sink: F,
) -> Result<ExtractionStats, StreamError>
where
    R: BufRead,
    F: FnMut(&ExtractedExample) -> io::Result<()>,
{
    if let Some(first) = packs.first()
        && let Some(other) = packs.iter().find(|p| p.direction() != first.direction())
    {
        return Err(StreamError::MixedPacks(format!(
            "{} is {}-{}, {} is {}-{}",
            first.pack_id, first.source_lang, first.target_lang, other.pack_id, other.source_lang, other.target_lang
        )));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = opts.jobs {
        builder = builder.num_threads(jobs.max(1));
    }
    let pool = builder.build().map_err(|e| StreamError::Pool(e.to_string()))?;

    let mut stats = StatsBuilder::default();
    let mut seen = HashSet::new();
    let mut lines = reader.lines();
    let mut line_no = 0;
    loop {
        let mut batch = Vec::with_capacity(BATCH_LINES);
        for line in lines.by_ref().take(BATCH_LINES) {
            line_no += 1;
            batch.push((line_no, line?));
        }
        if batch.is_empty() {
            break;
        }
        let outcomes: Vec<LineOutcome> =
            pool.install(|| batch.par_iter().map(|(n, line)| process_line(*n, line, packs, opts)).collect());
        for ((n, _), outcome) in batch.iter().zip(outcomes) {
            let outcome = match outcome {
                LineOutcome::Document { doc_id, .. } if seen.contains(&doc_id) => {
                    LineOutcome::Failed(StreamError::DuplicateDocument { line: *n, doc_id })
                }
                other => other,
            };
            match outcome {
                LineOutcome::Blank => {}
                LineOutcome::Failed(_) if opts.continue_on_error => stats.add_skipped(),
                LineOutcome::Failed(err) => return Err(err),
                LineOutcome::Document { doc_id, sentences, examples } => {
                    seen.insert(doc_id);
                    stats.add_document(sentences);
                    for ex in &examples {
                        stats.add(ex);
                        sink(ex)?;
                    }
                }
            }
        }
    }
    Ok(stats.finish())
}

/// Reads examples written by [`extract_stream`], one JSON object per line.
pub fn read_examples<R: BufRead>(reader: R) -> Result<Vec<ExtractedExample>, StreamError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex =
            serde_json::from_str(&line).map_err(|e| StreamError::Example { line: i + 1, message: e.to_string() })?;
        out.push(ex);
    }
    Ok(out)
}

/// Draws `n` items uniformly at random (reservoir sampling, seeded), returned
/// in their original order.
pub fn sample<T, I>(items: I, n: usize, seed: u64) -> Vec<T>
where
    I: IntoIterator<Item = T>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = items.into_iter().enumerate().choose_multiple(&mut rng, n);
    picked.sort_by_key(|(i, _)| *i);
    picked.into_iter().map(|(_, x)| x).collect()
}
