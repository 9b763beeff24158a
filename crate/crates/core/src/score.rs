//! Generative accuracy: a system output is correct when its final sentence
//! contains one of the example's expected forms as whole tokens.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ExtractedExample;
use crate::rules::Category;
use crate::text::{self, Segmentation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub example_id: String,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("hypothesis for unknown example {0:?}")]
    UnknownExample(String),
    #[error("more than one hypothesis for example {0:?}")]
    DuplicateHypothesis(String),
    #[error("example id {0:?} occurs more than once")]
    DuplicateExample(String),
    #[error("line {line}: invalid hypothesis record: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads hypotheses from JSONL `{"example_id": ..., "text": ...}` lines.
pub fn read_hypotheses<R: BufRead>(reader: R) -> Result<Vec<Hypothesis>, ScoreError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let h = serde_json::from_str(&line).map_err(|e| ScoreError::Record { line: i + 1, message: e.to_string() })?;
        out.push(h);
    }
    Ok(out)
}

pub fn is_correct(example: &ExtractedExample, hypothesis: &str, segmentation: Segmentation) -> bool {
    let sentence = text::final_sentence(hypothesis, segmentation);
    let tokens = text::word_tokens(sentence);
    example
        .expected_forms
        .iter()
        .any(|form| text::contains_whole_tokens(&tokens, form, example.expected_case_sensitive))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
    /// Percentage; absent when nothing was scored.
    pub accuracy: Option<f64>,
}

impl Tally {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }

    fn finish(&mut self) {
        self.accuracy = (self.total > 0).then(|| 100.0 * self.correct as f64 / self.total as f64);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub overall: Tally,
    /// Keyed by `pack_id/rule_id`.
    pub per_rule: BTreeMap<String, Tally>,
    pub per_category: BTreeMap<Category, Tally>,
    /// Category, then target language.
    pub per_category_language: BTreeMap<Category, BTreeMap<String, Tally>>,
    pub per_distance: BTreeMap<usize, Tally>,
    /// Examples without an antecedent distance (formality).
    pub no_distance: Tally,
    /// Examples that had no hypothesis and were left out.
    pub unscored_examples: usize,
}

fn index_examples(examples: &[ExtractedExample]) -> Result<HashMap<&str, &ExtractedExample>, ScoreError> {
    let mut by_id = HashMap::with_capacity(examples.len());
    for ex in examples {
        if by_id.insert(ex.example_id.as_str(), ex).is_some() {
            return Err(ScoreError::DuplicateExample(ex.example_id.clone()));
        }
    }
    Ok(by_id)
}

pub fn score(
    examples: &[ExtractedExample],
    hypotheses: &[Hypothesis],
    segmentation: Segmentation,
) -> Result<ScoreReport, ScoreError> {
    let by_id = index_examples(examples)?;
    let mut seen = HashSet::with_capacity(hypotheses.len());
    let mut report = ScoreReport::default();
    for h in hypotheses {
        let ex = by_id.get(h.example_id.as_str()).ok_or_else(|| ScoreError::UnknownExample(h.example_id.clone()))?;
        if !seen.insert(h.example_id.as_str()) {
            return Err(ScoreError::DuplicateHypothesis(h.example_id.clone()));
        }
        let ok = is_correct(ex, &h.text, segmentation);
        report.overall.add(ok);
        report.per_rule.entry(ex.label()).or_default().add(ok);
        report.per_category.entry(ex.category).or_default().add(ok);
        report.per_category_language.entry(ex.category).or_default().entry(ex.tgt_lang.clone()).or_default().add(ok);
        match ex.antecedent_distance {
            Some(d) => report.per_distance.entry(d).or_default().add(ok),
            None => report.no_distance.add(ok),
        }
    }
    report.unscored_examples = examples.len() - seen.len();
    report.overall.finish();
    report.no_distance.finish();
    report
        .per_rule
        .values_mut()
        .chain(report.per_category.values_mut())
        .chain(report.per_category_language.values_mut().flat_map(|m| m.values_mut()))
        .chain(report.per_distance.values_mut())
        .for_each(Tally::finish);
    Ok(report)
}

fn cell(t: Option<&Tally>) -> String {
    match t.and_then(|t| t.accuracy) {
        Some(a) => format!("{a:.1}"),
        None => "-".into(),
    }
}

/// Plain-text table: categories as rows, target languages as columns, then
/// per-rule and per-distance breakdowns.
pub fn render_table(report: &ScoreReport) -> String {
    let mut out = String::new();
    if report.overall.total == 0 {
        out.push_str("no hypotheses scored; accuracy undefined\n");
        let _ = writeln!(out, "unscored examples: {}", report.unscored_examples);
        return out;
    }
    let langs: Vec<&str> = report
        .per_category_language
        .values()
        .flat_map(|m| m.keys().map(String::as_str))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let _ = write!(out, "{:<12}", "Category");
    for l in &langs {
        let _ = write!(out, " {:>6}", l.to_uppercase());
    }
    let _ = writeln!(out, " {:>6} {:>8}", "All", "n");
    for (cat, tally) in &report.per_category {
        let _ = write!(out, "{:<12}", cat.name());
        for l in &langs {
            let _ = write!(out, " {:>6}", cell(report.per_category_language[cat].get(*l)));
        }
        let _ = writeln!(out, " {:>6} {:>8}", cell(Some(tally)), tally.total);
    }
    let _ = writeln!(
        out,
        "{:<12}{} {:>6} {:>8}",
        "Overall",
        " ".repeat(7 * langs.len()),
        cell(Some(&report.overall)),
        report.overall.total
    );

    let width = report.per_rule.keys().map(|k| k.chars().count()).max().unwrap_or(4).max(4);
    let _ = writeln!(out, "\n{:<width$} {:>7} {:>8} {:>8}", "Rule", "Acc", "Correct", "Total");
    for (rule, t) in &report.per_rule {
        let _ = writeln!(out, "{:<width$} {:>7} {:>8} {:>8}", rule, cell(Some(t)), t.correct, t.total);
    }

    let _ = writeln!(out, "\n{:<8} {:>7} {:>8}", "Distance", "Acc", "Total");
    for (d, t) in &report.per_distance {
        let _ = writeln!(out, "{:<8} {:>7} {:>8}", d, cell(Some(t)), t.total);
    }
    if report.no_distance.total > 0 {
        let _ = writeln!(out, "{:<8} {:>7} {:>8}", "none", cell(Some(&report.no_distance)), report.no_distance.total);
    }
    if report.unscored_examples > 0 {
        let _ = writeln!(out, "\nunscored examples: {}", report.unscored_examples);
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportCounts {
    pub written: usize,
    pub missing: usize,
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Writes `source \t reference \t hypothesis` lines for external metrics, in
/// example order. The hypothesis column holds the scored final sentence.
/// Examples without a hypothesis are skipped and counted.
pub fn export_pairs<W: Write>(
    examples: &[ExtractedExample],
    hypotheses: &[Hypothesis],
    segmentation: Segmentation,
    mut out: W,
) -> Result<ExportCounts, ScoreError> {
    let by_id = index_examples(examples)?;
    let mut texts: HashMap<&str, &str> = HashMap::with_capacity(hypotheses.len());
    for h in hypotheses {
        if !by_id.contains_key(h.example_id.as_str()) {
            return Err(ScoreError::UnknownExample(h.example_id.clone()));
        }
        if texts.insert(h.example_id.as_str(), h.text.as_str()).is_some() {
            return Err(ScoreError::DuplicateHypothesis(h.example_id.clone()));
        }
    }
    let mut counts = ExportCounts::default();
    for ex in examples {
        match texts.get(ex.example_id.as_str()) {
            Some(hyp) => {
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    tsv_field(&ex.src_sentence),
                    tsv_field(&ex.tgt_sentence),
                    tsv_field(text::final_sentence(hyp, segmentation))
                )?;
                counts.written += 1;
            }
            None => counts.missing += 1,
        }
    }
    out.flush()?;
    Ok(counts)
}
