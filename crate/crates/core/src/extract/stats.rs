use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ExtractedExample;
use crate::rules::Category;

/// Formality examples split by register, read from the rule id
/// (`INFORM` marks the informal forms, `FORM` the formal ones).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterCounts {
    pub formal: usize,
    pub informal: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub documents: usize,
    pub total_lines: usize,
    pub skipped_records: usize,
    pub examples: usize,
    /// Distinct (document, sentence) lines with at least one non-animacy example.
    pub extracted_lines: usize,
    /// Distinct lines with a Gender or Auxiliary example.
    pub coreference_lines: usize,
    pub percent_extracted: f64,
    pub percent_coreference: f64,
    pub per_category: BTreeMap<String, usize>,
    pub per_rule: BTreeMap<String, usize>,
    pub distance_histogram: BTreeMap<usize, usize>,
    pub register: RegisterCounts,
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 { 0.0 } else { 100.0 * part as f64 / whole as f64 }
}

/// Incremental form of [`compute_stats`] for streams.
#[derive(Debug, Default)]
pub struct StatsBuilder {
    stats: ExtractionStats,
    lines: BTreeSet<(String, usize)>,
    coref_lines: BTreeSet<(String, usize)>,
}

impl StatsBuilder {
    pub fn add(&mut self, ex: &ExtractedExample) {
        let stats = &mut self.stats;
        stats.examples += 1;
        *stats.per_category.entry(ex.category.name().to_owned()).or_default() += 1;
        *stats.per_rule.entry(ex.label()).or_default() += 1;
        if let Some(d) = ex.antecedent_distance {
            *stats.distance_histogram.entry(d).or_default() += 1;
        }
        let line = (ex.doc_id.clone(), ex.sentence_index());
        if matches!(ex.category, Category::Gender | Category::Auxiliary) {
            self.coref_lines.insert(line.clone());
        }
        if ex.category != Category::Animacy {
            self.lines.insert(line);
        }
        if ex.category == Category::Formality {
            let parts: Vec<&str> = ex.rule_id.split(['.', '+']).collect();
            if parts.contains(&"INFORM") {
                stats.register.informal += 1;
            } else if parts.contains(&"FORM") {
                stats.register.formal += 1;
            }
        }
    }

    pub fn add_document(&mut self, sentences: usize) {
        self.stats.documents += 1;
        self.stats.total_lines += sentences;
    }

    pub fn add_skipped(&mut self) {
        self.stats.skipped_records += 1;
    }

    pub fn finish(self) -> ExtractionStats {
        let mut stats = self.stats;
        stats.extracted_lines = self.lines.len();
        stats.coreference_lines = self.coref_lines.len();
        stats.percent_extracted = percent(stats.extracted_lines, stats.total_lines);
        stats.percent_coreference = percent(stats.coreference_lines, stats.total_lines);
        stats
    }
}

/// Aggregates examples over a corpus of `total_lines` sentence pairs.
///
/// Percentages count lines, not examples: a line producing several examples
/// counts once. Animacy examples come from the reversed direction and are left
/// out of the extracted-line percentage.
pub fn compute_stats<'a, I>(examples: I, total_lines: usize) -> ExtractionStats
where
    I: IntoIterator<Item = &'a ExtractedExample>,
{
    let mut builder = StatsBuilder::default();
    builder.stats.total_lines = total_lines;
    for ex in examples {
        builder.add(ex);
    }
    builder.finish()
}
