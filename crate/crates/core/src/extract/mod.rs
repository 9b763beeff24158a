//! Mining ambiguous sentence pairs from annotated documents.
//!
//! Every alignment link proposes a (source, target) pair for the ambiguous
//! token. A rule accepts the pair when both tokens meet its criteria, its
//! solver finds the context tokens, and those meet the context criteria.

mod stats;
mod stream;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{AnnotatedDocumentPair, Position, Side};
use crate::rules::{Category, Rule, RulePack, SolverKind};
use crate::solvers::{self, SolverResult, TokenRef};
use crate::text;

pub use stats::{ExtractionStats, RegisterCounts, StatsBuilder, compute_stats};
pub use stream::{ExtractOptions, StreamError, extract_stream, read_examples, sample};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("document {doc_id:?} is {doc_src}-{doc_tgt} but pack {pack_id:?} is {pack_src}-{pack_tgt}")]
pub struct LanguageMismatchError {
    pub doc_id: String,
    pub doc_src: String,
    pub doc_tgt: String,
    pub pack_id: String,
    pub pack_src: String,
    pub pack_tgt: String,
}

/// One of the four key tokens together with its surface text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyToken {
    #[serde(flatten)]
    pub at: TokenRef,
    pub form: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedExample {
    pub example_id: String,
    pub corpus: String,
    pub pack_id: String,
    pub doc_id: String,
    pub year: Option<i64>,
    pub category: Category,
    pub rule_id: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub src_context: Vec<String>,
    pub tgt_context: Vec<String>,
    pub src_sentence: String,
    pub tgt_sentence: String,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
    pub t_src: KeyToken,
    pub t_tgt: KeyToken,
    pub c_src: Option<KeyToken>,
    pub c_tgt: Option<KeyToken>,
    pub antecedent_distance: Option<usize>,
    pub expected_forms: Vec<String>,
    pub expected_case_sensitive: bool,
}

impl ExtractedExample {
    /// Label used for splitting and per-rule reporting: `pack_id/rule_id`.
    pub fn label(&self) -> String {
        format!("{}/{}", self.pack_id, self.rule_id)
    }

    pub fn sentence_index(&self) -> usize {
        self.t_src.at.sentence_index
    }
}

/// Extracts all examples of one document under one rule pack, ordered by
/// (sentence, source token, target token, rule order in the pack).
pub fn extract_from_document(
    doc: &AnnotatedDocumentPair,
    pack: &RulePack,
    max_distance: usize,
) -> Result<Vec<ExtractedExample>, LanguageMismatchError> {
    extract_with_corpus(doc, pack, max_distance, "")
}

pub(crate) fn extract_with_corpus(
    doc: &AnnotatedDocumentPair,
    pack: &RulePack,
    max_distance: usize,
    corpus: &str,
) -> Result<Vec<ExtractedExample>, LanguageMismatchError> {
    if doc.source_lang != pack.source_lang || doc.target_lang != pack.target_lang {
        return Err(LanguageMismatchError {
            doc_id: doc.doc_id.clone(),
            doc_src: doc.source_lang.clone(),
            doc_tgt: doc.target_lang.clone(),
            pack_id: pack.pack_id.clone(),
            pack_src: pack.source_lang.clone(),
            pack_tgt: pack.target_lang.clone(),
        });
    }
    let mut out = Vec::new();
    for link in doc.links() {
        for rule in &pack.rules {
            if let Some(result) = apply_rule(doc, rule, link.source(), link.target(), max_distance)
                && let Some(example) =
                    build_example(doc, pack, rule, link.source(), link.target(), result, max_distance, corpus)
            {
                out.push(example);
            }
        }
    }
    Ok(out)
}

/// Runs the per-rule checks for one aligned token pair; `Some` when all pass.
pub fn apply_rule(
    doc: &AnnotatedDocumentPair,
    rule: &Rule,
    src: Position,
    tgt: Position,
    max_distance: usize,
) -> Option<SolverResult> {
    let src_tokens = &doc.source[src.sentence].tokens;
    let tgt_tokens = &doc.target[tgt.sentence].tokens;
    if !rule.t_src.matches_at(src_tokens, src.token) || !rule.t_tgt.matches_at(tgt_tokens, tgt.token) {
        return None;
    }
    let result = match rule.solver {
        SolverKind::None => return Some(solvers::solve_none()),
        SolverKind::Coref => solvers::solve_coref(doc, src, max_distance)?,
        SolverKind::TargetVerbEllipsis => {
            if !tgt_tokens[tgt.token].is_verbal() {
                return None;
            }
            solvers::solve_target_verb(doc, tgt, max_distance)?
        }
        SolverKind::TargetCaseMatch => {
            if tgt_tokens.iter().any(|t| t.is_verbal()) {
                return None;
            }
            solvers::solve_target_case(doc, tgt, max_distance)?
        }
    };
    let context_ok = |criterion: &Option<crate::rules::TokenCriterion>, side: Side, at: Option<TokenRef>| {
        let Some(criterion) = criterion else { return true };
        let Some(at) = at else { return false };
        criterion.matches_at(&doc.sentences(side)[at.sentence_index].tokens, at.token_index)
    };
    (context_ok(&rule.c_src, Side::Source, result.c_src) && context_ok(&rule.c_tgt, Side::Target, result.c_tgt))
        .then_some(result)
}

fn span_text(tokens: &[crate::annotation::Token], end: usize, len: usize) -> String {
    let start = (end + 1).saturating_sub(len);
    tokens[start..=end].iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
}

#[allow(clippy::too_many_arguments)]
fn build_example(
    doc: &AnnotatedDocumentPair,
    pack: &RulePack,
    rule: &Rule,
    src: Position,
    tgt: Position,
    result: SolverResult,
    max_distance: usize,
    corpus: &str,
) -> Option<ExtractedExample> {
    let s = src.sentence;
    let src_tokens = &doc.source[s].tokens;
    let tgt_tokens = &doc.target[s].tokens;
    let tgt_sentence = text::detokenize(doc.target[s].forms());

    let t_tgt_form = span_text(tgt_tokens, tgt.token, rule.t_tgt.span_len());
    let candidates =
        if rule.expected_forms.is_empty() { vec![t_tgt_form.clone()] } else { rule.expected_forms.clone() };
    let words = text::word_tokens(&tgt_sentence);
    let expected_forms: Vec<String> = candidates
        .into_iter()
        .filter(|f| text::contains_whole_tokens(&words, f, rule.expected_case_sensitive))
        .collect();
    if expected_forms.is_empty() {
        return None;
    }

    let key = |side: Side, at: TokenRef, len: usize| KeyToken {
        at,
        form: span_text(&doc.sentences(side)[at.sentence_index].tokens, at.token_index, len),
    };
    let first_context = s.saturating_sub(max_distance);
    Some(ExtractedExample {
        example_id: format!("{}:{}:{}/{}:{}-{}", doc.doc_id, s, pack.pack_id, rule.rule_id, src.token, tgt.token),
        corpus: corpus.to_owned(),
        pack_id: pack.pack_id.clone(),
        doc_id: doc.doc_id.clone(),
        year: doc.year,
        category: rule.category,
        rule_id: rule.rule_id.clone(),
        src_lang: doc.source_lang.clone(),
        tgt_lang: doc.target_lang.clone(),
        src_context: doc.source[first_context..s].iter().map(|x| text::detokenize(x.forms())).collect(),
        tgt_context: doc.target[first_context..s].iter().map(|x| text::detokenize(x.forms())).collect(),
        src_sentence: text::detokenize(doc.source[s].forms()),
        tgt_sentence,
        src_tokens: src_tokens.iter().map(|t| t.form.clone()).collect(),
        tgt_tokens: tgt_tokens.iter().map(|t| t.form.clone()).collect(),
        t_src: key(Side::Source, TokenRef::new(Side::Source, src), rule.t_src.span_len()),
        t_tgt: KeyToken { at: TokenRef::new(Side::Target, tgt), form: t_tgt_form },
        c_src: result.c_src.map(|at| key(Side::Source, at, 1)),
        c_tgt: result.c_tgt.map(|at| key(Side::Target, at, 1)),
        antecedent_distance: result.antecedent_distance,
        expected_forms,
        expected_case_sensitive: rule.expected_case_sensitive,
    })
}
