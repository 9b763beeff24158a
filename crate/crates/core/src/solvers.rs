//! Contextual-relationship solvers: given the ambiguous token, locate the
//! source and target tokens that resolve it.
//!
//! All solvers look backwards only (anaphora). A returned context token always
//! strictly precedes the ambiguous token in document order, and its sentence
//! lies at most `max_distance` sentences earlier.

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotatedDocumentPair, Mention, Position, Side};

/// Default look-back window in sentences.
pub const DEFAULT_MAX_DISTANCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenRef {
    pub side: Side,
    pub sentence_index: usize,
    pub token_index: usize,
}

impl TokenRef {
    pub fn new(side: Side, pos: Position) -> Self {
        TokenRef { side, sentence_index: pos.sentence, token_index: pos.token }
    }

    pub fn position(&self) -> Position {
        Position::new(self.sentence_index, self.token_index)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverResult {
    pub c_src: Option<TokenRef>,
    pub c_tgt: Option<TokenRef>,
    pub antecedent_distance: Option<usize>,
}

/// Formality needs no context token.
pub fn solve_none() -> SolverResult {
    SolverResult::default()
}

/// Head token of a mention span.
///
/// The head is the unique span token whose dependency head lies outside the
/// span (or which is the sentence root). Without complete head annotation, or
/// when that token is not unique, the last NOUN/PROPN/PRON of the span is used,
/// and failing that the last token.
pub fn head_of_span(doc: &AnnotatedDocumentPair, mention: &Mention) -> TokenRef {
    let tokens = &doc.source[mention.sentence_index].tokens[mention.start..mention.end];
    let inside = |i: usize| mention.start <= i && i < mention.end;

    if tokens.iter().all(|t| t.head.is_some()) {
        let mut heads = tokens.iter().filter(|t| {
            let h = t.head.unwrap();
            h == t.index || !inside(h)
        });
        if let (Some(only), None) = (heads.next(), heads.next()) {
            return TokenRef::new(Side::Source, Position::new(mention.sentence_index, only.index));
        }
    }
    let fallback = tokens
        .iter()
        .rev()
        .find(|t| matches!(t.upos.as_ref(), "NOUN" | "PROPN" | "PRON"))
        .unwrap_or(tokens.last().expect("mentions are nonempty"));
    TokenRef::new(Side::Source, Position::new(mention.sentence_index, fallback.index))
}

/// Antecedent of a source token through the coreference chains.
///
/// Among the mentions that share a chain with a mention covering `t_src` and
/// that start before it (earlier sentence, or same sentence with an earlier
/// start), the nearest one is taken. Its head is `c_src`; the lowest-index
/// target token aligned to the head is `c_tgt`.
pub fn solve_coref(doc: &AnnotatedDocumentPair, t_src: Position, max_distance: usize) -> Option<SolverResult> {
    let mut best: Option<&Mention> = None;
    for chain in &doc.source_coref {
        if !chain.mentions.iter().any(|m| m.covers(t_src)) {
            continue;
        }
        // Mentions are ordered; the last one preceding t_src is the nearest in this chain.
        let nearest = chain
            .mentions
            .iter()
            .take_while(|m| (m.sentence_index, m.start) < (t_src.sentence, t_src.token))
            .filter(|m| !m.covers(t_src))
            .max_by_key(|m| (m.sentence_index, m.start, m.end));
        if let Some(m) = nearest
            && best.is_none_or(|b| (m.sentence_index, m.start, m.end) > (b.sentence_index, b.start, b.end))
        {
            best = Some(m);
        }
    }
    let mention = best?;
    let distance = t_src.sentence - mention.sentence_index;
    if distance > max_distance {
        return None;
    }
    let c_src = head_of_span(doc, mention);
    let c_tgt = doc.first_aligned(Side::Source, c_src.position())?;
    Some(SolverResult {
        c_src: Some(c_src),
        c_tgt: Some(TokenRef::new(Side::Target, c_tgt)),
        antecedent_distance: Some(distance),
    })
}

// Scans target tokens before `t_tgt`, nearest first: leftward within its own
// sentence, then earlier sentences right to left, stopping at `max_distance`.
fn scan_target_back<F>(
    doc: &AnnotatedDocumentPair,
    t_tgt: Position,
    max_distance: usize,
    mut accept: F,
) -> Option<SolverResult>
where
    F: FnMut(&crate::annotation::Token) -> bool,
{
    let lowest = t_tgt.sentence.saturating_sub(max_distance);
    for s in (lowest..=t_tgt.sentence).rev() {
        let tokens = &doc.target.get(s)?.tokens;
        let end = if s == t_tgt.sentence { t_tgt.token.min(tokens.len()) } else { tokens.len() };
        if let Some(found) = tokens[..end].iter().rev().find(|t| accept(t)) {
            let c_tgt = Position::new(s, found.index);
            return Some(SolverResult {
                c_src: doc.first_aligned(Side::Target, c_tgt).map(|p| TokenRef::new(Side::Source, p)),
                c_tgt: Some(TokenRef::new(Side::Target, c_tgt)),
                antecedent_distance: Some(t_tgt.sentence - s),
            });
        }
    }
    None
}

/// Most recent earlier target verb (VERB or AUX) sharing the lemma of `t_tgt`.
pub fn solve_target_verb(doc: &AnnotatedDocumentPair, t_tgt: Position, max_distance: usize) -> Option<SolverResult> {
    let lemma = &doc.token_at(Side::Target, t_tgt).ok()?.lemma;
    if lemma.is_empty() {
        return None;
    }
    scan_target_back(doc, t_tgt, max_distance, |t| t.is_verbal() && crate::rules::eq_fold(&t.lemma, lemma))
}

/// Most recent earlier target NOUN carrying the same `Case` value as `t_tgt`.
pub fn solve_target_case(doc: &AnnotatedDocumentPair, t_tgt: Position, max_distance: usize) -> Option<SolverResult> {
    let case = doc.token_at(Side::Target, t_tgt).ok()?.feats.get("Case")?;
    scan_target_back(doc, t_tgt, max_distance, |t| t.upos == "NOUN" && t.feats.get("Case") == Some(case))
}
