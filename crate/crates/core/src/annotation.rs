//! Annotated parallel documents and the JSONL interchange format.
//!
//! One line of a corpus file holds one [`AnnotatedDocumentPair`]: a
//! sentence-aligned source/target document with per-token morphology,
//! dependency heads, source-side coreference chains and word alignments.
//! Everything downstream (matching, solving, extraction) works on the
//! validated in-memory form produced by [`parse_document`].

use std::borrow::Cow;
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Feature values accepted for the recognized morphological features.
const RECOGNIZED_FEATURES: &[(&str, &[&str])] = &[
    ("Case", &["Nom", "Acc", "Dat", "Gen", "Loc", "Ins"]),
    ("Gender", &["Masc", "Fem", "Neut"]),
    ("Number", &["Sing", "Plur"]),
    ("Person", &["1", "2", "3"]),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("schema error{}: {path}: {message}", doc_suffix(.doc_id))]
    Schema { doc_id: Option<String>, path: String, message: String },
    #[error("range error{}: {location}: {message}", doc_suffix(.doc_id))]
    Range { doc_id: Option<String>, location: String, message: String },
}

fn doc_suffix(doc_id: &Option<String>) -> String {
    match doc_id {
        Some(id) => format!(" in document {id:?}"),
        None => String::new(),
    }
}

impl AnnotationError {
    fn schema(doc_id: Option<&str>, path: impl Into<String>, message: impl Into<String>) -> Self {
        AnnotationError::Schema { doc_id: doc_id.map(str::to_owned), path: path.into(), message: message.into() }
    }

    fn range(doc_id: Option<&str>, location: impl Into<String>, message: impl Into<String>) -> Self {
        AnnotationError::Range { doc_id: doc_id.map(str::to_owned), location: location.into(), message: message.into() }
    }

    pub fn doc_id(&self) -> Option<&str> {
        match self {
            AnnotationError::Schema { doc_id, .. } | AnnotationError::Range { doc_id, .. } => doc_id.as_deref(),
        }
    }
}

/// Feature name to value mapping of a single token (`Case=Nom`, `Gender=Fem`, ...).
///
/// Names are unique by construction. Values of the recognized features
/// (`Case`, `Gender`, `Number`, `Person`) are checked by [`MorphFeatures::validate`];
/// anything else is carried verbatim.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MorphFeatures(Vec<(Tag, Tag)>);

/// A string from a small closed vocabulary (UPOS tags, feature names and
/// values). Known values are shared statics, so parsing a token does not
/// allocate for them.
pub type Tag = Cow<'static, str>;

fn shared_tag(s: &str) -> Option<&'static str> {
    Some(match s {
        "ADJ" => "ADJ",
        "ADP" => "ADP",
        "ADV" => "ADV",
        "AUX" => "AUX",
        "CCONJ" => "CCONJ",
        "DET" => "DET",
        "INTJ" => "INTJ",
        "NOUN" => "NOUN",
        "NUM" => "NUM",
        "PART" => "PART",
        "PRON" => "PRON",
        "PROPN" => "PROPN",
        "PUNCT" => "PUNCT",
        "SCONJ" => "SCONJ",
        "SYM" => "SYM",
        "VERB" => "VERB",
        "X" => "X",
        "Case" => "Case",
        "Gender" => "Gender",
        "Number" => "Number",
        "Person" => "Person",
        "Nom" => "Nom",
        "Acc" => "Acc",
        "Dat" => "Dat",
        "Gen" => "Gen",
        "Loc" => "Loc",
        "Ins" => "Ins",
        "Masc" => "Masc",
        "Fem" => "Fem",
        "Neut" => "Neut",
        "Sing" => "Sing",
        "Plur" => "Plur",
        "1" => "1",
        "2" => "2",
        "3" => "3",
        _ => return None,
    })
}

pub fn tag(s: &str) -> Tag {
    match shared_tag(s) {
        Some(t) => Cow::Borrowed(t),
        None => Cow::Owned(s.to_owned()),
    }
}

fn tag_from_string(s: String) -> Tag {
    match shared_tag(&s) {
        Some(t) => Cow::Borrowed(t),
        None => Cow::Owned(s),
    }
}

struct TagVisitor;

impl<'de> Visitor<'de> for TagVisitor {
    type Value = Tag;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a string")
    }

    fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Tag, E> {
        Ok(tag(v))
    }

    fn visit_string<E: serde::de::Error>(self, v: String) -> Result<Tag, E> {
        Ok(tag_from_string(v))
    }
}

struct TagSeed;

impl<'de> serde::de::DeserializeSeed<'de> for TagSeed {
    type Value = Tag;

    fn deserialize<D: Deserializer<'de>>(self, deserializer: D) -> Result<Tag, D::Error> {
        deserializer.deserialize_str(TagVisitor)
    }
}

fn deserialize_tag<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Tag, D::Error> {
    deserializer.deserialize_str(TagVisitor)
}

impl MorphFeatures {
    pub fn new() -> Self {
        Self::default()
    }

    fn position(&self, name: &str) -> Result<usize, usize> {
        self.0.binary_search_by(|(n, _)| n.as_ref().cmp(name))
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.position(name).ok().map(|i| self.0[i].1.as_ref())
    }

    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) -> Option<String> {
        let name = name.into();
        let value = tag_from_string(value.into());
        match self.position(&name) {
            Ok(i) => Some(std::mem::replace(&mut self.0[i].1, value).into_owned()),
            Err(i) => {
                self.0.insert(i, (tag_from_string(name), value));
                None
            }
        }
    }

    pub fn remove(&mut self, name: &str) -> Option<String> {
        self.position(name).ok().map(|i| self.0.remove(i).1.into_owned())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_ref(), v.as_ref()))
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.position(name).is_ok()
    }

    /// Checks name and value constraints, returning a message for the first violation.
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in self.iter() {
            if name.is_empty() {
                return Err("feature name is empty".into());
            }
            if let Some((_, allowed)) = RECOGNIZED_FEATURES.iter().find(|(n, _)| *n == name)
                && !allowed.contains(&value)
            {
                return Err(format!(
                    "value {value:?} is not valid for feature {name} (expected one of {})",
                    allowed.join("|")
                ));
            }
        }
        Ok(())
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for MorphFeatures {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut out = MorphFeatures::new();
        for (k, v) in iter {
            out.insert(k, v);
        }
        out
    }
}

impl Serialize for MorphFeatures {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.iter())
    }
}

impl<'de> Deserialize<'de> for MorphFeatures {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct FeatsVisitor;

        impl<'de> Visitor<'de> for FeatsVisitor {
            type Value = MorphFeatures;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping feature names to string values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut entries: Vec<(Tag, Tag)> = Vec::with_capacity(map.size_hint().unwrap_or(0));
                while let Some(name) = map.next_key_seed(TagSeed)? {
                    let value = map.next_value_seed(TagSeed)?;
                    entries.push((name, value));
                }
                entries.sort_by(|a, b| a.0.cmp(&b.0));
                if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
                    return Err(serde::de::Error::custom(format!("duplicate feature name {:?}", w[0].0)));
                }
                Ok(MorphFeatures(entries))
            }
        }

        deserializer.deserialize_map(FeatsVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Token {
    /// Position in the sentence; not part of the wire format.
    #[serde(skip)]
    pub index: usize,
    pub form: String,
    pub lemma: String,
    #[serde(deserialize_with = "deserialize_tag")]
    pub upos: Tag,
    #[serde(default)]
    pub feats: MorphFeatures,
    /// Index of the dependency head in the same sentence. A token headed by
    /// itself is the sentence root.
    #[serde(default)]
    pub head: Option<usize>,
}

impl Token {
    pub fn is_verbal(&self) -> bool {
        self.upos == "VERB" || self.upos == "AUX"
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }
}

/// A token span `[start, end)` within one source sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mention {
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
}

impl Mention {
    pub fn covers(&self, pos: Position) -> bool {
        self.sentence_index == pos.sentence && self.start <= pos.token && pos.token < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorefChain {
    pub chain_id: i64,
    pub mentions: Vec<Mention>,
}

/// A (sentence, token) coordinate on one side of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub sentence: usize,
    pub token: usize,
}

impl Position {
    pub const fn new(sentence: usize, token: usize) -> Self {
        Position { sentence, token }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.sentence, self.token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

/// One word-alignment link. Both endpoints live in the same sentence pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlignmentLink {
    pub sentence_index: usize,
    pub source_token: usize,
    pub target_token: usize,
}

impl AlignmentLink {
    pub fn source(&self) -> Position {
        Position::new(self.sentence_index, self.source_token)
    }

    pub fn target(&self) -> Position {
        Position::new(self.sentence_index, self.target_token)
    }
}

/// A validated, immutable annotated document pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedDocumentPair {
    pub doc_id: String,
    pub year: Option<i64>,
    pub source_lang: String,
    pub target_lang: String,
    pub source: Vec<Sentence>,
    pub target: Vec<Sentence>,
    pub source_coref: Vec<CorefChain>,
    pub alignments: Vec<AlignmentLink>,
    // Distinct links as (sentence, source, target) and (sentence, target, source), sorted.
    by_source: Vec<(usize, usize, usize)>,
    by_target: Vec<(usize, usize, usize)>,
}

/// Other-side indices linked to `pos` in a table sorted by (sentence, this side, other side).
fn linked(table: &[(usize, usize, usize)], pos: Position) -> impl Iterator<Item = usize> + '_ {
    let key = (pos.sentence, pos.token);
    let start = table.partition_point(|&(s, t, _)| (s, t) < key);
    table[start..].iter().take_while(move |&&(s, t, _)| (s, t) == key).map(|&(_, _, o)| o)
}

impl AnnotatedDocumentPair {
    pub fn sentences(&self, side: Side) -> &[Sentence] {
        match side {
            Side::Source => &self.source,
            Side::Target => &self.target,
        }
    }

    /// Number of sentence pairs.
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn token_at(&self, side: Side, pos: Position) -> Result<&Token, AnnotationError> {
        self.sentences(side).get(pos.sentence).and_then(|s| s.tokens.get(pos.token)).ok_or_else(|| {
            AnnotationError::range(Some(&self.doc_id), format!("{side} {pos}"), "no token at this position")
        })
    }

    /// Target positions aligned to a source position, ordered by target token index.
    pub fn aligned_targets(&self, pos: Position) -> Result<Vec<Position>, AnnotationError> {
        self.token_at(Side::Source, pos)?;
        Ok(linked(&self.by_source, pos).map(|t| Position::new(pos.sentence, t)).collect())
    }

    /// Source positions aligned to a target position, ordered by source token index.
    pub fn aligned_sources(&self, pos: Position) -> Result<Vec<Position>, AnnotationError> {
        self.token_at(Side::Target, pos)?;
        Ok(linked(&self.by_target, pos).map(|s| Position::new(pos.sentence, s)).collect())
    }

    /// Lowest-index aligned token on the other side, if any. Out-of-range
    /// positions yield `None`.
    pub fn first_aligned(&self, side: Side, pos: Position) -> Option<Position> {
        let table = match side {
            Side::Source => &self.by_source,
            Side::Target => &self.by_target,
        };
        linked(table, pos).next().map(|t| Position::new(pos.sentence, t))
    }

    /// Distinct alignment links in (sentence, source, target) order.
    pub fn links(&self) -> impl Iterator<Item = AlignmentLink> + '_ {
        self.by_source.iter().map(|&(s, src, tgt)| AlignmentLink {
            sentence_index: s,
            source_token: src,
            target_token: tgt,
        })
    }

    /// Serializes to one canonical JSONL record (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&DocumentRecord::from(self)).expect("document serializes")
    }
}

/// Parses and validates one JSONL record.
pub fn parse_document(line: &str) -> Result<AnnotatedDocumentPair, AnnotationError> {
    // The plain deserializer is several times faster; the path-tracking one
    // only runs again to describe a failure.
    let record: DocumentRecord = match serde_json::from_str(line) {
        Ok(record) => record,
        Err(_) => return Err(schema_error(line)),
    };
    record.into_document()
}

fn schema_error(line: &str) -> AnnotationError {
    let doc_id = sniff_doc_id(line);
    let mut de = serde_json::Deserializer::from_str(line);
    let err = match serde_path_to_error::deserialize::<_, DocumentRecord>(&mut de) {
        Ok(_) => match de.end() {
            Ok(()) => return AnnotationError::schema(doc_id.as_deref(), ".", "invalid record"),
            Err(e) => return AnnotationError::schema(doc_id.as_deref(), ".", e.to_string()),
        },
        Err(err) => err,
    };
    let path = err.path().to_string();
    AnnotationError::schema(doc_id.as_deref(), path, err.into_inner().to_string())
}

fn sniff_doc_id(line: &str) -> Option<String> {
    #[derive(Deserialize)]
    struct IdOnly {
        doc_id: String,
    }
    serde_json::from_str::<IdOnly>(line).ok().map(|r| r.doc_id)
}

// Wire format.

// Unknown top-level fields (tool provenance and the like) are ignored.
#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    #[serde(default)]
    year: Option<i64>,
    source_lang: String,
    target_lang: String,
    source: Vec<SentenceRecord>,
    target: Vec<SentenceRecord>,
    #[serde(default)]
    source_coref: Vec<ChainRecord>,
    #[serde(default)]
    alignments: Vec<LinkRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SentenceRecord {
    tokens: Vec<Token>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainRecord {
    chain_id: i64,
    mentions: Vec<MentionRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MentionRecord {
    sent: usize,
    start: usize,
    end: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRecord {
    sent: usize,
    src: usize,
    tgt: usize,
}

impl DocumentRecord {
    fn into_document(self) -> Result<AnnotatedDocumentPair, AnnotationError> {
        let id = self.doc_id.as_str();
        if id.is_empty() {
            return Err(AnnotationError::schema(None, "doc_id", "doc_id must be nonempty"));
        }
        for (field, value) in [("source_lang", &self.source_lang), ("target_lang", &self.target_lang)] {
            if value.is_empty() {
                return Err(AnnotationError::schema(Some(id), field, "language code must be nonempty"));
            }
        }
        if self.source.len() != self.target.len() {
            return Err(AnnotationError::schema(
                Some(id),
                "target",
                format!("sentence counts differ: {} source vs {} target", self.source.len(), self.target.len()),
            ));
        }

        let source = convert_side(id, "source", self.source)?;
        let target = convert_side(id, "target", self.target)?;

        let mut chains = Vec::with_capacity(self.source_coref.len());
        for (ci, chain) in self.source_coref.into_iter().enumerate() {
            let path = format!("source_coref[{ci}]");
            if chain.mentions.len() < 2 {
                return Err(AnnotationError::schema(
                    Some(id),
                    format!("{path}.mentions"),
                    format!("chain {} has {} mention(s); at least 2 required", chain.chain_id, chain.mentions.len()),
                ));
            }
            let mut mentions = Vec::with_capacity(chain.mentions.len());
            for (mi, m) in chain.mentions.into_iter().enumerate() {
                let mpath = || format!("{path}.mentions[{mi}]");
                let sentence = source.get(m.sent).ok_or_else(|| {
                    AnnotationError::range(Some(id), mpath(), format!("sentence {} out of range", m.sent))
                })?;
                if m.start >= m.end || m.end > sentence.len() {
                    return Err(AnnotationError::range(
                        Some(id),
                        mpath(),
                        format!("span [{}, {}) invalid for sentence of {} tokens", m.start, m.end, sentence.len()),
                    ));
                }
                let mention = Mention { sentence_index: m.sent, start: m.start, end: m.end };
                if let Some(prev) = mentions.last() {
                    let prev: &Mention = prev;
                    if (prev.sentence_index, prev.start) >= (mention.sentence_index, mention.start) {
                        return Err(AnnotationError::schema(
                            Some(id),
                            mpath(),
                            "mentions must be strictly ordered by (sent, start)",
                        ));
                    }
                }
                mentions.push(mention);
            }
            chains.push(CorefChain { chain_id: chain.chain_id, mentions });
        }

        let mut alignments = Vec::with_capacity(self.alignments.len());
        for (li, link) in self.alignments.into_iter().enumerate() {
            let path = || format!("alignments[{li}]");
            let (Some(src_sent), Some(tgt_sent)) = (source.get(link.sent), target.get(link.sent)) else {
                return Err(AnnotationError::range(Some(id), path(), format!("sentence {} out of range", link.sent)));
            };
            if link.src >= src_sent.len() {
                return Err(AnnotationError::range(
                    Some(id),
                    path(),
                    format!("source token {} out of range for sentence of {} tokens", link.src, src_sent.len()),
                ));
            }
            if link.tgt >= tgt_sent.len() {
                return Err(AnnotationError::range(
                    Some(id),
                    path(),
                    format!("target token {} out of range for sentence of {} tokens", link.tgt, tgt_sent.len()),
                ));
            }
            alignments.push(AlignmentLink {
                sentence_index: link.sent,
                source_token: link.src,
                target_token: link.tgt,
            });
        }
        let mut by_source: Vec<_> =
            alignments.iter().map(|l| (l.sentence_index, l.source_token, l.target_token)).collect();
        by_source.sort_unstable();
        by_source.dedup();
        let mut by_target: Vec<_> = by_source.iter().map(|&(s, a, b)| (s, b, a)).collect();
        by_target.sort_unstable();

        Ok(AnnotatedDocumentPair {
            doc_id: self.doc_id,
            year: self.year,
            source_lang: self.source_lang,
            target_lang: self.target_lang,
            source,
            target,
            source_coref: chains,
            alignments,
            by_source,
            by_target,
        })
    }
}

fn convert_side(doc_id: &str, side: &str, sentences: Vec<SentenceRecord>) -> Result<Vec<Sentence>, AnnotationError> {
    sentences
        .into_iter()
        .enumerate()
        .map(|(si, sentence)| {
            let mut tokens = sentence.tokens;
            let len = tokens.len();
            for (ti, t) in tokens.iter_mut().enumerate() {
                let path = || format!("{side}[{si}].tokens[{ti}]");
                if t.form.is_empty() {
                    return Err(AnnotationError::schema(
                        Some(doc_id),
                        format!("{}.form", path()),
                        "form must be nonempty",
                    ));
                }
                t.feats
                    .validate()
                    .map_err(|msg| AnnotationError::schema(Some(doc_id), format!("{}.feats", path()), msg))?;
                if let Some(head) = t.head
                    && head >= len
                {
                    return Err(AnnotationError::range(
                        Some(doc_id),
                        format!("{}.head", path()),
                        format!("head {head} out of range for sentence of {len} tokens"),
                    ));
                }
                t.index = ti;
            }
            Ok(Sentence { index: si, tokens })
        })
        .collect()
}

impl From<&AnnotatedDocumentPair> for DocumentRecord {
    fn from(doc: &AnnotatedDocumentPair) -> Self {
        let side =
            |sentences: &[Sentence]| sentences.iter().map(|s| SentenceRecord { tokens: s.tokens.clone() }).collect();
        DocumentRecord {
            doc_id: doc.doc_id.clone(),
            year: doc.year,
            source_lang: doc.source_lang.clone(),
            target_lang: doc.target_lang.clone(),
            source: side(&doc.source),
            target: side(&doc.target),
            source_coref: doc
                .source_coref
                .iter()
                .map(|c| ChainRecord {
                    chain_id: c.chain_id,
                    mentions: c
                        .mentions
                        .iter()
                        .map(|m| MentionRecord { sent: m.sentence_index, start: m.start, end: m.end })
                        .collect(),
                })
                .collect(),
            alignments: doc
                .alignments
                .iter()
                .map(|l| LinkRecord { sent: l.sentence_index, src: l.source_token, tgt: l.target_token })
                .collect(),
        }
    }
}

impl Serialize for AnnotatedDocumentPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DocumentRecord::from(self).serialize(serializer)
    }
}
