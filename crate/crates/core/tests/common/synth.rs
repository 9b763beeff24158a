//! Random annotated documents and rule packs, kept in plain data types so the
//! reference enumerator never touches the library's parsed representation.

use std::collections::BTreeMap;

use rand::Rng;
use rand::seq::IndexedRandom;
use serde_json::{Value, json};

pub const SRC_FORMS: &[&str] = &["it", "It", "you", "rose", "pain", "do", "the", "book", "she", "them"];
pub const TGT_FORMS: &[&str] = &["sie", "Sie", "er", "es", "du", "rose", "dor", "sais", "le", "la", "nôtre", "livre"];
pub const LEMMAS: &[&str] = &["be", "do", "savoir", "faire", "rose", "it"];
pub const UPOS: &[&str] = &["PRON", "NOUN", "VERB", "AUX", "DET", "PROPN"];
pub const FEATS: &[(&str, &[&str])] =
    &[("Case", &["Nom", "Acc", "Dat"]), ("Gender", &["Masc", "Fem"]), ("Number", &["Sing", "Plur"])];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tok {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub feats: BTreeMap<String, String>,
    pub head: Option<usize>,
}

impl Tok {
    pub fn new(form: &str, lemma: &str, upos: &str) -> Self {
        Tok { form: form.into(), lemma: lemma.into(), upos: upos.into(), feats: BTreeMap::new(), head: None }
    }

    pub fn feat(mut self, name: &str, value: &str) -> Self {
        self.feats.insert(name.into(), value.into());
        self
    }

    pub fn verbal(&self) -> bool {
        self.upos == "VERB" || self.upos == "AUX"
    }

    fn to_json(&self) -> Value {
        json!({"form": self.form, "lemma": self.lemma, "upos": self.upos, "feats": self.feats, "head": self.head})
    }
}

/// Mention `(sentence, start, end)`, end exclusive.
pub type Span = (usize, usize, usize);

#[derive(Debug, Clone, Default)]
pub struct Doc {
    pub id: String,
    pub year: Option<i64>,
    pub src_lang: String,
    pub tgt_lang: String,
    pub src: Vec<Vec<Tok>>,
    pub tgt: Vec<Vec<Tok>>,
    pub chains: Vec<Vec<Span>>,
    /// `(sentence, source token, target token)`.
    pub links: Vec<(usize, usize, usize)>,
}

impl Doc {
    pub fn to_json(&self) -> String {
        let side = |s: &[Vec<Tok>]| -> Vec<Value> {
            s.iter().map(|toks| json!({"tokens": toks.iter().map(Tok::to_json).collect::<Vec<_>>()})).collect()
        };
        json!({
            "doc_id": self.id,
            "year": self.year,
            "source_lang": self.src_lang,
            "target_lang": self.tgt_lang,
            "source": side(&self.src),
            "target": side(&self.tgt),
            "source_coref": self.chains.iter().enumerate().map(|(i, c)| json!({
                "chain_id": i,
                "mentions": c.iter().map(|&(s, a, b)| json!({"sent": s, "start": a, "end": b})).collect::<Vec<_>>()
            })).collect::<Vec<_>>(),
            "alignments": self.links.iter().map(|&(s, a, b)| json!({"sent": s, "src": a, "tgt": b})).collect::<Vec<_>>(),
        })
        .to_string()
    }
}

fn random_tok<R: Rng>(rng: &mut R, forms: &[&str], len: usize, verbless: bool) -> Tok {
    let upos = loop {
        let u = *UPOS.choose(rng).unwrap();
        if !(verbless && (u == "VERB" || u == "AUX")) {
            break u;
        }
    };
    let mut t = Tok::new(forms.choose(rng).unwrap(), LEMMAS.choose(rng).unwrap(), upos);
    for (name, values) in FEATS {
        if rng.random_bool(0.5) {
            t.feats.insert((*name).into(), (*values.choose(rng).unwrap()).into());
        }
    }
    t.head = Some(rng.random_range(0..len));
    t
}

fn random_sentence<R: Rng>(rng: &mut R, forms: &[&str], max_tokens: usize, verbless: bool) -> Vec<Tok> {
    let len = rng.random_range(1..=max_tokens);
    let mut toks: Vec<Tok> = (0..len).map(|_| random_tok(rng, forms, len, verbless)).collect();
    // Some sentences carry no dependency annotation at all.
    if rng.random_bool(0.3) {
        for t in &mut toks {
            t.head = None;
        }
    }
    toks
}

/// A random document with up to `max_sentences` sentence pairs of up to
/// `max_tokens` tokens per side, random coreference chains and alignments.
pub fn random_doc<R: Rng>(rng: &mut R, id: &str, max_sentences: usize, max_tokens: usize) -> Doc {
    let n = rng.random_range(1..=max_sentences);
    let src: Vec<Vec<Tok>> = (0..n).map(|_| random_sentence(rng, SRC_FORMS, max_tokens, false)).collect();
    let tgt: Vec<Vec<Tok>> = (0..n)
        .map(|_| {
            let verbless = rng.random_bool(0.3);
            random_sentence(rng, TGT_FORMS, max_tokens, verbless)
        })
        .collect();

    let mut chains = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let mut mentions: Vec<Span> = (0..rng.random_range(2..=5))
            .map(|_| {
                let s = rng.random_range(0..n);
                let start = rng.random_range(0..src[s].len());
                let end = rng.random_range(start + 1..=(start + 3).min(src[s].len()));
                (s, start, end)
            })
            .collect();
        mentions.sort();
        mentions.dedup_by_key(|m| (m.0, m.1));
        if mentions.len() >= 2 {
            chains.push(mentions);
        }
    }

    let mut links = Vec::new();
    for s in 0..n {
        for _ in 0..rng.random_range(0..=src[s].len() + 2) {
            links.push((s, rng.random_range(0..src[s].len()), rng.random_range(0..tgt[s].len())));
        }
    }

    Doc {
        id: id.into(),
        year: rng.random_bool(0.8).then(|| rng.random_range(2000..2020)),
        src_lang: "en".into(),
        tgt_lang: "de".into(),
        src,
        tgt,
        chains,
        links,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Crit {
    pub form: Option<Vec<String>>,
    pub case_sensitive: bool,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub required: BTreeMap<String, String>,
    pub forbidden: BTreeMap<String, String>,
    pub forbidden_lemmas: Vec<String>,
}

impl Crit {
    pub fn is_empty(&self) -> bool {
        self.form.is_none()
            && self.lemma.is_none()
            && self.upos.is_none()
            && self.required.is_empty()
            && self.forbidden.is_empty()
            && self.forbidden_lemmas.is_empty()
    }

    fn to_json(&self) -> Value {
        if self.is_empty() {
            return json!("*");
        }
        let mut m = serde_json::Map::new();
        if let Some(f) = &self.form {
            m.insert("form".into(), json!(f));
        }
        if self.case_sensitive {
            m.insert("case_sensitive".into(), json!(true));
        }
        if let Some(l) = &self.lemma {
            m.insert("lemma".into(), json!(l));
        }
        if let Some(u) = &self.upos {
            m.insert("upos".into(), json!(u));
        }
        if !self.required.is_empty() {
            m.insert("feats".into(), json!(self.required));
        }
        if !self.forbidden.is_empty() {
            m.insert("not_feats".into(), json!(self.forbidden));
        }
        if !self.forbidden_lemmas.is_empty() {
            m.insert("forbidden_lemmas".into(), json!(self.forbidden_lemmas));
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Coref,
    None,
    Verb,
    Case,
}

#[derive(Debug, Clone)]
pub struct RRule {
    pub id: String,
    pub solver: Solver,
    pub category: &'static str,
    pub t_src: Crit,
    pub t_tgt: Crit,
    pub c_src: Option<Crit>,
    pub c_tgt: Option<Crit>,
    pub expected: Vec<String>,
    pub expected_case_sensitive: bool,
}

#[derive(Debug, Clone)]
pub struct RPack {
    pub id: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub rules: Vec<RRule>,
}

impl RPack {
    pub fn to_json(&self) -> String {
        let rules: Vec<Value> = self
            .rules
            .iter()
            .map(|r| {
                let ctx = |c: &Option<Crit>| c.as_ref().map_or(json!("-"), Crit::to_json);
                json!({
                    "rule_id": r.id,
                    "category": r.category,
                    "solver": match r.solver {
                        Solver::Coref => "coref",
                        Solver::None => "none",
                        Solver::Verb => "target_verb_ellipsis",
                        Solver::Case => "target_case_match",
                    },
                    "t_src": r.t_src.to_json(),
                    "t_tgt": r.t_tgt.to_json(),
                    "c_src": ctx(&r.c_src),
                    "c_tgt": ctx(&r.c_tgt),
                    "expected_forms": r.expected,
                    "expected_case_sensitive": r.expected_case_sensitive,
                })
            })
            .collect();
        json!({"pack_id": self.id, "source_lang": self.src_lang, "target_lang": self.tgt_lang, "rules": rules})
            .to_string()
    }
}

fn random_crit<R: Rng>(rng: &mut R, forms: &[&str], p: f64) -> Crit {
    let mut c = Crit::default();
    if rng.random_bool(p) {
        let mut words = vec![(*forms.choose(rng).unwrap()).to_owned()];
        if rng.random_bool(0.15) {
            words.insert(0, (*forms.choose(rng).unwrap()).to_owned());
        }
        c.form = Some(words);
        c.case_sensitive = rng.random_bool(0.3);
    }
    if rng.random_bool(p / 2.0) {
        c.lemma = Some((*LEMMAS.choose(rng).unwrap()).into());
    }
    if rng.random_bool(p) {
        c.upos = Some((*UPOS.choose(rng).unwrap()).into());
    }
    for (name, values) in FEATS {
        let roll: f64 = rng.random();
        if roll < p / 2.0 {
            c.required.insert((*name).into(), (*values.choose(rng).unwrap()).into());
        } else if roll < p * 0.75 {
            c.forbidden.insert((*name).into(), (*values.choose(rng).unwrap()).into());
        }
    }
    if rng.random_bool(p / 3.0) {
        c.forbidden_lemmas = LEMMAS.choose_multiple(rng, 2).map(|s| (*s).into()).collect();
    }
    c
}

/// A random pack whose rules cover every solver and category.
pub fn random_pack<R: Rng>(rng: &mut R, id: &str, n_rules: usize) -> RPack {
    let kinds = [
        (Solver::Coref, "gender"),
        (Solver::Coref, "animacy"),
        (Solver::None, "formality"),
        (Solver::Verb, "auxiliary"),
        (Solver::Case, "inflection"),
    ];
    let rules = (0..n_rules)
        .map(|i| {
            let (solver, category) = kinds[i % kinds.len()];
            let ctx = |rng: &mut R, forms: &[&str]| match rng.random_range(0..3) {
                0 => Some(Crit::default()),
                _ => Some(random_crit(rng, forms, 0.3)),
            };
            let (c_src, c_tgt) = match solver {
                Solver::None => (None, None),
                Solver::Coref => (ctx(rng, SRC_FORMS), ctx(rng, TGT_FORMS)),
                _ => {
                    let a = if rng.random_bool(0.5) { None } else { ctx(rng, SRC_FORMS) };
                    let b = if rng.random_bool(0.3) { None } else { ctx(rng, TGT_FORMS) };
                    (a, b)
                }
            };
            let expected = match rng.random_range(0..4) {
                0 => vec![],
                1 => vec!["la nôtre".to_owned()],
                _ => TGT_FORMS.choose_multiple(rng, 2).map(|s| (*s).to_owned()).collect(),
            };
            RRule {
                id: format!("R{i}.{category}"),
                solver,
                category,
                t_src: random_crit(rng, SRC_FORMS, 0.35),
                t_tgt: random_crit(rng, TGT_FORMS, 0.35),
                c_src,
                c_tgt,
                expected,
                expected_case_sensitive: rng.random_bool(0.3),
            }
        })
        .collect();
    RPack { id: id.into(), src_lang: "en".into(), tgt_lang: "de".into(), rules }
}

/// Converts a loaded rule to the plain model (used for shipped packs).
pub fn from_library(rule: &ctxmine::rules::Rule) -> RRule {
    use ctxmine::rules::SolverKind;
    let crit = |c: &ctxmine::rules::TokenCriterion| Crit {
        form: c.form.clone(),
        case_sensitive: c.case_sensitive,
        lemma: c.lemma.clone(),
        upos: c.upos.clone(),
        required: c.required_feats.iter().map(|(a, b)| (a.to_owned(), b.to_owned())).collect(),
        forbidden: c.forbidden_feats.iter().map(|(a, b)| (a.to_owned(), b.to_owned())).collect(),
        forbidden_lemmas: c.forbidden_lemmas.clone(),
    };
    RRule {
        id: rule.rule_id.clone(),
        solver: match rule.solver {
            SolverKind::Coref => Solver::Coref,
            SolverKind::None => Solver::None,
            SolverKind::TargetVerbEllipsis => Solver::Verb,
            SolverKind::TargetCaseMatch => Solver::Case,
        },
        category: match rule.category {
            ctxmine::rules::Category::Gender => "gender",
            ctxmine::rules::Category::Animacy => "animacy",
            ctxmine::rules::Category::Formality => "formality",
            ctxmine::rules::Category::Auxiliary => "auxiliary",
            ctxmine::rules::Category::Inflection => "inflection",
        },
        t_src: crit(&rule.t_src),
        t_tgt: crit(&rule.t_tgt),
        c_src: rule.c_src.as_ref().map(crit),
        c_tgt: rule.c_tgt.as_ref().map(crit),
        expected: rule.expected_forms.clone(),
        expected_case_sensitive: rule.expected_case_sensitive,
    }
}
