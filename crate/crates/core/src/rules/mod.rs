//! Declarative rule packs: one JSON file per language pair and table of criteria.
//!
//! A pack file looks like
//!
//! ```json
//! {"pack_id": "en-de.pronouns", "source_lang": "en", "target_lang": "de",
//!  "rules": [{"rule_id": "NOM.FEM.SING", "solver": "coref",
//!             "t_src": {"form": "it", "upos": "PNOUN"},
//!             "t_tgt": {"form": "sie", "upos": "PNOUN", "feats": {"Case": "Nom"}, "case_sensitive": true},
//!             "c_src": {"upos": "NOUN"},
//!             "c_tgt": {"upos": "NOUN", "feats": {"Gender": "Fem", "Number": "Sing"}}}]}
//! ```
//!
//! Criterion objects accept `form` (string, split on whitespace, or array),
//! `lemma`, `upos`, `feats`, `not_feats`, `forbidden_lemmas` and
//! `case_sensitive`. A feature value written `-Nom` is a negation and lands in
//! the forbidden set. `"*"` is the unconstrained criterion; `"-"` or `null`
//! marks an absent context criterion. The tag `PNOUN` is read as `PRON`.

mod criterion;
mod library;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::annotation::MorphFeatures;

pub use criterion::TokenCriterion;
pub(crate) use criterion::eq_fold;
pub use library::{RULES_DIR_ENV, default_rules_dir, packs_for_direction, resolve_pack};

/// Contextual relationship used to locate the disambiguating tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Antecedent via source coreference chain (gender, animacy).
    Coref,
    /// No context token (formality).
    None,
    /// Most recent same-lemma target verb (isolated auxiliaries).
    TargetVerbEllipsis,
    /// Most recent same-case target noun (verbless noun inflection).
    TargetCaseMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Gender,
    Animacy,
    Formality,
    Auxiliary,
    Inflection,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Gender, Category::Animacy, Category::Formality, Category::Auxiliary, Category::Inflection];

    pub fn name(self) -> &'static str {
        match self {
            Category::Gender => "Gender",
            Category::Animacy => "Animacy",
            Category::Formality => "Formality",
            Category::Auxiliary => "Auxiliary",
            Category::Inflection => "Inflection",
        }
    }

    /// Categories whose examples need a strict antecedent.
    pub fn needs_antecedent(self) -> bool {
        matches!(self, Category::Gender | Category::Auxiliary)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub rule_id: String,
    pub category: Category,
    pub source_lang: String,
    pub target_lang: String,
    pub t_src: TokenCriterion,
    pub t_tgt: TokenCriterion,
    pub c_src: Option<TokenCriterion>,
    pub c_tgt: Option<TokenCriterion>,
    pub solver: SolverKind,
    /// Surface forms counted correct at scoring time. Empty means the observed
    /// form of the aligned target token is expected (auxiliary and inflection
    /// rules, whose target is not fixed by the rule).
    pub expected_forms: Vec<String>,
    pub expected_case_sensitive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RulePack {
    pub pack_id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub category: Option<Category>,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("rule syntax error{}: {field}: {message}", rule_suffix(.rule_id))]
    Syntax { rule_id: Option<String>, field: String, message: String },
    #[error("duplicate rule_id {rule_id:?} in pack {pack_id:?}")]
    Duplicate { pack_id: String, rule_id: String },
    #[error("no rule pack {name:?} (looked in {})", .dir.display())]
    NotFound { name: String, dir: PathBuf },
}

fn rule_suffix(rule_id: &Option<String>) -> String {
    rule_id.as_ref().map(|id| format!(" in rule {id}")).unwrap_or_default()
}

fn syntax(rule_id: Option<&str>, field: impl Into<String>, message: impl Into<String>) -> RuleError {
    RuleError::Syntax { rule_id: rule_id.map(str::to_owned), field: field.into(), message: message.into() }
}

pub fn load_rule_pack(path: impl AsRef<Path>) -> Result<RulePack, RuleError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io { path: path.to_owned(), source })?;
    parse_rule_pack(&text)
}

pub fn parse_rule_pack(text: &str) -> Result<RulePack, RuleError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let record: PackRecord = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let field = err.path().to_string();
        syntax(None, field, err.into_inner().to_string())
    })?;
    de.end().map_err(|e| syntax(None, ".", e.to_string()))?;
    record.into_pack()
}

impl RulePack {
    pub fn rule(&self, rule_id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.rule_id == rule_id)
    }

    pub fn direction(&self) -> (&str, &str) {
        (&self.source_lang, &self.target_lang)
    }

    /// Re-serializes to the rule file format.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PackRecord::from(self)).expect("pack serializes")
    }

    /// Derives the into-English animacy pack from a gender pack: every
    /// coreference rule with source and target sides swapped, expecting the
    /// English pronoun as output.
    pub fn reversed_for_animacy(&self) -> RulePack {
        let rules = self
            .rules
            .iter()
            .filter(|r| r.solver == SolverKind::Coref)
            .map(|r| {
                let t_tgt = r.t_src.clone();
                Rule {
                    rule_id: r.rule_id.clone(),
                    category: Category::Animacy,
                    source_lang: r.target_lang.clone(),
                    target_lang: r.source_lang.clone(),
                    t_src: r.t_tgt.clone(),
                    c_src: r.c_tgt.clone(),
                    c_tgt: r.c_src.clone(),
                    solver: SolverKind::Coref,
                    expected_forms: t_tgt.form_text().into_iter().collect(),
                    expected_case_sensitive: t_tgt.case_sensitive,
                    t_tgt,
                }
            })
            .collect();
        RulePack {
            pack_id: format!("{}-{}.animacy", self.target_lang, self.source_lang),
            source_lang: self.target_lang.clone(),
            target_lang: self.source_lang.clone(),
            category: Some(Category::Animacy),
            rules,
        }
    }
}

/// A finding reported by [`validate_pack`]. None of these prevent loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    EmptyPack,
    /// Two rules with identical criteria on all four key tokens and the same solver.
    Overlap {
        first: String,
        second: String,
    },
    /// An expected form differs from the form the target criterion requires.
    ExpectedFormNotInTarget {
        rule_id: String,
        form: String,
    },
    /// A rule with a fixed target yields no expected form to score against.
    NoExpectedForms {
        rule_id: String,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyPack => write!(f, "pack contains no rules"),
            Diagnostic::Overlap { first, second } => {
                write!(f, "rules {first} and {second} have identical criteria")
            }
            Diagnostic::ExpectedFormNotInTarget { rule_id, form } => {
                write!(f, "rule {rule_id}: expected form {form:?} is not the target form")
            }
            Diagnostic::NoExpectedForms { rule_id } => {
                write!(f, "rule {rule_id}: no expected forms")
            }
        }
    }
}

pub fn validate_pack(pack: &RulePack) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if pack.rules.is_empty() {
        out.push(Diagnostic::EmptyPack);
    }
    let keys: Vec<_> = pack
        .rules
        .iter()
        .map(|r| {
            (
                r.solver,
                r.t_src.canonical(),
                r.t_tgt.canonical(),
                r.c_src.as_ref().map(TokenCriterion::canonical),
                r.c_tgt.as_ref().map(TokenCriterion::canonical),
            )
        })
        .collect();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if keys[i] == keys[j] {
                out.push(Diagnostic::Overlap {
                    first: pack.rules[i].rule_id.clone(),
                    second: pack.rules[j].rule_id.clone(),
                });
            }
        }
    }
    for rule in &pack.rules {
        let fixed_target = matches!(rule.solver, SolverKind::Coref | SolverKind::None);
        if rule.expected_forms.is_empty() && fixed_target {
            out.push(Diagnostic::NoExpectedForms { rule_id: rule.rule_id.clone() });
        }
        if let Some(target) = rule.t_tgt.form_text() {
            for form in &rule.expected_forms {
                let same = if rule.expected_case_sensitive && rule.t_tgt.case_sensitive {
                    *form == target
                } else {
                    eq_fold(form, &target)
                };
                if !same {
                    out.push(Diagnostic::ExpectedFormNotInTarget { rule_id: rule.rule_id.clone(), form: form.clone() });
                }
            }
        }
    }
    out
}

// Wire format.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackRecord {
    pack_id: String,
    source_lang: String,
    target_lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<Category>,
    rules: Vec<RuleRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleRecord {
    rule_id: String,
    solver: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<Category>,
    t_src: CriterionRecord,
    t_tgt: CriterionRecord,
    #[serde(default, skip_serializing_if = "CriterionRecord::is_absent")]
    c_src: CriterionRecord,
    #[serde(default, skip_serializing_if = "CriterionRecord::is_absent")]
    c_tgt: CriterionRecord,
    #[serde(default)]
    expected_forms: Vec<String>,
    #[serde(default)]
    expected_case_sensitive: Option<bool>,
}

#[derive(Debug, Default)]
enum CriterionRecord {
    #[default]
    Absent,
    Wildcard,
    Fields(CriterionFields),
}

impl CriterionRecord {
    fn is_absent(&self) -> bool {
        matches!(self, CriterionRecord::Absent)
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriterionFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    form: Option<FormRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upos: Option<String>,
    #[serde(default, skip_serializing_if = "MorphFeatures::is_empty")]
    feats: MorphFeatures,
    #[serde(default, skip_serializing_if = "MorphFeatures::is_empty")]
    not_feats: MorphFeatures,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forbidden_lemmas: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    case_sensitive: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum FormRecord {
    Text(String),
    Words(Vec<String>),
}

impl<'de> Deserialize<'de> for CriterionRecord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CriterionVisitor;

        impl<'de> Visitor<'de> for CriterionVisitor {
            type Value = CriterionRecord;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str(r#"a criterion object, "*" or "-""#)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "*" => Ok(CriterionRecord::Wildcard),
                    "-" => Ok(CriterionRecord::Absent),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }

            fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(CriterionRecord::Absent)
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Self::Value, A::Error> {
                CriterionFields::deserialize(de::value::MapAccessDeserializer::new(map)).map(CriterionRecord::Fields)
            }
        }

        deserializer.deserialize_any(CriterionVisitor)
    }
}

impl Serialize for CriterionRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CriterionRecord::Absent => serializer.serialize_none(),
            CriterionRecord::Wildcard => serializer.serialize_str("*"),
            CriterionRecord::Fields(f) => f.serialize(serializer),
        }
    }
}

fn normalize_upos(tag: &str) -> String {
    let upper = tag.trim().to_uppercase();
    if upper == "PNOUN" { "PRON".to_owned() } else { upper }
}

impl CriterionRecord {
    fn into_criterion(self, rule_id: &str, field: &str) -> Result<Option<TokenCriterion>, RuleError> {
        let fields = match self {
            CriterionRecord::Absent => return Ok(None),
            CriterionRecord::Wildcard => return Ok(Some(TokenCriterion::any())),
            CriterionRecord::Fields(f) => f,
        };
        let err = |sub: &str, msg: String| syntax(Some(rule_id), format!("{field}.{sub}"), msg);

        let form = match fields.form {
            None => None,
            Some(FormRecord::Text(t)) => Some(t.split_whitespace().map(str::to_owned).collect::<Vec<_>>()),
            Some(FormRecord::Words(w)) => Some(w),
        };
        if let Some(words) = &form
            && (words.is_empty() || words.iter().any(|w| w.trim().is_empty() || w.chars().any(char::is_whitespace)))
        {
            return Err(err("form", "form must contain nonempty words".into()));
        }

        let mut required = MorphFeatures::new();
        let mut forbidden = fields.not_feats;
        for (name, value) in fields.feats.iter() {
            match value.strip_prefix('-') {
                Some(negated) if !negated.is_empty() => {
                    forbidden.insert(name, negated.trim_end_matches('.'));
                }
                _ => {
                    required.insert(name, value);
                }
            }
        }
        required.validate().map_err(|m| err("feats", m))?;
        forbidden.validate().map_err(|m| err("not_feats", m))?;
        if let Some((name, _)) = required.iter().find(|(n, _)| forbidden.contains_name(n)) {
            return Err(err("feats", format!("feature {name} is both required and forbidden")));
        }
        if fields.forbidden_lemmas.iter().any(|l| l.trim().is_empty()) {
            return Err(err("forbidden_lemmas", "empty lemma".into()));
        }
        if fields.lemma.as_deref().is_some_and(|l| l.trim().is_empty()) {
            return Err(err("lemma", "empty lemma".into()));
        }
        if fields.upos.as_deref().is_some_and(|u| u.trim().is_empty()) {
            return Err(err("upos", "empty tag".into()));
        }

        let criterion = TokenCriterion {
            form,
            case_sensitive: fields.case_sensitive,
            lemma: fields.lemma,
            upos: fields.upos.as_deref().map(normalize_upos),
            required_feats: required,
            forbidden_feats: forbidden,
            forbidden_lemmas: fields.forbidden_lemmas,
        };
        if criterion.is_unconstrained() {
            return Err(syntax(
                Some(rule_id),
                field,
                r#"criterion has no constraints; write "*" for an unconstrained token"#,
            ));
        }
        Ok(Some(criterion))
    }

    fn from_criterion(c: Option<&TokenCriterion>) -> Self {
        match c {
            None => CriterionRecord::Absent,
            Some(c) if c.is_unconstrained() => CriterionRecord::Wildcard,
            Some(c) => CriterionRecord::Fields(CriterionFields {
                form: c.form_text().map(FormRecord::Text),
                lemma: c.lemma.clone(),
                upos: c.upos.clone(),
                feats: c.required_feats.clone(),
                not_feats: c.forbidden_feats.clone(),
                forbidden_lemmas: c.forbidden_lemmas.clone(),
                case_sensitive: c.case_sensitive,
            }),
        }
    }
}

fn default_category(solver: SolverKind, pack: Option<Category>) -> Category {
    match solver {
        SolverKind::Coref if pack == Some(Category::Animacy) => Category::Animacy,
        SolverKind::Coref => Category::Gender,
        SolverKind::None => Category::Formality,
        SolverKind::TargetVerbEllipsis => Category::Auxiliary,
        SolverKind::TargetCaseMatch => Category::Inflection,
    }
}

impl PackRecord {
    fn into_pack(self) -> Result<RulePack, RuleError> {
        if self.pack_id.trim().is_empty() {
            return Err(syntax(None, "pack_id", "pack_id must be nonempty"));
        }
        if self.source_lang.is_empty() || self.target_lang.is_empty() {
            return Err(syntax(None, "source_lang", "language codes must be nonempty"));
        }
        let mut seen = HashSet::new();
        let mut rules = Vec::with_capacity(self.rules.len());
        for record in self.rules {
            let id = record.rule_id.clone();
            if id.trim().is_empty() {
                return Err(syntax(None, "rules.rule_id", "rule_id must be nonempty"));
            }
            if !seen.insert(id.clone()) {
                return Err(RuleError::Duplicate { pack_id: self.pack_id, rule_id: id });
            }
            let t_src = record
                .t_src
                .into_criterion(&id, "t_src")?
                .ok_or_else(|| syntax(Some(&id), "t_src", "t_src is required"))?;
            let t_tgt = record
                .t_tgt
                .into_criterion(&id, "t_tgt")?
                .ok_or_else(|| syntax(Some(&id), "t_tgt", "t_tgt is required"))?;
            let c_src = record.c_src.into_criterion(&id, "c_src")?;
            let c_tgt = record.c_tgt.into_criterion(&id, "c_tgt")?;
            match record.solver {
                SolverKind::None if c_src.is_some() || c_tgt.is_some() => {
                    return Err(syntax(Some(&id), "solver", "solver none takes no context criteria"));
                }
                SolverKind::Coref if c_src.is_none() || c_tgt.is_none() => {
                    return Err(syntax(Some(&id), "solver", "solver coref requires c_src and c_tgt"));
                }
                _ => {}
            }
            if record.expected_forms.iter().any(|f| f.trim().is_empty()) {
                return Err(syntax(Some(&id), "expected_forms", "empty expected form"));
            }
            let expected_forms = if record.expected_forms.is_empty() {
                t_tgt.form_text().into_iter().collect()
            } else {
                record.expected_forms
            };
            rules.push(Rule {
                category: record.category.unwrap_or_else(|| default_category(record.solver, self.category)),
                source_lang: self.source_lang.clone(),
                target_lang: self.target_lang.clone(),
                expected_case_sensitive: record.expected_case_sensitive.unwrap_or(t_tgt.case_sensitive),
                rule_id: id,
                t_src,
                t_tgt,
                c_src,
                c_tgt,
                solver: record.solver,
                expected_forms,
            });
        }
        Ok(RulePack {
            pack_id: self.pack_id,
            source_lang: self.source_lang,
            target_lang: self.target_lang,
            category: self.category,
            rules,
        })
    }
}

impl From<&RulePack> for PackRecord {
    fn from(pack: &RulePack) -> Self {
        PackRecord {
            pack_id: pack.pack_id.clone(),
            source_lang: pack.source_lang.clone(),
            target_lang: pack.target_lang.clone(),
            category: pack.category,
            rules: pack
                .rules
                .iter()
                .map(|r| RuleRecord {
                    rule_id: r.rule_id.clone(),
                    solver: r.solver,
                    category: (r.category != default_category(r.solver, pack.category)).then_some(r.category),
                    t_src: CriterionRecord::from_criterion(Some(&r.t_src)),
                    t_tgt: CriterionRecord::from_criterion(Some(&r.t_tgt)),
                    c_src: CriterionRecord::from_criterion(r.c_src.as_ref()),
                    c_tgt: CriterionRecord::from_criterion(r.c_tgt.as_ref()),
                    expected_forms: r.expected_forms.clone(),
                    expected_case_sensitive: Some(r.expected_case_sensitive),
                })
                .collect(),
        }
    }
}
