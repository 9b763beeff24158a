use crate::annotation::{MorphFeatures, Token};

/// Constraints on one of the four key tokens.
///
/// A criterion with no constraints at all is the wildcard and matches any token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenCriterion {
    /// Surface form as a token sequence; multi-word forms ("la nôtre") anchor on
    /// their final token.
    pub form: Option<Vec<String>>,
    pub case_sensitive: bool,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub required_feats: MorphFeatures,
    pub forbidden_feats: MorphFeatures,
    pub forbidden_lemmas: Vec<String>,
}

pub(crate) fn eq_fold(a: &str, b: &str) -> bool {
    if a.is_ascii() && b.is_ascii() {
        return a.eq_ignore_ascii_case(b);
    }
    a == b || a.chars().flat_map(char::to_lowercase).eq(b.chars().flat_map(char::to_lowercase))
}

impl TokenCriterion {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.form.is_none()
            && self.lemma.is_none()
            && self.upos.is_none()
            && self.required_feats.is_empty()
            && self.forbidden_feats.is_empty()
            && self.forbidden_lemmas.is_empty()
    }

    /// Form as written in rule files, words joined by a space.
    pub fn form_text(&self) -> Option<String> {
        self.form.as_ref().map(|words| words.join(" "))
    }

    /// Number of tokens the form spans (1 when no form is set).
    pub fn span_len(&self) -> usize {
        self.form.as_ref().map_or(1, Vec::len).max(1)
    }

    fn form_eq(&self, expected: &str, actual: &str) -> bool {
        if self.case_sensitive { expected == actual } else { eq_fold(expected, actual) }
    }

    /// Checks every constraint except the surface form against a single token.
    fn matches_token_features(&self, token: &Token) -> bool {
        if let Some(upos) = &self.upos
            && *upos != token.upos
        {
            return false;
        }
        if let Some(lemma) = &self.lemma
            && !eq_fold(lemma, &token.lemma)
        {
            return false;
        }
        if self.forbidden_lemmas.iter().any(|l| eq_fold(l, &token.lemma)) {
            return false;
        }
        self.required_feats.iter().all(|(name, value)| token.feats.get(name) == Some(value))
            && self.forbidden_feats.iter().all(|(name, value)| token.feats.get(name) != Some(value))
    }

    /// Matches a lone token. A multi-word form cannot be confirmed without
    /// the surrounding sentence and therefore never matches here; use
    /// [`TokenCriterion::matches_at`] for those.
    pub fn matches(&self, token: &Token) -> bool {
        match &self.form {
            Some(words) if words.len() != 1 => false,
            Some(words) => self.form_eq(&words[0], &token.form) && self.matches_token_features(token),
            None => self.matches_token_features(token),
        }
    }

    /// Matches the token at `index` of `tokens`. Multi-word forms must occupy
    /// the contiguous tokens ending at `index`; the remaining constraints apply
    /// to that final token.
    pub fn matches_at(&self, tokens: &[Token], index: usize) -> bool {
        let Some(token) = tokens.get(index) else { return false };
        if let Some(words) = &self.form {
            if words.len() > index + 1 {
                return false;
            }
            let start = index + 1 - words.len();
            let ok = words.iter().zip(&tokens[start..=index]).all(|(w, t)| self.form_eq(w, &t.form));
            if !ok {
                return false;
            }
        }
        self.matches_token_features(token)
    }

    /// Form of a criterion normalized for equality comparisons between rules.
    pub(crate) fn canonical(&self) -> TokenCriterion {
        let mut c = self.clone();
        if !c.case_sensitive
            && let Some(words) = c.form.as_mut()
        {
            for w in words {
                *w = w.to_lowercase();
            }
        }
        if c.form.is_none() {
            c.case_sensitive = false;
        }
        let mut lemmas: Vec<String> = c.forbidden_lemmas.iter().map(|l| l.to_lowercase()).collect();
        lemmas.sort();
        lemmas.dedup();
        c.forbidden_lemmas = lemmas;
        c.lemma = c.lemma.map(|l| l.to_lowercase());
        c
    }
}
