//! Exhaustive reference enumerator for extraction.
//!
//! Written directly against the plain data model in `synth`: every candidate
//! (link, rule) pair is checked, and every solver scans all candidate tokens
//! and picks the best one by an explicit ordering key.

use std::collections::BTreeSet;

use super::synth::{Crit, Doc, RPack, RRule, Solver, Tok};

/// Comparable projection of one extracted example.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Found {
    pub example_id: String,
    pub t_src_form: String,
    pub t_tgt_form: String,
    pub c_src: Option<(usize, usize)>,
    pub c_tgt: Option<(usize, usize)>,
    pub distance: Option<usize>,
    pub expected: Vec<String>,
}

impl Found {
    pub fn of(ex: &ctxmine::extract::ExtractedExample) -> Found {
        let pos = |k: &Option<ctxmine::extract::KeyToken>| k.as_ref().map(|k| (k.at.sentence_index, k.at.token_index));
        Found {
            example_id: ex.example_id.clone(),
            t_src_form: ex.t_src.form.clone(),
            t_tgt_form: ex.t_tgt.form.clone(),
            c_src: pos(&ex.c_src),
            c_tgt: pos(&ex.c_tgt),
            distance: ex.antecedent_distance,
            expected: ex.expected_forms.clone(),
        }
    }
}

fn same(a: &str, b: &str, case_sensitive: bool) -> bool {
    if case_sensitive { a == b } else { a.to_lowercase() == b.to_lowercase() }
}

fn crit_ok(c: &Crit, sent: &[Tok], i: usize) -> bool {
    let t = &sent[i];
    if let Some(words) = &c.form {
        if words.len() > i + 1 {
            return false;
        }
        let start = i + 1 - words.len();
        for (k, w) in words.iter().enumerate() {
            if !same(w, &sent[start + k].form, c.case_sensitive) {
                return false;
            }
        }
    }
    if c.upos.as_ref().is_some_and(|u| *u != t.upos) {
        return false;
    }
    if c.lemma.as_ref().is_some_and(|l| !same(l, &t.lemma, false)) {
        return false;
    }
    if c.forbidden_lemmas.iter().any(|l| same(l, &t.lemma, false)) {
        return false;
    }
    for (name, value) in &c.required {
        if t.feats.get(name) != Some(value) {
            return false;
        }
    }
    for (name, value) in &c.forbidden {
        if t.feats.get(name) == Some(value) {
            return false;
        }
    }
    true
}

fn links(doc: &Doc) -> BTreeSet<(usize, usize, usize)> {
    doc.links.iter().copied().collect()
}

fn first_tgt(doc: &Doc, s: usize, src: usize) -> Option<usize> {
    links(doc).into_iter().filter(|l| l.0 == s && l.1 == src).map(|l| l.2).min()
}

fn first_src(doc: &Doc, s: usize, tgt: usize) -> Option<usize> {
    links(doc).into_iter().filter(|l| l.0 == s && l.2 == tgt).map(|l| l.1).min()
}

fn head(doc: &Doc, (s, a, b): (usize, usize, usize)) -> usize {
    let toks = &doc.src[s];
    if (a..b).all(|i| toks[i].head.is_some()) {
        let roots: Vec<usize> = (a..b)
            .filter(|&i| {
                let h = toks[i].head.unwrap();
                h == i || h < a || h >= b
            })
            .collect();
        if roots.len() == 1 {
            return roots[0];
        }
    }
    (a..b).rev().find(|&i| ["NOUN", "PROPN", "PRON"].contains(&toks[i].upos.as_str())).unwrap_or(b - 1)
}

type Solved = (Option<(usize, usize)>, Option<(usize, usize)>, Option<usize>);

fn coref(doc: &Doc, s: usize, i: usize, max_d: usize) -> Option<Solved> {
    let covers = |m: &(usize, usize, usize)| m.0 == s && m.1 <= i && i < m.2;
    let mut best: Option<(usize, usize, usize)> = None;
    for chain in &doc.chains {
        if !chain.iter().any(covers) {
            continue;
        }
        for m in chain {
            if (m.0, m.1) < (s, i) && !covers(m) && best.is_none_or(|b| *m > b) {
                best = Some(*m);
            }
        }
    }
    let m = best?;
    if s - m.0 > max_d {
        return None;
    }
    let h = head(doc, m);
    let t = first_tgt(doc, m.0, h)?;
    Some((Some((m.0, h)), Some((m.0, t)), Some(s - m.0)))
}

fn scan_back(doc: &Doc, s: usize, j: usize, max_d: usize, accept: impl Fn(&Tok) -> bool) -> Option<Solved> {
    let mut best: Option<(usize, usize)> = None;
    for (s2, sent) in doc.tgt.iter().enumerate() {
        for (k, t) in sent.iter().enumerate() {
            let before = s2 < s || (s2 == s && k < j);
            if before && s - s2 <= max_d && accept(t) && best.is_none_or(|b| (s2, k) > b) {
                best = Some((s2, k));
            }
        }
    }
    let (s2, k) = best?;
    Some((first_src(doc, s2, k).map(|x| (s2, x)), Some((s2, k)), Some(s - s2)))
}

fn expected_present(words: &[&str], form: &str, case_sensitive: bool) -> bool {
    let want: Vec<&str> = form.split_whitespace().collect();
    words.len() >= want.len()
        && (0..=words.len() - want.len()).any(|k| want.iter().zip(&words[k..]).all(|(w, h)| same(w, h, case_sensitive)))
}

/// All examples of `pack` in `doc`, in link order then rule order.
pub fn enumerate(doc: &Doc, pack: &RPack, max_d: usize) -> Vec<Found> {
    let mut out = Vec::new();
    for (s, i, j) in links(doc) {
        for rule in &pack.rules {
            if let Some(f) = check(doc, pack, rule, s, i, j, max_d) {
                out.push(f);
            }
        }
    }
    out
}

fn check(doc: &Doc, pack: &RPack, rule: &RRule, s: usize, i: usize, j: usize, max_d: usize) -> Option<Found> {
    let (src, tgt) = (&doc.src[s], &doc.tgt[s]);
    if !crit_ok(&rule.t_src, src, i) || !crit_ok(&rule.t_tgt, tgt, j) {
        return None;
    }
    let (c_src, c_tgt, distance) = match rule.solver {
        Solver::None => (None, None, None),
        Solver::Coref => coref(doc, s, i, max_d)?,
        Solver::Verb => {
            let t = &tgt[j];
            if !t.verbal() || t.lemma.is_empty() {
                return None;
            }
            scan_back(doc, s, j, max_d, |c| c.verbal() && same(&c.lemma, &t.lemma, false))?
        }
        Solver::Case => {
            if tgt.iter().any(Tok::verbal) {
                return None;
            }
            let case = tgt[j].feats.get("Case")?.clone();
            scan_back(doc, s, j, max_d, |c| c.upos == "NOUN" && c.feats.get("Case") == Some(&case))?
        }
    };
    for (crit, at, side) in [(&rule.c_src, c_src, &doc.src), (&rule.c_tgt, c_tgt, &doc.tgt)] {
        if let Some(crit) = crit {
            let (cs, ct) = at?;
            if !crit_ok(crit, &side[cs], ct) {
                return None;
            }
        }
    }

    let span = |sent: &[Tok], end: usize, c: &Crit| {
        let n = c.form.as_ref().map_or(1, Vec::len);
        sent[end + 1 - n..=end].iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
    };
    let t_tgt_form = span(tgt, j, &rule.t_tgt);
    let candidates = if !rule.expected.is_empty() {
        rule.expected.clone()
    } else if let Some(words) = &rule.t_tgt.form {
        vec![words.join(" ")]
    } else {
        vec![t_tgt_form.clone()]
    };
    let words: Vec<&str> = tgt.iter().map(|t| t.form.as_str()).collect();
    let expected: Vec<String> =
        candidates.into_iter().filter(|f| expected_present(&words, f, rule.expected_case_sensitive)).collect();
    if expected.is_empty() {
        return None;
    }
    Some(Found {
        example_id: format!("{}:{}:{}/{}:{}-{}", doc.id, s, pack.id, rule.id, i, j),
        t_src_form: span(src, i, &rule.t_src),
        t_tgt_form,
        c_src,
        c_tgt,
        distance,
        expected,
    })
}
