//! Plain-text helpers shared by extraction and scoring: detokenization,
//! whole-word tokenization and a rule-based final-sentence segmenter.

use unicode_segmentation::UnicodeSegmentation;

const TERMINALS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &['"', '\'', '”', '’', '»', ')', ']', '}'];
const OPENERS: &[char] = &['"', '\'', '“', '‘', '„', '«', '(', '[', '{', '¿', '¡'];

const DETOK_CLOSING: &[char] = &['.', ',', '!', '?', ';', ':', '…', ')', ']', '}', '»', '”', '’', '%'];
const DETOK_OPENING: &[char] = &['(', '[', '{', '«', '“', '„', '¿', '¡', '‘'];

/// Joins token forms with single spaces, then drops the space before closing
/// punctuation and after opening punctuation.
pub fn detokenize<'a, I>(forms: I) -> String
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = String::new();
    let mut glue_next = true;
    for form in forms {
        let closing = !form.is_empty() && form.chars().all(|c| DETOK_CLOSING.contains(&c));
        if !glue_next && !closing {
            out.push(' ');
        }
        out.push_str(form);
        glue_next = !form.is_empty() && form.chars().all(|c| DETOK_OPENING.contains(&c));
    }
    out
}

/// Splits text on Unicode word boundaries and drops whitespace-only segments.
/// Apostrophes and hyphens between letters stay inside their word.
pub fn word_tokens(text: &str) -> Vec<&str> {
    text.split_word_bounds().filter(|seg| !seg.chars().all(char::is_whitespace)).collect()
}

fn fold(s: &str, case_sensitive: bool) -> String {
    if case_sensitive { s.to_owned() } else { s.to_lowercase() }
}

/// True when `expected` occurs in `tokens` as a contiguous whole-token sequence.
///
/// An expected form ending in an apostrophe is an elided clitic (French `t'`)
/// and additionally matches a token that begins with it (`t'aime`).
pub fn contains_whole_tokens(tokens: &[&str], expected: &str, case_sensitive: bool) -> bool {
    let expected = expected.trim();
    let wanted: Vec<String> = word_tokens(expected).into_iter().map(|t| fold(t, case_sensitive)).collect();
    if wanted.is_empty() {
        return false;
    }
    let have: Vec<String> = tokens.iter().map(|t| fold(t, case_sensitive)).collect();
    if have.windows(wanted.len()).any(|w| w == wanted.as_slice()) {
        return true;
    }
    if expected.ends_with(['\'', '’']) {
        let prefix = fold(expected, case_sensitive);
        return have.iter().any(|t| t.len() > prefix.len() && t.starts_with(&prefix));
    }
    false
}

/// How the scored sentence is taken from a system output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Segmentation {
    /// Built-in rule-based segmenter; score the last sentence.
    #[default]
    Rules,
    /// Score the whole output.
    Off,
    /// Output is already segmented one sentence per line; score the last nonempty line.
    Lines,
}

/// Returns the last sentence of `text` under the given segmentation mode.
pub fn final_sentence(text: &str, mode: Segmentation) -> &str {
    match mode {
        Segmentation::Off => text.trim(),
        Segmentation::Lines => text.lines().map(str::trim).rfind(|l| !l.is_empty()).unwrap_or(""),
        Segmentation::Rules => {
            let start = sentence_starts(text).last().copied().unwrap_or(0);
            text[start..].trim()
        }
    }
}

/// Splits text into sentences with the built-in rules.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut starts = sentence_starts(text);
    starts.insert(0, 0);
    starts
        .iter()
        .zip(starts.iter().skip(1).chain(std::iter::once(&text.len())))
        .map(|(&a, &b)| text[a..b].trim())
        .filter(|s| !s.is_empty())
        .collect()
}

// Byte offsets where a new sentence begins (excluding offset 0).
fn sentence_starts(text: &str) -> Vec<usize> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut starts = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !TERMINALS.contains(&c) {
            i += 1;
            continue;
        }
        let terminal_at = i;
        let mut j = i + 1;
        while j < chars.len() && (TERMINALS.contains(&chars[j].1) || CLOSERS.contains(&chars[j].1)) {
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        if k > j && k < chars.len() {
            let next = chars[k].1;
            let opens = next.is_uppercase() || OPENERS.contains(&next);
            if opens && !is_initial(&chars, terminal_at) {
                starts.push(chars[k].0);
            }
        }
        i = j.max(i + 1);
    }
    starts
}

// A period right after a lone letter ("J. Smith", "U.S.") is not a boundary.
fn is_initial(chars: &[(usize, char)], period: usize) -> bool {
    if chars[period].1 != '.' || period == 0 {
        return false;
    }
    let prev = chars[period - 1].1;
    if !prev.is_alphabetic() {
        return false;
    }
    period == 1 || {
        let before = chars[period - 2].1;
        before.is_whitespace() || before == '.' || OPENERS.contains(&before)
    }
}
