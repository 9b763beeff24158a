//! Dev/devtest/test splits per label.
//!
//! Each label (a rule, qualified by its pack) is sorted newest first and dealt
//! into the splits by a fixed periodic pattern that follows the configured
//! ratio. Labels below the minimum size go entirely to test.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ExtractedExample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Dev,
    Devtest,
    Test,
    Unassigned,
}

impl Split {
    pub const WRITTEN: [Split; 3] = [Split::Dev, Split::Devtest, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Dev => "dev",
            Split::Devtest => "devtest",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitConfig {
    /// Parts of (dev, devtest, test).
    pub ratio: (usize, usize, usize),
    pub min_label_count: usize,
    pub test_cap: usize,
    pub dev_cap: usize,
    pub devtest_cap: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratio: (1, 1, 5), min_label_count: 100, test_cap: 5000, dev_cap: 1000, devtest_cap: 1000 }
    }
}

impl SplitConfig {
    fn cap(&self, split: Split) -> usize {
        match split {
            Split::Dev => self.dev_cap,
            Split::Devtest => self.devtest_cap,
            Split::Test => self.test_cap,
            Split::Unassigned => usize::MAX,
        }
    }

    /// One period of the dealing pattern. Each slot goes to the split that is
    /// furthest behind its share so far (ties: test, dev, devtest), which
    /// spreads the smaller splits evenly; for 1:1:5 this is T T D T V T T.
    pub fn pattern(&self) -> Vec<Split> {
        let (d, v, t) = self.ratio;
        let period = d + v + t;
        let weights = [(Split::Test, t), (Split::Dev, d), (Split::Devtest, v)];
        let mut counts = [0usize; 3];
        let mut out = Vec::with_capacity(period);
        for slot in 1..=period {
            let (k, _) = weights
                .iter()
                .enumerate()
                .map(|(k, &(_, w))| (k, (slot * w) as i64 - (period * counts[k]) as i64))
                .fold((0, i64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
            counts[k] += 1;
            out.push(weights[k].0);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub example_id: String,
    pub label: String,
    pub split: Split,
}

fn recency_key(ex: &ExtractedExample) -> impl Ord + '_ {
    (
        Reverse(ex.year.unwrap_or(0)),
        ex.doc_id.as_str(),
        ex.t_src.at.sentence_index,
        ex.t_src.at.token_index,
        ex.t_tgt.at.token_index,
        ex.example_id.as_str(),
    )
}

/// Assigns every example to a split; the result is in input order.
pub fn split(examples: &[ExtractedExample], config: &SplitConfig) -> Vec<SplitAssignment> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        groups.entry(ex.label()).or_default().push(i);
    }
    let pattern = config.pattern();
    let mut result = vec![Split::Unassigned; examples.len()];
    for members in groups.values_mut() {
        if members.len() < config.min_label_count {
            for &i in members.iter() {
                result[i] = Split::Test;
            }
            continue;
        }
        members.sort_by(|&a, &b| recency_key(&examples[a]).cmp(&recency_key(&examples[b])));
        let mut filled: HashMap<Split, usize> = HashMap::new();
        for (slot, &i) in members.iter().enumerate() {
            let split = pattern[slot % pattern.len()];
            let n = filled.entry(split).or_default();
            if *n < config.cap(split) {
                *n += 1;
                result[i] = split;
            }
        }
    }
    examples
        .iter()
        .zip(result)
        .map(|(ex, split)| SplitAssignment { example_id: ex.example_id.clone(), label: ex.label(), split })
        .collect()
}

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("assignment for unknown example {0:?}")]
    UnknownExample(String),
    #[error("example {0:?} has no assignment")]
    Unassigned(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelManifest {
    pub pack_id: String,
    pub rule_id: String,
    pub dev: usize,
    pub devtest: usize,
    pub test: usize,
    pub unassigned: usize,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub labels: BTreeMap<String, LabelManifest>,
    pub total: BTreeMap<Split, usize>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SplitError + '_ {
    move |source| SplitError::Io { path: path.to_owned(), source }
}

/// File name for one label and split: `<pack_id>.<rule_id>.<split>.jsonl`.
pub fn split_file_name(pack_id: &str, rule_id: &str, split: Split) -> String {
    let clean = |s: &str| s.replace(['/', '\\'], "_");
    format!("{}.{}.{}.jsonl", clean(pack_id), clean(rule_id), split)
}

/// Writes the dev, devtest and test files of every label plus `manifest.json`.
///
/// Labels named in `known_labels` that have no examples get a manifest entry
/// with a note and no files. Files list examples in recency order.
pub fn write_splits(
    assignments: &[SplitAssignment],
    examples: &[ExtractedExample],
    out_dir: &Path,
    known_labels: &[String],
) -> Result<Manifest, SplitError> {
    let by_id: HashMap<&str, Split> = assignments.iter().map(|a| (a.example_id.as_str(), a.split)).collect();
    let ids: std::collections::HashSet<&str> = examples.iter().map(|e| e.example_id.as_str()).collect();
    if let Some(a) = assignments.iter().find(|a| !ids.contains(a.example_id.as_str())) {
        return Err(SplitError::UnknownExample(a.example_id.clone()));
    }

    let mut groups: BTreeMap<String, Vec<&ExtractedExample>> = BTreeMap::new();
    for ex in examples {
        if !by_id.contains_key(ex.example_id.as_str()) {
            return Err(SplitError::Unassigned(ex.example_id.clone()));
        }
        groups.entry(ex.label()).or_default().push(ex);
    }

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut manifest = Manifest::default();
    for split in [Split::Dev, Split::Devtest, Split::Test, Split::Unassigned] {
        manifest.total.insert(split, 0);
    }
    for (label, mut members) in groups {
        members.sort_by(|a, b| recency_key(a).cmp(&recency_key(b)));
        let first = members[0];
        let mut entry =
            LabelManifest { pack_id: first.pack_id.clone(), rule_id: first.rule_id.clone(), ..Default::default() };
        for split in Split::WRITTEN {
            let name = split_file_name(&first.pack_id, &first.rule_id, split);
            let path = out_dir.join(&name);
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            let mut w = BufWriter::new(file);
            for ex in members.iter().filter(|e| by_id[e.example_id.as_str()] == split) {
                let line = serde_json::to_string(ex).expect("examples serialize");
                writeln!(w, "{line}").map_err(io_err(&path))?;
            }
            w.flush().map_err(io_err(&path))?;
            entry.files.push(name);
        }
        for ex in &members {
            let split = by_id[ex.example_id.as_str()];
            *manifest.total.get_mut(&split).unwrap() += 1;
            match split {
                Split::Dev => entry.dev += 1,
                Split::Devtest => entry.devtest += 1,
                Split::Test => entry.test += 1,
                Split::Unassigned => entry.unassigned += 1,
            }
        }
        if entry.dev + entry.devtest == 0 {
            entry.note = Some("below minimum label size; all examples kept for test".into());
        }
        manifest.labels.insert(label, entry);
    }
    for label in known_labels {
        if !manifest.labels.contains_key(label) {
            let (pack_id, rule_id) = label.split_once('/').unwrap_or(("", label));
            manifest.labels.insert(
                label.clone(),
                LabelManifest {
                    pack_id: pack_id.into(),
                    rule_id: rule_id.into(),
                    note: Some("no examples; skipped".into()),
                    ..Default::default()
                },
            );
        }
    }
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}
