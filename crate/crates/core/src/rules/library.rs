//! Finding rule packs by name in a rules directory.

use std::path::{Path, PathBuf};

use super::{RuleError, RulePack, SolverKind, load_rule_pack};

/// Environment variable naming the default rules directory.
pub const RULES_DIR_ENV: &str = "CTXMINE_RULES_DIR";

/// `$CTXMINE_RULES_DIR`, or the packs shipped with this crate.
pub fn default_rules_dir() -> PathBuf {
    std::env::var_os(RULES_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/rules")))
}

/// Loads a pack given as a file path or as a pack name in `dir`.
///
/// A name of the form `xx-en.animacy` that has no file of its own is derived
/// from `en-xx.pronouns` with [`RulePack::reversed_for_animacy`].
pub fn resolve_pack(spec: &str, dir: &Path) -> Result<RulePack, RuleError> {
    let as_path = Path::new(spec);
    if as_path.is_file() {
        return load_rule_pack(as_path);
    }
    let named = dir.join(format!("{spec}.json"));
    if named.is_file() {
        return load_rule_pack(named);
    }
    if let Some((src, tgt)) = spec.strip_suffix(".animacy").and_then(|d| d.split_once('-')) {
        let forward = dir.join(format!("{tgt}-{src}.pronouns.json"));
        if forward.is_file() {
            return Ok(load_rule_pack(forward)?.reversed_for_animacy());
        }
    }
    Err(RuleError::NotFound { name: spec.to_owned(), dir: dir.to_owned() })
}

/// Every pack in `dir` for the direction `src`-`tgt`, ordered by file name,
/// followed by the animacy packs derived from the opposite direction.
pub fn packs_for_direction(dir: &Path, src: &str, tgt: &str) -> Result<Vec<RulePack>, RuleError> {
    let io = |source| RuleError::Io { path: dir.to_owned(), source };
    let mut files: Vec<PathBuf> =
        std::fs::read_dir(dir).map_err(io)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io)?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    let mut direct = Vec::new();
    let mut reversed = Vec::new();
    for file in files {
        let pack = load_rule_pack(&file)?;
        if pack.direction() == (src, tgt) {
            direct.push(pack);
        } else if pack.direction() == (tgt, src) && pack.rules.iter().any(|r| r.solver == SolverKind::Coref) {
            reversed.push(pack.reversed_for_animacy());
        }
    }
    // A hand-written animacy pack takes precedence over the derived one.
    reversed.retain(|r| direct.iter().all(|d| d.pack_id != r.pack_id));
    direct.extend(reversed);
    Ok(direct)
}
