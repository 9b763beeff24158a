//! Compares the shipped rule packs with the criteria tables kept as TSV files
//! under `tests/golden`, transcribed cell for cell.

use std::fs;

use ctxmine::rules::{Category, Rule, SolverKind, TokenCriterion, load_rule_pack, validate_pack};

use super::{golden_dir, rules_dir};

fn feats(pairs: &[(&str, &str)]) -> ctxmine::annotation::MorphFeatures {
    let mut f = ctxmine::annotation::MorphFeatures::new();
    for (k, v) in pairs {
        f.insert(*k, *v);
    }
    f
}

/// Reads a case cell: `*` (any), `Nom.` (required) or `-Nom` (forbidden).
fn case_cell(cell: &str, c: &mut TokenCriterion) -> Result<(), String> {
    let cell = cell.trim();
    if cell == "*" {
        return Ok(());
    }
    let (negated, value) = match cell.strip_prefix('-') {
        Some(v) => (true, v),
        None => (false, cell),
    };
    let value = value.trim_end_matches('.');
    if value.is_empty() {
        return Err(format!("bad case cell {cell:?}"));
    }
    let target = if negated { &mut c.forbidden_feats } else { &mut c.required_feats };
    target.insert("Case", value);
    Ok(())
}

fn pos_cell(cell: &str) -> String {
    match cell {
        "PNOUN" => "PRON".into(),
        other => other.into(),
    }
}

fn pronoun_row(cells: &[&str]) -> Result<Rule, String> {
    let [rule_id, src_form, src_pos, src_case, tgt_form, tgt_pos, tgt_case, csrc_pos, ctgt_pos, gender, number] = cells
    else {
        return Err(format!("expected 11 cells, got {}", cells.len()));
    };
    let mut t_src = TokenCriterion {
        form: Some(src_form.split_whitespace().map(str::to_owned).collect()),
        upos: Some(pos_cell(src_pos)),
        ..TokenCriterion::any()
    };
    case_cell(src_case, &mut t_src)?;
    let mut t_tgt = TokenCriterion {
        form: Some(tgt_form.split_whitespace().map(str::to_owned).collect()),
        upos: Some(pos_cell(tgt_pos)),
        ..TokenCriterion::any()
    };
    case_cell(tgt_case, &mut t_tgt)?;
    let has_context = *csrc_pos != "-";
    let c_src = has_context.then(|| TokenCriterion { upos: Some(pos_cell(csrc_pos)), ..TokenCriterion::any() });
    let c_tgt = (*ctgt_pos != "-").then(|| TokenCriterion {
        upos: Some(pos_cell(ctgt_pos)),
        required_feats: feats(&[("Gender", gender.trim_end_matches('.')), ("Number", number.trim_end_matches('.'))]),
        ..TokenCriterion::any()
    });
    Ok(Rule {
        rule_id: rule_id.to_string(),
        category: if has_context { Category::Gender } else { Category::Formality },
        source_lang: String::new(),
        target_lang: String::new(),
        expected_forms: vec![tgt_form.to_string()],
        expected_case_sensitive: false,
        t_src,
        t_tgt,
        c_src,
        c_tgt,
        solver: if has_context { SolverKind::Coref } else { SolverKind::None },
    })
}

fn auxiliary_row(cells: &[&str]) -> Result<Rule, String> {
    let [rule_id, lemma, illegal] = cells else {
        return Err(format!("expected 3 cells, got {}", cells.len()));
    };
    Ok(Rule {
        rule_id: rule_id.to_string(),
        category: Category::Auxiliary,
        source_lang: String::new(),
        target_lang: String::new(),
        t_src: TokenCriterion { lemma: Some(lemma.to_string()), ..TokenCriterion::any() },
        t_tgt: TokenCriterion {
            forbidden_lemmas: illegal.split(',').map(|l| l.trim().to_owned()).collect(),
            ..TokenCriterion::any()
        },
        c_src: None,
        c_tgt: None,
        solver: SolverKind::TargetVerbEllipsis,
        expected_forms: vec![],
        expected_case_sensitive: false,
    })
}

/// The comparison ignores language codes and case sensitivity, which the
/// tables do not carry; everything else must be identical.
fn same_rule(shipped: &Rule, table: &Rule) -> bool {
    let mut a = shipped.clone();
    a.source_lang.clear();
    a.target_lang.clear();
    a.expected_case_sensitive = false;
    a.t_tgt.case_sensitive = false;
    a == *table
}

/// Checks every golden table against its pack; returns the number of rows.
pub fn check_rule_pack_fidelity() -> Result<String, String> {
    let mut tables: Vec<_> = fs::read_dir(golden_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    tables.sort();
    if tables.is_empty() {
        return Err("no golden tables".into());
    }
    let mut rows = 0;
    let mut mismatches = Vec::new();
    for path in &tables {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let pack = load_rule_pack(rules_dir().join(format!("{name}.json"))).map_err(|e| format!("{name}: {e}"))?;
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(format!("{name}: empty table"))?;
        let aux = header.starts_with("rule\tlemma");
        let expected: Vec<Rule> = lines
            .map(|l| {
                let cells: Vec<&str> = l.split('\t').map(str::trim).collect();
                if aux { auxiliary_row(&cells) } else { pronoun_row(&cells) }
            })
            .collect::<Result<_, _>>()
            .map_err(|e| format!("{name}: {e}"))?;
        rows += expected.len();
        if pack.rules.len() != expected.len() {
            mismatches.push(format!("{name}: {} rules shipped, {} rows in table", pack.rules.len(), expected.len()));
        }
        for (shipped, row) in pack.rules.iter().zip(&expected) {
            if !same_rule(shipped, row) {
                mismatches.push(format!("{name}/{}: shipped {shipped:?} vs table {row:?}", row.rule_id));
            }
        }
        let diagnostics = validate_pack(&pack);
        if !diagnostics.is_empty() {
            mismatches.push(format!("{name}: {} diagnostics, first: {}", diagnostics.len(), diagnostics[0]));
        }
    }
    if mismatches.is_empty() {
        Ok(format!("{} tables, {rows} rows identical", tables.len()))
    } else {
        Err(mismatches.join("; "))
    }
}

/// Rows per table, by pack name.
pub fn table_sizes() -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = fs::read_dir(golden_dir())
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .map(|p| {
            let n = fs::read_to_string(&p).unwrap().lines().filter(|l| !l.trim().is_empty()).count() - 1;
            (p.file_stem().unwrap().to_string_lossy().into_owned(), n)
        })
        .collect();
    out.sort();
    out
}
