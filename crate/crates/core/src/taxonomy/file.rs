//! Tab-separated taxonomy files.
//!
//! One label per line:
//! `id<TAB>name<TAB>syn1|syn2<TAB>S|O|P<TAB>hypernym_id_or_0<TAB>part_parent_ids_csv`.
//! Lines starting with `#` and blank lines are skipped. Ids must be dense 1..N.

use std::fmt::Write as _;

use super::{LabelId, MacroClass, Taxonomy, TaxonomyError};

fn parse_err(line: usize, message: impl Into<String>) -> TaxonomyError {
    TaxonomyError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_id(line: usize, field: &str, what: &str) -> Result<u16, TaxonomyError> {
    field
        .trim()
        .parse::<u16>()
        .map_err(|_| parse_err(line, format!("invalid {what} `{field}`")))
}

/// Parses a taxonomy file. Edges are stored as written; structural problems
/// (cycles, dangling ids) are left for [`Taxonomy::validate`].
pub fn parse_taxonomy(text: &str) -> Result<Taxonomy, TaxonomyError> {
    let mut t = Taxonomy::new();
    let mut edges: Vec<(usize, LabelId, u16, Vec<u16>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(parse_err(line_no, format!("expected 6 tab-separated fields, found {}", fields.len())));
        }
        let id = parse_id(line_no, fields[0], "id")?;
        let expected = t.len() + 1;
        if id as usize != expected {
            return Err(parse_err(line_no, format!("ids must be dense: expected {expected}, found {id}")));
        }
        let macro_class = MacroClass::from_letter(fields[3].trim())
            .ok_or_else(|| parse_err(line_no, format!("invalid macro class `{}`", fields[3])))?;

        let name = fields[1].trim();
        if name.is_empty() {
            return Err(parse_err(line_no, "empty name"));
        }
        if let Some(existing) = t.resolve(name) {
            return Err(parse_err(line_no, format!("name `{name}` already used by label {existing}")));
        }
        let assigned = t
            .intern(name, macro_class)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        debug_assert_eq!(assigned.0, id);

        for syn in fields[2].split('|').map(str::trim).filter(|s| !s.is_empty()) {
            t.add_synonym(assigned, syn)
                .map_err(|e| parse_err(line_no, e.to_string()))?;
        }

        let hyper = parse_id(line_no, fields[4], "hypernym id")?;
        let parts = fields[5]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_id(line_no, s, "part parent id"))
            .collect::<Result<Vec<_>, _>>()?;
        edges.push((line_no, assigned, hyper, parts));
    }

    for (_, child, hyper, parts) in edges {
        if hyper != 0 {
            t.set_hypernym(child, LabelId(hyper))?;
        }
        for p in parts {
            t.add_part_of(child, LabelId(p))?;
        }
    }
    Ok(t)
}

pub fn write_taxonomy(t: &Taxonomy) -> String {
    let mut out = String::from("# id\tname\tsynonyms\tmacro\thypernym\tpart_parents\n");
    for e in t.entries() {
        let parts: Vec<String> = t.part_parents(e.id).map(|p| p.to_string()).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.id,
            e.name,
            e.synonyms.join("|"),
            e.macro_class.letter(),
            t.hypernym(e.id).unwrap_or(LabelId::VOID),
            parts.join(",")
        );
    }
    out
}
