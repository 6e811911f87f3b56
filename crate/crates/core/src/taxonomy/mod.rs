//! Open-vocabulary label dictionary with is-a (hypernym) and part-of trees.
//!
//! Labels are interned case-insensitively. Index 0 is reserved for the void
//! ("unlabeled") class and never names a dictionary entry, so the first
//! interned label receives id 1.

mod file;
mod remap;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use file::{parse_taxonomy, write_taxonomy};
pub use remap::LabelRemap;

/// Part-of chains longer than this many nodes are flagged by [`Taxonomy::validate`].
pub const OBSERVED_PART_DEPTH: usize = 3;

/// Index into the label dictionary. `LabelId::VOID` is the unlabeled class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
#[repr(transparent)]
pub struct LabelId(pub u16);

impl LabelId {
    pub const VOID: LabelId = LabelId(0);

    #[inline]
    pub fn is_void(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u16> for LabelId {
    fn from(v: u16) -> Self {
        LabelId(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MacroClass {
    Stuff,
    Object,
    Part,
}

impl MacroClass {
    pub fn letter(self) -> char {
        match self {
            MacroClass::Stuff => 'S',
            MacroClass::Object => 'O',
            MacroClass::Part => 'P',
        }
    }

    pub fn from_letter(c: &str) -> Option<Self> {
        match c {
            "S" => Some(MacroClass::Stuff),
            "O" => Some(MacroClass::Object),
            "P" => Some(MacroClass::Part),
            _ => None,
        }
    }
}

impl fmt::Display for MacroClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MacroClass::Stuff => "stuff",
            MacroClass::Object => "object",
            MacroClass::Part => "part",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("label name is empty")]
    EmptyName,
    #[error("label `{name}` is already {existing}, cannot re-intern as {requested}")]
    MacroConflict {
        name: String,
        existing: MacroClass,
        requested: MacroClass,
    },
    #[error("synonym `{synonym}` already resolves to label {existing}")]
    SynonymConflict { synonym: String, existing: LabelId },
    #[error("unknown label id {0}")]
    UnknownLabel(LabelId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub id: LabelId,
    pub name: String,
    pub synonyms: Vec<String>,
    pub macro_class: MacroClass,
}

/// Label dictionary plus the hypernym forest and the part-of relation.
///
/// Mutating methods take `&mut self`; once built, share it behind `&` or `Arc`
/// and every query is pure.
#[derive(Clone, Debug, Default)]
pub struct Taxonomy {
    entries: Vec<LabelEntry>,
    lookup: HashMap<String, LabelId>,
    hypernym_parent: BTreeMap<LabelId, LabelId>,
    part_parents: BTreeMap<LabelId, BTreeSet<LabelId>>,
}

fn normalize(name: &str) -> String {
    name.trim().to_lowercase()
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of user-defined labels (void excluded).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest valid id plus one: the size of any remap table over this dictionary.
    pub fn id_space(&self) -> usize {
        self.entries.len() + 1
    }

    pub fn entries(&self) -> &[LabelEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    pub fn entry(&self, id: LabelId) -> Option<&LabelEntry> {
        if id.is_void() {
            return None;
        }
        self.entries.get(id.index() - 1)
    }

    pub fn name(&self, id: LabelId) -> Option<&str> {
        self.entry(id).map(|e| e.name.as_str())
    }

    pub fn macro_class(&self, id: LabelId) -> Option<MacroClass> {
        self.entry(id).map(|e| e.macro_class)
    }

    pub fn contains(&self, id: LabelId) -> bool {
        self.entry(id).is_some()
    }

    /// Resolves a canonical name or synonym, case-insensitively.
    pub fn resolve(&self, name: &str) -> Option<LabelId> {
        self.lookup.get(&normalize(name)).copied()
    }

    /// Returns the id for `name`, appending a fresh entry when unseen.
    pub fn intern(&mut self, name: &str, macro_class: MacroClass) -> Result<LabelId, TaxonomyError> {
        let trimmed = name.trim();
        if trimmed.is_empty() {
            return Err(TaxonomyError::EmptyName);
        }
        if let Some(id) = self.resolve(trimmed) {
            let existing = self.entries[id.index() - 1].macro_class;
            if existing != macro_class {
                return Err(TaxonomyError::MacroConflict {
                    name: trimmed.to_string(),
                    existing,
                    requested: macro_class,
                });
            }
            return Ok(id);
        }
        let id = LabelId(
            u16::try_from(self.entries.len() + 1).expect("label dictionary exceeds 65535 entries"),
        );
        self.entries.push(LabelEntry {
            id,
            name: trimmed.to_string(),
            synonyms: Vec::new(),
            macro_class,
        });
        self.lookup.insert(normalize(trimmed), id);
        Ok(id)
    }

    pub fn add_synonym(&mut self, id: LabelId, synonym: &str) -> Result<(), TaxonomyError> {
        let trimmed = synonym.trim();
        if trimmed.is_empty() {
            return Err(TaxonomyError::EmptyName);
        }
        if !self.contains(id) {
            return Err(TaxonomyError::UnknownLabel(id));
        }
        match self.resolve(trimmed) {
            Some(existing) if existing == id => Ok(()),
            Some(existing) => Err(TaxonomyError::SynonymConflict {
                synonym: trimmed.to_string(),
                existing,
            }),
            None => {
                self.lookup.insert(normalize(trimmed), id);
                self.entries[id.index() - 1].synonyms.push(trimmed.to_string());
                Ok(())
            }
        }
    }

    /// Records an is-a edge. Cycles are not rejected here; see [`Taxonomy::validate`].
    pub fn set_hypernym(&mut self, child: LabelId, parent: LabelId) -> Result<(), TaxonomyError> {
        if !self.contains(child) {
            return Err(TaxonomyError::UnknownLabel(child));
        }
        if parent.is_void() {
            self.hypernym_parent.remove(&child);
        } else {
            self.hypernym_parent.insert(child, parent);
        }
        Ok(())
    }

    pub fn add_part_of(&mut self, part: LabelId, object: LabelId) -> Result<(), TaxonomyError> {
        if !self.contains(part) {
            return Err(TaxonomyError::UnknownLabel(part));
        }
        self.part_parents.entry(part).or_default().insert(object);
        Ok(())
    }

    pub fn hypernym(&self, id: LabelId) -> Option<LabelId> {
        self.hypernym_parent.get(&id).copied()
    }

    pub fn part_parents(&self, part: LabelId) -> impl Iterator<Item = LabelId> + '_ {
        self.part_parents.get(&part).into_iter().flatten().copied()
    }

    /// Part classes whose part-of parents include `object`.
    pub fn parts_of(&self, object: LabelId) -> BTreeSet<LabelId> {
        self.part_parents
            .iter()
            .filter(|(_, parents)| parents.contains(&object))
            .map(|(&part, _)| part)
            .collect()
    }

    pub fn ids_with_macro(&self, macro_class: MacroClass) -> Vec<LabelId> {
        self.entries
            .iter()
            .filter(|e| e.macro_class == macro_class)
            .map(|e| e.id)
            .collect()
    }

    /// Ancestor chain starting at `id` (inclusive), root last. Stops early on a cycle.
    pub fn ancestors(&self, id: LabelId) -> Vec<LabelId> {
        let mut chain = vec![id];
        let mut seen = BTreeSet::from([id]);
        let mut cur = id;
        while let Some(parent) = self.hypernym(cur) {
            if !seen.insert(parent) {
                break;
            }
            chain.push(parent);
            cur = parent;
        }
        chain
    }

    /// Depth in the hypernym forest, roots at 0.
    pub fn depth(&self, id: LabelId) -> usize {
        self.ancestors(id).len() - 1
    }

    pub fn max_depth(&self) -> usize {
        self.ids().map(|id| self.depth(id)).max().unwrap_or(0)
    }

    /// Maps every label to its ancestor at depth `min(level, depth(label))`.
    ///
    /// Assumes an acyclic hypernym relation (check with [`Taxonomy::validate`]).
    pub fn merge_to_level(&self, level: usize) -> LabelRemap {
        let mut table = Vec::with_capacity(self.id_space());
        table.push(LabelId::VOID);
        for id in self.ids() {
            let chain = self.ancestors(id);
            let depth = chain.len() - 1;
            let target = if depth <= level { id } else { chain[depth - level] };
            table.push(target);
        }
        LabelRemap::from_table(table)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        let mut names: BTreeMap<String, Vec<LabelId>> = BTreeMap::new();
        for e in &self.entries {
            names.entry(normalize(&e.name)).or_default().push(e.id);
            for s in &e.synonyms {
                names.entry(normalize(s)).or_default().push(e.id);
            }
        }
        for (name, mut ids) in names {
            ids.dedup();
            if ids.len() > 1 {
                report.errors.push(ValidationIssue::DuplicateName { name, ids });
            }
        }

        for (&child, &parent) in &self.hypernym_parent {
            if !self.contains(parent) {
                report.errors.push(ValidationIssue::DanglingId {
                    from: child,
                    to: parent,
                    relation: Relation::Hypernym,
                });
            }
        }
        for (&part, parents) in &self.part_parents {
            for &p in parents {
                if !self.contains(p) {
                    report.errors.push(ValidationIssue::DanglingId {
                        from: part,
                        to: p,
                        relation: Relation::PartOf,
                    });
                }
            }
        }

        // Hypernym cycles: each node has at most one parent, so walk chains.
        let mut on_cycle = BTreeSet::new();
        for id in self.ids() {
            let mut seen = Vec::new();
            let mut cur = id;
            loop {
                if let Some(pos) = seen.iter().position(|&s| s == cur) {
                    let cycle: Vec<LabelId> = seen[pos..].to_vec();
                    let head = *cycle.iter().min().unwrap();
                    if on_cycle.insert(head) {
                        report.errors.push(ValidationIssue::Cycle {
                            relation: Relation::Hypernym,
                            labels: cycle,
                        });
                    }
                    break;
                }
                seen.push(cur);
                match self.hypernym(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
        }

        for cycle in self.part_cycles() {
            report.errors.push(ValidationIssue::Cycle {
                relation: Relation::PartOf,
                labels: cycle,
            });
        }

        if !report.errors.iter().any(|e| matches!(e, ValidationIssue::Cycle { relation: Relation::PartOf, .. })) {
            for &part in self.part_parents.keys() {
                let depth = self.part_chain_len(part);
                if depth > OBSERVED_PART_DEPTH {
                    report.warnings.push(ValidationIssue::DeepPartChain { label: part, depth });
                }
            }
        }

        report
    }

    /// Longest part-of chain (in nodes) starting at `part`. Assumes no cycles.
    fn part_chain_len(&self, part: LabelId) -> usize {
        let mut memo = BTreeMap::new();
        self.part_chain_len_memo(part, &mut memo)
    }

    fn part_chain_len_memo(&self, id: LabelId, memo: &mut BTreeMap<LabelId, usize>) -> usize {
        if let Some(&d) = memo.get(&id) {
            return d;
        }
        let d = 1 + self
            .part_parents(id)
            .map(|p| self.part_chain_len_memo(p, memo))
            .max()
            .unwrap_or(0);
        memo.insert(id, d);
        d
    }

    fn part_cycles(&self) -> Vec<Vec<LabelId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Active,
            Done,
        }
        fn visit(
            t: &Taxonomy,
            id: LabelId,
            marks: &mut BTreeMap<LabelId, Mark>,
            stack: &mut Vec<LabelId>,
            out: &mut Vec<Vec<LabelId>>,
        ) {
            marks.insert(id, Mark::Active);
            stack.push(id);
            for p in t.part_parents(id) {
                match marks.get(&p).copied().unwrap_or(Mark::Fresh) {
                    Mark::Fresh => visit(t, p, marks, stack, out),
                    Mark::Active => {
                        let pos = stack.iter().position(|&s| s == p).unwrap();
                        out.push(stack[pos..].to_vec());
                    }
                    Mark::Done => {}
                }
            }
            stack.pop();
            marks.insert(id, Mark::Done);
        }

        let mut marks = BTreeMap::new();
        let mut out = Vec::new();
        for &part in self.part_parents.keys() {
            if marks.get(&part).copied().unwrap_or(Mark::Fresh) == Mark::Fresh {
                visit(self, part, &mut marks, &mut Vec::new(), &mut out);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Hypernym,
    PartOf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ValidationIssue {
    Cycle { relation: Relation, labels: Vec<LabelId> },
    DanglingId { from: LabelId, to: LabelId, relation: Relation },
    DuplicateName { name: String, ids: Vec<LabelId> },
    DeepPartChain { label: LabelId, depth: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Cycle { relation, labels } => {
                let ids: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
                write!(f, "{relation:?} cycle through labels {}", ids.join(" -> "))
            }
            ValidationIssue::DanglingId { from, to, relation } => {
                write!(f, "{relation:?} edge from {from} points at unknown label {to}")
            }
            ValidationIssue::DuplicateName { name, ids } => {
                write!(f, "name `{name}` is claimed by labels {ids:?}")
            }
            ValidationIssue::DeepPartChain { label, depth } => {
                write!(f, "part-of chain from {label} has {depth} levels")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Result of [`select_top_k_by_pixel_ratio`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopK {
    pub labels: Vec<LabelId>,
    /// Set when fewer than `k` labels had a nonzero count; holds the missing amount.
    pub shortfall: Option<usize>,
}

/// Picks the `k` labels with the largest pixel counts, descending, ties by ascending id.
/// Labels with a zero count and the void label are never selected.
pub fn select_top_k_by_pixel_ratio(pixel_counts: &BTreeMap<LabelId, u64>, k: usize) -> TopK {
    let mut ranked: Vec<(LabelId, u64)> = pixel_counts
        .iter()
        .filter(|(id, &c)| c > 0 && !id.is_void())
        .map(|(&id, &c)| (id, c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let available = ranked.len();
    ranked.truncate(k);
    TopK {
        labels: ranked.into_iter().map(|(id, _)| id).collect(),
        shortfall: (available < k).then(|| k - available),
    }
}

/// Fraction of the (non-void) pixel mass covered by `selected`.
pub fn pixel_coverage(pixel_counts: &BTreeMap<LabelId, u64>, selected: &[LabelId]) -> f64 {
    let total: u64 = pixel_counts
        .iter()
        .filter(|(id, _)| !id.is_void())
        .map(|(_, &c)| c)
        .sum();
    if total == 0 {
        return 0.0;
    }
    let chosen: BTreeSet<LabelId> = selected.iter().copied().collect();
    let covered: u64 = chosen.iter().filter_map(|id| pixel_counts.get(id)).sum();
    covered as f64 / total as f64
}
