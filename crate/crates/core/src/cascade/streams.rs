use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::CascadeError;
use crate::maskio::LabelMask;
use crate::taxonomy::{LabelId, MacroClass, Taxonomy};

/// Assignment of benchmark classes to the stuff, object and part streams.
///
/// Channel layouts:
/// * stuff stream: one channel per stuff id (ascending), then the foreground channel;
/// * object stream: one channel per object id (ascending);
/// * part stream (training): one channel per distinct part id (ascending);
/// * per-object part map (inference): that object's part list in order, then a no-part channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamSpec {
    stuff_ids: Vec<LabelId>,
    object_ids: Vec<LabelId>,
    parts_by_object: BTreeMap<LabelId, Vec<LabelId>>,
    foreground_id: LabelId,
    all_parts: Vec<LabelId>,
}

impl StreamSpec {
    pub fn new(
        stuff_ids: impl IntoIterator<Item = LabelId>,
        object_ids: impl IntoIterator<Item = LabelId>,
        parts_by_object: BTreeMap<LabelId, Vec<LabelId>>,
        foreground_id: LabelId,
    ) -> Result<Self, CascadeError> {
        let stuff: BTreeSet<LabelId> = stuff_ids.into_iter().collect();
        let objects: BTreeSet<LabelId> = object_ids.into_iter().collect();
        if let Some(id) = stuff.intersection(&objects).next() {
            return Err(CascadeError::Spec(format!("label {id} is both stuff and object")));
        }
        if stuff.contains(&LabelId::VOID) || objects.contains(&LabelId::VOID) {
            return Err(CascadeError::Spec("void cannot be a stream class".into()));
        }
        if foreground_id.is_void() || stuff.contains(&foreground_id) || objects.contains(&foreground_id) {
            return Err(CascadeError::Spec(format!(
                "foreground id {foreground_id} must be a fresh non-void label"
            )));
        }
        let mut all_parts = BTreeSet::new();
        for (obj, parts) in &parts_by_object {
            if !objects.contains(obj) {
                return Err(CascadeError::Spec(format!("parts registered for non-object {obj}")));
            }
            if parts.is_empty() {
                return Err(CascadeError::Spec(format!("object {obj} has an empty part list")));
            }
            let unique: BTreeSet<_> = parts.iter().collect();
            if unique.len() != parts.len() {
                return Err(CascadeError::Spec(format!("object {obj} lists a part twice")));
            }
            all_parts.extend(parts.iter().copied());
        }
        Ok(StreamSpec {
            stuff_ids: stuff.into_iter().collect(),
            object_ids: objects.into_iter().collect(),
            parts_by_object,
            foreground_id,
            all_parts: all_parts.into_iter().collect(),
        })
    }

    /// Stuff labels from the taxonomy's macro classes; every other benchmark
    /// label is an object. Parts come from the part-of relation. The foreground
    /// id is one past the dictionary.
    pub fn from_taxonomy(taxonomy: &Taxonomy, benchmark: &[LabelId]) -> Result<Self, CascadeError> {
        let mut stuff = Vec::new();
        let mut objects = Vec::new();
        for &id in benchmark {
            match taxonomy.macro_class(id) {
                Some(MacroClass::Stuff) => stuff.push(id),
                Some(_) => objects.push(id),
                None => return Err(CascadeError::Spec(format!("label {id} is not in the taxonomy"))),
            }
        }
        let parts = objects
            .iter()
            .filter_map(|&o| {
                let p: Vec<LabelId> = taxonomy.parts_of(o).into_iter().collect();
                (!p.is_empty()).then_some((o, p))
            })
            .collect();
        let fg = LabelId(u16::try_from(taxonomy.id_space()).map_err(|_| CascadeError::Spec("dictionary too large".into()))?);
        StreamSpec::new(stuff, objects, parts, fg)
    }

    pub fn stuff_ids(&self) -> &[LabelId] {
        &self.stuff_ids
    }

    pub fn object_ids(&self) -> &[LabelId] {
        &self.object_ids
    }

    pub fn foreground_id(&self) -> LabelId {
        self.foreground_id
    }

    pub fn parts_of(&self, object: LabelId) -> Option<&[LabelId]> {
        self.parts_by_object.get(&object).map(Vec::as_slice)
    }

    pub fn parts_by_object(&self) -> &BTreeMap<LabelId, Vec<LabelId>> {
        &self.parts_by_object
    }

    /// Distinct part ids, ascending: the part stream's training channels.
    pub fn all_parts(&self) -> &[LabelId] {
        &self.all_parts
    }

    /// Stuff-stream width: stuff classes plus the foreground channel.
    pub fn stuff_channels(&self) -> usize {
        self.stuff_ids.len() + 1
    }

    pub fn foreground_channel(&self) -> usize {
        self.stuff_ids.len()
    }

    pub fn is_stuff(&self, id: LabelId) -> bool {
        self.stuff_ids.binary_search(&id).is_ok()
    }

    pub fn is_object(&self, id: LabelId) -> bool {
        self.object_ids.binary_search(&id).is_ok()
    }

    pub fn stuff_channel(&self, id: LabelId) -> Option<usize> {
        if id == self.foreground_id {
            return Some(self.foreground_channel());
        }
        self.stuff_ids.binary_search(&id).ok()
    }

    pub fn object_channel(&self, id: LabelId) -> Option<usize> {
        self.object_ids.binary_search(&id).ok()
    }

    pub fn part_channel(&self, id: LabelId) -> Option<usize> {
        self.all_parts.binary_search(&id).ok()
    }

    /// Label of stuff-stream channel `k` (the last channel is the foreground id).
    pub fn stuff_label(&self, k: usize) -> LabelId {
        self.stuff_ids.get(k).copied().unwrap_or(self.foreground_id)
    }

    /// Stuff-stream targets: stuff labels pass through, object labels become
    /// the foreground id, everything else is void.
    pub fn remap_targets_stuff(&self, gt: &LabelMask) -> LabelMask {
        gt.map(|id| {
            if self.is_stuff(id) {
                id
            } else if self.is_object(id) {
                self.foreground_id
            } else {
                LabelId::VOID
            }
        })
    }

    /// Serializes to the TSV sidecar format read by [`parse_stream_spec`].
    pub fn to_tsv(&self) -> String {
        let join = |ids: &[LabelId]| ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::from("# stream spec\n");
        let _ = writeln!(out, "stuff\t{}", join(&self.stuff_ids));
        let _ = writeln!(out, "object\t{}", join(&self.object_ids));
        let _ = writeln!(out, "foreground\t{}", self.foreground_id);
        for (obj, parts) in &self.parts_by_object {
            let _ = writeln!(out, "parts\t{obj}\t{}", join(parts));
        }
        out
    }
}

/// Parses a stream sidecar:
///
/// ```text
/// stuff<TAB>1,2,3
/// object<TAB>4,5
/// foreground<TAB>200
/// parts<TAB>4<TAB>10,11
/// ```
///
/// `#` starts a comment line. `foreground` defaults to one past the largest id seen.
pub fn parse_stream_spec(text: &str) -> Result<StreamSpec, CascadeError> {
    let err = |line: usize, message: String| CascadeError::Parse { line, message };
    let ids = |line: usize, field: &str| -> Result<Vec<LabelId>, CascadeError> {
        field
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u16>().map(LabelId).map_err(|_| err(line, format!("invalid id `{s}`"))))
            .collect()
    };
    let mut stuff = Vec::new();
    let mut objects = Vec::new();
    let mut parts = BTreeMap::new();
    let mut foreground = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        match (fields[0], fields.len()) {
            ("stuff", 2) => stuff.extend(ids(line, fields[1])?),
            ("object", 2) => objects.extend(ids(line, fields[1])?),
            ("foreground", 2) => {
                let v = ids(line, fields[1])?;
                if v.len() != 1 {
                    return Err(err(line, "foreground takes exactly one id".into()));
                }
                foreground = Some(v[0]);
            }
            ("parts", 3) => {
                let obj = ids(line, fields[1])?;
                if obj.len() != 1 {
                    return Err(err(line, "parts takes one object id".into()));
                }
                if parts.insert(obj[0], ids(line, fields[2])?).is_some() {
                    return Err(err(line, format!("parts for {} given twice", obj[0])));
                }
            }
            (kind, n) => return Err(err(line, format!("unrecognized record `{kind}` with {n} fields"))),
        }
    }
    let fg = foreground.unwrap_or_else(|| {
        let max = stuff
            .iter()
            .chain(&objects)
            .chain(parts.values().flatten())
            .map(|l| l.0)
            .max()
            .unwrap_or(0);
        LabelId(max + 1)
    });
    StreamSpec::new(stuff, objects, parts, fg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskio::Grid;

    fn spec() -> StreamSpec {
        StreamSpec::new(
            [LabelId(1), LabelId(2)],
            [LabelId(3), LabelId(4)],
            BTreeMap::from([(LabelId(3), vec![LabelId(7), LabelId(6)])]),
            LabelId(9),
        )
        .unwrap()
    }

    #[test]
    fn channel_layout() {
        let s = spec();
        assert_eq!(s.stuff_channels(), 3);
        assert_eq!(s.stuff_channel(LabelId(2)), Some(1));
        assert_eq!(s.stuff_channel(LabelId(9)), Some(2));
        assert_eq!(s.object_channel(LabelId(4)), Some(1));
        assert_eq!(s.all_parts(), &[LabelId(6), LabelId(7)]);
        assert_eq!(s.parts_of(LabelId(3)), Some(&[LabelId(7), LabelId(6)][..]));
        assert_eq!(s.stuff_label(2), LabelId(9));
    }

    #[test]
    fn remap_rules() {
        let s = spec();
        let stuff_only = Grid::from_vec(1, 3, vec![LabelId(1), LabelId(2), LabelId(0)]).unwrap();
        assert_eq!(s.remap_targets_stuff(&stuff_only), stuff_only);
        let objects = Grid::from_vec(1, 2, vec![LabelId(3), LabelId(4)]).unwrap();
        assert!(s.remap_targets_stuff(&objects).data().iter().all(|&l| l == LabelId(9)));
    }

    #[test]
    fn invalid_specs() {
        assert!(StreamSpec::new([LabelId(1)], [LabelId(1)], BTreeMap::new(), LabelId(5)).is_err());
        assert!(StreamSpec::new([LabelId(1)], [LabelId(2)], BTreeMap::new(), LabelId(2)).is_err());
        assert!(StreamSpec::new(
            [LabelId(1)],
            [LabelId(2)],
            BTreeMap::from([(LabelId(2), vec![])]),
            LabelId(5)
        )
        .is_err());
        assert!(StreamSpec::new(
            [LabelId(1)],
            [LabelId(2)],
            BTreeMap::from([(LabelId(1), vec![LabelId(4)])]),
            LabelId(5)
        )
        .is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let s = spec();
        assert_eq!(parse_stream_spec(&s.to_tsv()).unwrap(), s);
        let implicit = parse_stream_spec("stuff\t1,2\nobject\t5\n").unwrap();
        assert_eq!(implicit.foreground_id(), LabelId(6));
        assert!(parse_stream_spec("bogus\t1\n").is_err());
    }
}
