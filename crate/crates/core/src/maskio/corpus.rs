//! On-disk annotation corpus layout shared by the generator, the statistics
//! pipeline and the ADE20K importer.
//!
//! ```text
//! <dir>/<id>.pgm              label mask
//! <dir>/<id>.inst.pgm         instance map
//! <dir>/<id>.part<N>.pgm      part level N (1-based) label mask
//! <dir>/<id>.part<N>.inst.pgm part level N instance map
//! <dir>/scenes.tsv            optional `id<TAB>scene` lines
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{netpbm, InstanceMap, LabelMask, MaskIoError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartLevel {
    pub mask: LabelMask,
    pub instances: InstanceMap,
}

/// One annotated image: object-level mask, instances, and nested part levels.
/// `parts[0]` holds parts of objects, `parts[1]` parts of those parts, and so on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub id: String,
    pub scene: Option<String>,
    pub mask: LabelMask,
    pub instances: InstanceMap,
    pub parts: Vec<PartLevel>,
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> MaskIoError {
    MaskIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, MaskIoError> {
    fs::read(path).map_err(|e| io_err(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), MaskIoError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn with_context<T>(path: &Path, r: Result<T, MaskIoError>) -> Result<T, MaskIoError> {
    r.map_err(|e| match e {
        e @ MaskIoError::Io { .. } => e,
        other => MaskIoError::InFile {
            path: path.to_path_buf(),
            source: Box::new(other),
        },
    })
}

pub fn read_mask_file(path: &Path) -> Result<LabelMask, MaskIoError> {
    with_context(path, netpbm::read_mask(&read_file(path)?))
}

pub fn read_instances_file(path: &Path) -> Result<InstanceMap, MaskIoError> {
    with_context(path, netpbm::read_instances(&read_file(path)?))
}

/// Ids of all annotation records in `dir`, sorted.
pub fn list_ids(dir: &Path) -> Result<Vec<String>, MaskIoError> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(stem) = name.strip_suffix(".pgm") {
            if !stem.contains('.') {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

pub fn read_scenes(dir: &Path) -> Result<BTreeMap<String, String>, MaskIoError> {
    let path = dir.join("scenes.tsv");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
        .map(|(id, scene)| (id.to_string(), scene.to_string()))
        .collect())
}

pub fn read_record(dir: &Path, id: &str, scene: Option<String>) -> Result<AnnotationRecord, MaskIoError> {
    let mask = read_mask_file(&dir.join(format!("{id}.pgm")))?;
    let inst_path = dir.join(format!("{id}.inst.pgm"));
    let instances = if inst_path.exists() {
        read_instances_file(&inst_path)?
    } else {
        InstanceMap::filled(mask.height(), mask.width(), 0)
    };
    let mut parts = Vec::new();
    for level in 1.. {
        let p = dir.join(format!("{id}.part{level}.pgm"));
        if !p.exists() {
            break;
        }
        let mask = read_mask_file(&p)?;
        let ip = dir.join(format!("{id}.part{level}.inst.pgm"));
        let instances = if ip.exists() {
            read_instances_file(&ip)?
        } else {
            InstanceMap::filled(mask.height(), mask.width(), 0)
        };
        parts.push(PartLevel { mask, instances });
    }
    Ok(AnnotationRecord {
        id: id.to_string(),
        scene,
        mask,
        instances,
        parts,
    })
}

/// Reads every record in `dir`, in sorted id order.
pub fn read_corpus(dir: &Path) -> Result<Vec<AnnotationRecord>, MaskIoError> {
    let scenes = read_scenes(dir)?;
    list_ids(dir)?
        .into_iter()
        .map(|id| {
            let scene = scenes.get(&id).cloned();
            read_record(dir, &id, scene)
        })
        .collect()
}

pub fn write_record(dir: &Path, record: &AnnotationRecord) -> Result<(), MaskIoError> {
    let id = &record.id;
    write_file(&dir.join(format!("{id}.pgm")), &netpbm::write_mask(&record.mask))?;
    write_file(
        &dir.join(format!("{id}.inst.pgm")),
        &netpbm::write_instances(&record.instances),
    )?;
    for (i, level) in record.parts.iter().enumerate() {
        let n = i + 1;
        write_file(&dir.join(format!("{id}.part{n}.pgm")), &netpbm::write_mask(&level.mask))?;
        write_file(
            &dir.join(format!("{id}.part{n}.inst.pgm")),
            &netpbm::write_instances(&level.instances),
        )?;
    }
    Ok(())
}

pub fn write_scenes<'a>(dir: &Path, scenes: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<(), MaskIoError> {
    let mut text = String::new();
    for (id, scene) in scenes {
        text.push_str(id);
        text.push('\t');
        text.push_str(scene);
        text.push('\n');
    }
    write_file(&dir.join("scenes.tsv"), text.as_bytes())
}
