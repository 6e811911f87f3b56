//! Import adapter for the public ADE20K release.
//!
//! The release stores, next to each photo `X.jpg`, a segmentation image
//! `X_seg.png` and optional part levels `X_parts_1.png`, `X_parts_2.png`, ...
//! Each segmentation pixel packs the class index as `R / 10 * 256 + G` and an
//! instance tag in `B`. Instance tags are renumbered 1.. in ascending tag order
//! over labeled pixels; unlabeled pixels get instance 0.
//!
//! Records are produced lazily, one image at a time, in lexicographic path order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::corpus::{io_err, AnnotationRecord, PartLevel};
use super::{check_instances, Grid, InstanceMap, LabelMask, MaskIoError};
use crate::taxonomy::LabelId;

const SEG_SUFFIX: &str = "_seg.png";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Strictness {
    /// Stop at the first bad record.
    #[default]
    Abort,
    /// Log the problem and continue with the next record.
    Skip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub enum Split {
    Training,
    Validation,
    Other,
}

impl Split {
    fn from_path(path: &Path) -> Split {
        for comp in path.components() {
            match comp.as_os_str().to_str() {
                Some("training") => return Split::Training,
                Some("validation") => return Split::Validation,
                _ => {}
            }
        }
        Split::Other
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ade20kRecord {
    pub split: Split,
    pub annotation: AnnotationRecord,
}

/// Decodes a packed class/instance RGB raster.
pub fn decode_packed(height: usize, width: usize, rgb: &[u8]) -> Result<(LabelMask, InstanceMap), MaskIoError> {
    if rgb.len() != height * width * 3 {
        return Err(MaskIoError::Shape(format!(
            "{height}x{width} RGB raster needs {} bytes, got {}",
            height * width * 3,
            rgb.len()
        )));
    }
    let mut labels = Vec::with_capacity(height * width);
    let mut tags = Vec::with_capacity(height * width);
    for px in rgb.chunks_exact(3) {
        let class = (px[0] as u16 / 10) * 256 + px[1] as u16;
        labels.push(LabelId(class));
        tags.push(px[2]);
    }
    let mut renumber: BTreeMap<u8, u16> = BTreeMap::new();
    for (l, &t) in labels.iter().zip(&tags) {
        if !l.is_void() {
            renumber.entry(t).or_insert(0);
        }
    }
    for (i, v) in renumber.values_mut().enumerate() {
        *v = i as u16 + 1;
    }
    let instances = labels
        .iter()
        .zip(&tags)
        .map(|(l, t)| if l.is_void() { 0 } else { renumber[t] })
        .collect();
    let mask = Grid::from_vec(height, width, labels)?;
    let instances = Grid::from_vec(height, width, instances)?;
    check_instances(&mask, &instances)?;
    Ok((mask, instances))
}

/// Inverse of [`decode_packed`] for one pixel; used to build fixtures.
pub fn encode_packed_pixel(class: LabelId, tag: u8) -> [u8; 3] {
    let hi = class.0 / 256;
    assert!(hi <= 25, "class {class} does not fit the packed encoding");
    [(hi * 10) as u8, (class.0 % 256) as u8, tag]
}

fn decode_png(path: &Path) -> Result<(LabelMask, InstanceMap), MaskIoError> {
    let img = image::open(path).map_err(|e| MaskIoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    decode_packed(h as usize, w as usize, rgb.as_raw()).map_err(|e| MaskIoError::InFile {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

fn collect_seg_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), MaskIoError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| io_err(dir, err)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_seg_files(&path, out)?;
        } else if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(SEG_SUFFIX))
        {
            out.push(path);
        }
    }
    Ok(())
}

/// Lazily decodes a release tree. Holds at most one image in memory.
pub struct Ade20kImport {
    files: std::vec::IntoIter<PathBuf>,
    strictness: Strictness,
    failed: bool,
    skipped: usize,
}

impl Ade20kImport {
    pub fn scan(root: &Path, strictness: Strictness) -> Result<Self, MaskIoError> {
        let mut files = Vec::new();
        collect_seg_files(root, &mut files)?;
        files.sort();
        Ok(Ade20kImport {
            files: files.into_iter(),
            strictness,
            failed: false,
            skipped: 0,
        })
    }

    /// Number of records dropped so far under [`Strictness::Skip`].
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn load(seg: &Path) -> Result<Ade20kRecord, MaskIoError> {
        let file = seg.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let id = file.trim_end_matches(SEG_SUFFIX).to_string();
        let dir = seg.parent().unwrap_or(Path::new("."));
        let (mask, instances) = decode_png(seg)?;

        let photo = dir.join(format!("{id}.jpg"));
        let (pw, ph) = image::image_dimensions(&photo).map_err(|e| MaskIoError::Decode {
            path: photo.clone(),
            message: e.to_string(),
        })?;
        if (ph as usize, pw as usize) != mask.dims() {
            return Err(MaskIoError::InFile {
                path: seg.to_path_buf(),
                source: Box::new(MaskIoError::Shape(format!(
                    "segmentation is {}x{} but photo is {ph}x{pw}",
                    mask.height(),
                    mask.width()
                ))),
            });
        }

        let mut parts = Vec::new();
        for level in 1.. {
            let p = dir.join(format!("{id}_parts_{level}.png"));
            if !p.exists() {
                break;
            }
            let (pm, pi) = decode_png(&p)?;
            if pm.dims() != mask.dims() {
                return Err(MaskIoError::InFile {
                    path: p,
                    source: Box::new(MaskIoError::Shape("part level dimensions differ from segmentation".into())),
                });
            }
            parts.push(PartLevel { mask: pm, instances: pi });
        }

        let scene = dir.file_name().and_then(|n| n.to_str()).map(str::to_string);
        Ok(Ade20kRecord {
            split: Split::from_path(seg),
            annotation: AnnotationRecord {
                id,
                scene,
                mask,
                instances,
                parts,
            },
        })
    }
}

impl Iterator for Ade20kImport {
    type Item = Result<Ade20kRecord, MaskIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let seg = self.files.next()?;
            match Self::load(&seg) {
                Ok(rec) => return Some(Ok(rec)),
                Err(e) => match self.strictness {
                    Strictness::Abort => {
                        self.failed = true;
                        return Some(Err(e));
                    }
                    Strictness::Skip => {
                        log::warn!("skipping {}: {e}", seg.display());
                        self.skipped += 1;
                    }
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_decoding() {
        let px = [
            encode_packed_pixel(LabelId(2978), 7),
            encode_packed_pixel(LabelId(0), 0),
            encode_packed_pixel(LabelId(5), 3),
            encode_packed_pixel(LabelId(2978), 7),
        ];
        let rgb: Vec<u8> = px.iter().flatten().copied().collect();
        let (mask, inst) = decode_packed(2, 2, &rgb).unwrap();
        assert_eq!(mask.data(), &[LabelId(2978), LabelId(0), LabelId(5), LabelId(2978)]);
        assert_eq!(inst.data(), &[2, 0, 1, 2]);
    }

    #[test]
    fn conflicting_instance_tag_rejected() {
        let px = [encode_packed_pixel(LabelId(1), 4), encode_packed_pixel(LabelId(2), 4)];
        let rgb: Vec<u8> = px.iter().flatten().copied().collect();
        assert!(decode_packed(1, 2, &rgb).is_err());
    }

    #[test]
    fn empty_tree_yields_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut it = Ade20kImport::scan(dir.path(), Strictness::Abort).unwrap();
        assert!(it.next().is_none());
        assert_eq!(it.skipped(), 0);
    }
}
