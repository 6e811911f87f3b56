//! Binary netpbm rasters: 16-bit `P5` for masks and 8-bit `P6` for photos.
//!
//! Writers emit the canonical header `P5\n<W> <H>\n65535\n` (resp. `P6`, `255`).
//! Readers accept any whitespace and `#` comments in the header, but the sample
//! payload must match the declared size exactly: short payloads and trailing
//! bytes are both errors.

use super::{BinaryMask, Grid, InstanceMap, LabelMask, MaskIoError, RgbImage};
use crate::taxonomy::LabelId;

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    maxval_offset: usize,
    /// Offset of the first payload byte.
    payload: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<(usize, u64), MaskIoError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(MaskIoError::Header {
                offset: start,
                message: format!("expected {what}"),
            });
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let value = text.parse::<u64>().map_err(|_| MaskIoError::Header {
            offset: start,
            message: format!("{what} `{text}` out of range"),
        })?;
        Ok((start, value))
    }
}

fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<Header, MaskIoError> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(MaskIoError::Header {
            offset: 0,
            message: format!("expected magic `{}`", String::from_utf8_lossy(magic)),
        });
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if cur.pos >= bytes.len() || !(bytes[cur.pos].is_ascii_whitespace() || bytes[cur.pos] == b'#') {
        return Err(MaskIoError::Header {
            offset: cur.pos,
            message: "expected whitespace after magic".into(),
        });
    }
    let (woff, width) = cur.number("width")?;
    let (hoff, height) = cur.number("height")?;
    let (moff, maxval) = cur.number("maxval")?;
    if width == 0 {
        return Err(MaskIoError::Header { offset: woff, message: "width must be positive".into() });
    }
    if height == 0 {
        return Err(MaskIoError::Header { offset: hoff, message: "height must be positive".into() });
    }
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(MaskIoError::Header {
            offset: cur.pos,
            message: "expected a single whitespace byte before the payload".into(),
        });
    }
    let maxval = u32::try_from(maxval).map_err(|_| MaskIoError::MaxVal { offset: moff, found: u32::MAX })?;
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval,
        maxval_offset: moff,
        payload: cur.pos + 1,
    })
}

fn payload<'a>(bytes: &'a [u8], header: &Header, sample_bytes: usize) -> Result<&'a [u8], MaskIoError> {
    let need = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(sample_bytes))
        .ok_or_else(|| MaskIoError::Header {
            offset: header.payload,
            message: "declared raster size overflows".into(),
        })?;
    let end = header.payload + need;
    if bytes.len() < end {
        return Err(MaskIoError::Truncated {
            offset: bytes.len(),
            expected: need,
            found: bytes.len() - header.payload,
        });
    }
    if bytes.len() > end {
        return Err(MaskIoError::TrailingBytes {
            offset: end,
            extra: bytes.len() - end,
        });
    }
    Ok(&bytes[header.payload..end])
}

/// Decodes a `P5` raster with maxval 65535 into raw big-endian samples.
pub fn read_gray16(bytes: &[u8]) -> Result<Grid<u16>, MaskIoError> {
    let header = parse_header(bytes, b"P5")?;
    if header.maxval != 65535 {
        return Err(MaskIoError::MaxVal {
            offset: header.maxval_offset,
            found: header.maxval,
        });
    }
    let raw = payload(bytes, &header, 2)?;
    let data = raw
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Grid::from_vec(header.height, header.width, data)
}

pub fn write_gray16(grid: &Grid<u16>) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", grid.width(), grid.height());
    let mut out = Vec::with_capacity(header.len() + grid.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for &v in grid.data() {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn read_mask(bytes: &[u8]) -> Result<LabelMask, MaskIoError> {
    Ok(read_gray16(bytes)?.map(LabelId))
}

pub fn write_mask(mask: &LabelMask) -> Vec<u8> {
    write_gray16(&mask.map(|l| l.0))
}

/// Reads a mask and checks every id against the dictionary size.
pub fn read_mask_checked(bytes: &[u8], id_space: usize) -> Result<LabelMask, MaskIoError> {
    let mask = read_mask(bytes)?;
    if let Some((index, &label)) = mask
        .data()
        .iter()
        .enumerate()
        .find(|(_, l)| l.index() >= id_space)
    {
        return Err(MaskIoError::LabelOutOfRange {
            index,
            label,
            limit: id_space,
        });
    }
    Ok(mask)
}

pub fn read_instances(bytes: &[u8]) -> Result<InstanceMap, MaskIoError> {
    read_gray16(bytes)
}

pub fn write_instances(map: &InstanceMap) -> Vec<u8> {
    write_gray16(map)
}

/// Binary masks are stored as PGM16 with samples in {0, 65535}.
pub fn read_binary(bytes: &[u8]) -> Result<BinaryMask, MaskIoError> {
    let grid = read_gray16(bytes)?;
    if let Some((index, &v)) = grid.data().iter().enumerate().find(|(_, &v)| v != 0 && v != 65535) {
        return Err(MaskIoError::Invariant(format!(
            "binary mask sample {index} is {v}, expected 0 or 65535"
        )));
    }
    Ok(grid.map(|v| v == 65535))
}

pub fn write_binary(mask: &BinaryMask) -> Vec<u8> {
    write_gray16(&mask.map(|b| if b { 65535 } else { 0 }))
}

pub fn read_ppm(bytes: &[u8]) -> Result<RgbImage, MaskIoError> {
    let header = parse_header(bytes, b"P6")?;
    if header.maxval != 255 {
        return Err(MaskIoError::MaxVal {
            offset: header.maxval_offset,
            found: header.maxval,
        });
    }
    let raw = payload(bytes, &header, 3)?;
    let data = raw.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    RgbImage::new(header.height, header.width, data)
}

pub fn write_ppm(image: &RgbImage) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.pixels().len() * 3);
    out.extend_from_slice(header.as_bytes());
    for px in image.pixels() {
        out.extend_from_slice(px);
    }
    out
}
