//! `SPKSCR1` score-map files.
//!
//! Layout: the 8-byte magic `SPKSCR1\n`, then `H`, `W`, `C` as little-endian
//! `u32`, then `H*W*C` little-endian IEEE-754 `f32` values, row-major with the
//! channel index fastest.

use super::{MaskIoError, ScoreMap};

pub const SCORE_MAGIC: &[u8; 8] = b"SPKSCR1\n";
const HEADER_LEN: usize = 8 + 12;

pub fn read_scoremap(bytes: &[u8]) -> Result<ScoreMap<f32>, MaskIoError> {
    if bytes.len() < SCORE_MAGIC.len() || &bytes[..8] != SCORE_MAGIC {
        return Err(MaskIoError::Header {
            offset: 0,
            message: "expected magic `SPKSCR1\\n`".into(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(MaskIoError::Truncated {
            offset: bytes.len(),
            expected: 12,
            found: bytes.len() - 8,
        });
    }
    let dim = |i: usize| {
        let o = 8 + 4 * i;
        u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize
    };
    let (h, w, c) = (dim(0), dim(1), dim(2));
    for (i, (v, name)) in [(h, "height"), (w, "width"), (c, "channels")].into_iter().enumerate() {
        if v == 0 {
            return Err(MaskIoError::Header {
                offset: 8 + 4 * i,
                message: format!("{name} must be positive"),
            });
        }
    }
    let need = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(c))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| MaskIoError::Header {
            offset: 8,
            message: "declared score map size overflows".into(),
        })?;
    let end = HEADER_LEN + need;
    if bytes.len() < end {
        return Err(MaskIoError::Truncated {
            offset: bytes.len(),
            expected: need,
            found: bytes.len() - HEADER_LEN,
        });
    }
    if bytes.len() > end {
        return Err(MaskIoError::TrailingBytes {
            offset: end,
            extra: bytes.len() - end,
        });
    }
    let data = bytes[HEADER_LEN..end]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    ScoreMap::new(h, w, c, data)
}

pub fn write_scoremap(map: &ScoreMap<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + map.data().len() * 4);
    out.extend_from_slice(SCORE_MAGIC);
    for d in [map.height(), map.width(), map.channels()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in map.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_round_trip() {
        let m = ScoreMap::new(1, 1, 1, vec![1.0f32]).unwrap();
        let bytes = write_scoremap(&m);
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[20..], &1.0f32.to_le_bytes());
        let back = read_scoremap(&bytes).unwrap();
        assert_eq!(back, m);
        assert!(back.is_normalized());
    }

    #[test]
    fn nan_payload_names_index() {
        let m = ScoreMap::new(1, 2, 2, vec![0.5f32, 0.5, 0.25, 0.75]).unwrap();
        let mut bytes = write_scoremap(&m);
        let off = HEADER_LEN + 4 * 3;
        bytes[off..off + 4].copy_from_slice(&0x7fc0_0000u32.to_le_bytes());
        assert!(matches!(read_scoremap(&bytes), Err(MaskIoError::NonFinite { index: 3 })));
        bytes[off..off + 4].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(read_scoremap(&bytes), Err(MaskIoError::NonFinite { index: 3 })));
    }

    #[test]
    fn truncated_and_trailing() {
        let m = ScoreMap::new(2, 1, 1, vec![0.5f32, 0.25]).unwrap();
        let bytes = write_scoremap(&m);
        assert!(matches!(
            read_scoremap(&bytes[..bytes.len() - 1]),
            Err(MaskIoError::Truncated { offset: 27, expected: 8, found: 7 })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(read_scoremap(&long), Err(MaskIoError::TrailingBytes { offset: 28, extra: 1 })));
        assert!(matches!(read_scoremap(&bytes[..10]), Err(MaskIoError::Truncated { offset: 10, .. })));
        assert!(matches!(read_scoremap(b"SPKSCR2\n"), Err(MaskIoError::Header { offset: 0, .. })));
    }

    #[test]
    fn zero_dimension_rejected() {
        let mut bytes = SCORE_MAGIC.to_vec();
        for d in [1u32, 0, 1] {
            bytes.extend_from_slice(&d.to_le_bytes());
        }
        assert!(matches!(read_scoremap(&bytes), Err(MaskIoError::Header { offset: 12, .. })));
    }
}
