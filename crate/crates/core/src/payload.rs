//! The FSCR score-payload wire format.
//!
//! Layout, all little-endian:
//!   magic "FSCR" (4 bytes), version u16, rows u32, cols u16,
//!   then cols x u8 label-space column indices,
//!   then zero padding to the next 4-byte boundary,
//!   then rows*cols f32 values in row-major order.
//!
//! Scores travel as f32; decoding widens back to f64 exactly, so a round
//! trip equals f32 quantization of the original matrix.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::score::ScoreMatrix;

pub const PAYLOAD_MAGIC: [u8; 4] = *b"FSCR";
pub const PAYLOAD_VERSION: u16 = 1;

/// Fixed header bytes before the column list.
const FIXED_HEADER: usize = 4 + 2 + 4 + 2;

fn padded_header(cols: usize) -> usize {
    (FIXED_HEADER + cols).next_multiple_of(4)
}

/// Exact encoded size for a rows x cols matrix.
pub fn score_payload_len(rows: usize, cols: usize) -> usize {
    padded_header(cols) + rows * cols * 4
}

/// Bytes to ship a model instead: 4 bytes (f32) per parameter, mirroring the
/// score encoding for a like-for-like comparison.
pub fn weight_payload_len(param_count: usize) -> usize {
    4 * param_count
}

pub fn encode_score_payload(scores: &ScoreMatrix) -> Vec<u8> {
    let rows = scores.rows();
    let cols = scores.cols();
    debug_assert!(rows <= u32::MAX as usize);
    debug_assert!(cols.len() <= u16::MAX as usize);
    debug_assert!(cols.iter().all(|&c| c < 256), "label space fits in a byte");

    let mut out = Vec::with_capacity(score_payload_len(rows, cols.len()));
    out.extend_from_slice(&PAYLOAD_MAGIC);
    out.extend_from_slice(&PAYLOAD_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols.len() as u16).to_le_bytes());
    for &c in cols {
        out.push(c as u8);
    }
    out.resize(padded_header(cols.len()), 0);
    for v in scores.values().iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_score_payload(bytes: &[u8]) -> Result<ScoreMatrix> {
    let err = |reason: &str| Error::Payload(reason.to_string());
    if bytes.len() < FIXED_HEADER {
        return Err(err("truncated header"));
    }
    if bytes[0..4] != PAYLOAD_MAGIC {
        return Err(err("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != PAYLOAD_VERSION {
        return Err(Error::Payload(format!("unsupported version {version}")));
    }
    let rows = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    let n_cols = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
    let expected = score_payload_len(rows, n_cols);
    if bytes.len() != expected {
        return Err(Error::Payload(format!(
            "expected {expected} bytes for {rows}x{n_cols}, got {}",
            bytes.len()
        )));
    }
    let cols: Vec<usize> = bytes[FIXED_HEADER..FIXED_HEADER + n_cols]
        .iter()
        .map(|&b| b as usize)
        .collect();
    if bytes[FIXED_HEADER + n_cols..padded_header(n_cols)]
        .iter()
        .any(|&b| b != 0)
    {
        return Err(err("nonzero padding"));
    }
    let mut values = Vec::with_capacity(rows * n_cols);
    for chunk in bytes[padded_header(n_cols)..].chunks_exact(4) {
        values.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64);
    }
    let values = Array2::from_shape_vec((rows, n_cols), values)
        .map_err(|e| Error::Payload(e.to_string()))?;
    ScoreMatrix::new(cols, values)
}

/// Quantize through f32 the way the wire does, staying in f64 storage.
pub fn quantize_f32(scores: &ScoreMatrix) -> ScoreMatrix {
    let values = scores.values().mapv(|v| v as f32 as f64);
    ScoreMatrix::new(scores.cols().to_vec(), values).expect("quantization keeps shape")
}

/// What one round's upload costs: shipping the updated scores versus
/// shipping the trained model's weights, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadAccount {
    pub score_payload_bytes: usize,
    pub weight_payload_bytes: usize,
    pub ratio: f64,
}

impl PayloadAccount {
    pub fn new(updated: &ScoreMatrix, param_count: usize) -> Self {
        let score_payload_bytes = encode_score_payload(updated).len();
        let weight_payload_bytes = weight_payload_len(param_count);
        debug_assert!(score_payload_bytes > 0 && weight_payload_bytes > 0);
        Self {
            score_payload_bytes,
            weight_payload_bytes,
            ratio: score_payload_bytes as f64 / weight_payload_bytes as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn payload_size_follows_the_layout_arithmetic() {
        // 2000 x 2: fixed header 12, column list 2, pad 2, data 16000.
        assert_eq!(score_payload_len(2000, 2), 12 + 2 + 2 + 2000 * 2 * 4);
        assert_eq!(score_payload_len(2000, 2), 16016);
        // 4-column list ends on a boundary: no pad.
        assert_eq!(score_payload_len(10, 4), 16 + 160);
    }

    #[test]
    fn encode_decode_round_trips_through_f32() {
        let s = ScoreMatrix::new(
            vec![1, 3],
            array![[0.1, 0.9123456789], [1.0 / 3.0, -2.5e-5]],
        )
        .unwrap();
        let bytes = encode_score_payload(&s);
        assert_eq!(bytes.len(), score_payload_len(2, 2));
        let back = decode_score_payload(&bytes).unwrap();
        assert_eq!(back, quantize_f32(&s));
        assert_eq!(back.cols(), &[1, 3]);
    }

    #[test]
    fn corrupt_payloads_are_rejected() {
        let s = ScoreMatrix::new(vec![0], array![[0.5], [0.25]]).unwrap();
        let good = encode_score_payload(&s);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(decode_score_payload(&bad_magic).is_err());

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(decode_score_payload(&bad_version).is_err());

        let truncated = &good[..good.len() - 1];
        assert!(decode_score_payload(truncated).is_err());

        let mut bad_pad = good.clone();
        bad_pad[13] = 1; // inside the 3-byte pad after a 1-column list
        assert!(decode_score_payload(&bad_pad).is_err());
    }
}
