//! Text (JSON) and binary encodings of [`PureState`].
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! "MMES" | version: u32 | n: u32 | 2^n x (re: f64, im: f64)
//! ```

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::PureState;
use crate::error::{Error, Result};
use crate::Real;

pub const BINARY_MAGIC: [u8; 4] = *b"MMES";
pub const BINARY_VERSION: u32 = 1;
/// Norm tolerance on ingestion; file values may be rounded decimals.
pub const FILE_NORM_TOL: f64 = 1e-9;

#[derive(Serialize, Deserialize)]
struct JsonState {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl<T: Real> PureState<T> {
    pub fn to_json(&self) -> String {
        let doc = JsonState {
            n: self.n,
            amplitudes: self.amps.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect(),
        };
        serde_json::to_string(&doc).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JsonState =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("bad state JSON: {e}")))?;
        if doc.n >= usize::BITS as usize || doc.amplitudes.len() != 1usize << doc.n {
            return Err(Error::Format(format!(
                "{} amplitudes do not match n = {}",
                doc.amplitudes.len(),
                doc.n
            )));
        }
        let amps = doc
            .amplitudes
            .iter()
            .map(|[re, im]| Complex::new(T::of(*re), T::of(*im)))
            .collect();
        ingest(doc.n, amps)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 16 * self.amps.len());
        out.extend_from_slice(&BINARY_MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for z in &self.amps {
            out.extend_from_slice(&z.re.as_f64().to_le_bytes());
            out.extend_from_slice(&z.im.as_f64().to_le_bytes());
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Format(format!("binary state too short ({} bytes)", bytes.len())));
        }
        if bytes[..4] != BINARY_MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != BINARY_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = word(8) as usize;
        if n >= 48 {
            return Err(Error::Format(format!("implausible qubit count {n}")));
        }
        let expected = 12 + 16 * (1usize << n);
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "length {} does not match {expected} bytes for n = {n}",
                bytes.len()
            )));
        }
        let amps = bytes[12..]
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex::new(T::of(re), T::of(im))
            })
            .collect();
        ingest(n, amps)
    }
}

fn ingest<T: Real>(n: usize, amps: Vec<Complex<T>>) -> Result<PureState<T>> {
    PureState::with_tolerance(n, amps, FILE_NORM_TOL.max(T::NORM_TOL)).map_err(|e| match e {
        Error::Validation(msg) | Error::Numerical(msg) => Error::Format(msg),
        other => other,
    })
}
