//! File formats for states and operators.
//!
//! JSON files carry complex numbers as `[re, im]` pairs and a `schema` key.
//! Floats are written with shortest round-trip formatting, so reading a file
//! back reproduces every double exactly.
//!
//! Large operators can also be written as a flat little-endian binary: the
//! magic `DQNZ`, a `u32` format version, `u64` rows and cols, then
//! `rows·cols` pairs of `f64` in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{c64, ComplexMatrix, ComplexVector, PureState};

pub const STATE_SCHEMA: &str = "distilcheck.state.v1";
pub const MATRIX_SCHEMA: &str = "distilcheck.matrix.v1";

const BINARY_MAGIC: &[u8; 4] = b"DQNZ";
const BINARY_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateFile {
    pub schema: String,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixFile {
    pub schema: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Row-major entries.
    pub entries: Vec<[f64; 2]>,
}

impl From<&PureState> for StateFile {
    fn from(s: &PureState) -> Self {
        Self {
            schema: STATE_SCHEMA.to_string(),
            dims: s.dims().to_vec(),
            labels: Some(s.labels().to_vec()),
            amplitudes: s.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<StateFile> for PureState {
    type Error = Error;

    fn try_from(f: StateFile) -> Result<Self> {
        if f.schema != STATE_SCHEMA {
            return Err(Error::InvalidParameter(format!("unknown state schema '{}'", f.schema)));
        }
        let amps = ComplexVector::from_iterator(
            f.amplitudes.len(),
            f.amplitudes.iter().map(|&[re, im]| c64(re, im)),
        );
        let state = PureState::new(f.dims, amps)?;
        match f.labels {
            Some(labels) => state.with_labels(labels),
            None => Ok(state),
        }
    }
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix, dims: Option<Vec<usize>>) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            schema: MATRIX_SCHEMA.to_string(),
            rows: m.nrows(),
            cols: m.ncols(),
            dims,
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.schema != MATRIX_SCHEMA {
            return Err(Error::InvalidParameter(format!("unknown matrix schema '{}'", self.schema)));
        }
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                self.entries.len(),
                self.rows,
                self.cols
            )));
        }
        let cols = self.cols;
        Ok(ComplexMatrix::from_fn(self.rows, cols, |r, c| {
            let [re, im] = self.entries[r * cols + c];
            c64(re, im)
        }))
    }
}

pub fn state_to_json(state: &PureState) -> Result<String> {
    Ok(serde_json::to_string_pretty(&StateFile::from(state))?)
}

pub fn state_from_json(text: &str) -> Result<PureState> {
    let f: StateFile = serde_json::from_str(text)?;
    f.try_into()
}

pub fn read_state(path: impl AsRef<Path>) -> Result<PureState> {
    state_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_state(path: impl AsRef<Path>, state: &PureState) -> Result<()> {
    std::fs::write(path, state_to_json(state)?)?;
    Ok(())
}

pub fn matrix_to_json(m: &ComplexMatrix, dims: Option<Vec<usize>>) -> Result<String> {
    Ok(serde_json::to_string(&MatrixFile::from_matrix(m, dims))?)
}

pub fn matrix_from_json(text: &str) -> Result<ComplexMatrix> {
    serde_json::from_str::<MatrixFile>(text)?.to_matrix()
}

pub fn write_matrix_binary<W: Write>(mut w: W, m: &ComplexMatrix) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.ncols());
    for r in 0..m.nrows() {
        buf.clear();
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<ComplexMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::InvalidParameter("not a DQNZ matrix file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != BINARY_VERSION {
        return Err(Error::InvalidParameter(format!("unsupported DQNZ version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    let mut data = vec![0u8; rows * cols * 16];
    r.read_exact(&mut data)?;
    let f = |k: usize| f64::from_le_bytes(data[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        c64(f(k), f(k + 1))
    }))
}
