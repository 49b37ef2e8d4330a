//! Binary model format.
//!
//! All multi-byte values are little-endian:
//!
//! ```text
//! magic     4 bytes  "FCDM"
//! version   u32      1
//! K         u32      number of classes
//! n_mesh    u32
//! n_final   u32
//! epsilon   f64
//! scaler    4 × f64  min1, max1, min2, max2
//! labels    K × (u32 byte length, UTF-8 bytes)
//! fields    K × n_mesh² f64, row-major, in label order
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use fourier_classifier::{ClassifierModel, DensityField, FeatureScaler, GridSpec};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"FCDM";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("label is not valid UTF-8")]
    BadLabel,
    #[error("trailing bytes after the last field")]
    TrailingBytes,
    #[error("invalid model: {0}")]
    Invalid(#[from] fourier_classifier::Error),
}

fn u32_of(n: usize, what: &str) -> io::Result<u32> {
    u32::try_from(n).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, format!("{what} too large")))
}

pub fn write_model<W: Write>(model: &ClassifierModel, mut w: W) -> io::Result<()> {
    let s = model.scaler();
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&u32_of(model.n_classes(), "class count")?.to_le_bytes())?;
    w.write_all(&u32_of(model.grid().n_mesh(), "mesh size")?.to_le_bytes())?;
    w.write_all(&u32_of(model.n_final(), "n_final")?.to_le_bytes())?;
    w.write_all(&model.epsilon().to_le_bytes())?;
    for v in [s.min1, s.max1, s.min2, s.max2] {
        w.write_all(&v.to_le_bytes())?;
    }
    for label in model.labels() {
        w.write_all(&u32_of(label.len(), "label")?.to_le_bytes())?;
        w.write_all(label.as_bytes())?;
    }
    let mut buf = Vec::with_capacity(model.grid().len() * 8);
    for field in model.probability_fields() {
        buf.clear();
        for v in field.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()
}

pub fn encode(model: &ClassifierModel) -> Vec<u8> {
    let mut out = Vec::new();
    write_model(model, &mut out).expect("writing to a Vec cannot fail");
    out
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    read_array::<4, _>(r).map(u32::from_le_bytes)
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    read_array::<8, _>(r).map(f64::from_le_bytes)
}

pub fn read_model<R: Read>(mut r: R) -> Result<ClassifierModel, ModelFileError> {
    let magic = read_array::<4, _>(&mut r)?;
    if magic != MAGIC {
        return Err(ModelFileError::BadMagic(magic));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(ModelFileError::UnsupportedVersion(version));
    }
    let k = read_u32(&mut r)? as usize;
    let n_mesh = read_u32(&mut r)? as usize;
    let n_final = read_u32(&mut r)? as usize;
    let epsilon = read_f64(&mut r)?;
    let scaler = FeatureScaler::new(
        read_f64(&mut r)?,
        read_f64(&mut r)?,
        read_f64(&mut r)?,
        read_f64(&mut r)?,
    )?;
    let grid = GridSpec::new(n_mesh)?;
    if k < 2 {
        return Err(fourier_classifier::Error::TooFewClasses(k).into());
    }
    let mut labels = Vec::with_capacity(k);
    for _ in 0..k {
        let len = read_u32(&mut r)? as usize;
        let mut bytes = Vec::new();
        (&mut r).take(len as u64).read_to_end(&mut bytes)?;
        if bytes.len() != len {
            return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into());
        }
        labels.push(String::from_utf8(bytes).map_err(|_| ModelFileError::BadLabel)?);
    }
    let mut fields = Vec::with_capacity(k);
    let mut raw = vec![0u8; grid.len() * 8];
    for _ in 0..k {
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        fields.push(DensityField::from_values(grid, values)?);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(ModelFileError::TrailingBytes);
    }
    Ok(ClassifierModel::new(labels, grid, scaler, n_final, epsilon, fields)?)
}

pub fn save(model: &ClassifierModel, path: &Path) -> io::Result<()> {
    fs::write(path, encode(model))
}

pub fn load(path: &Path) -> Result<ClassifierModel, ModelFileError> {
    read_model(io::BufReader::new(fs::File::open(path)?))
}
