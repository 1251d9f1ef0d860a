//! JSON instance and decomposition files.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which round-trips
//! every `f64` exactly. Unknown fields are rejected.

use std::fs;
use std::io;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter};
use thiserror::Error;

use crate::decomposition::{Decomposition, DecompositionParts};
use crate::equation::{Instance, PointMap};
use crate::linalg::{Pairing, Subspace};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl ToString) -> FileError {
    FileError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    #[serde(rename = "in")]
    pub input: Vec<f64>,
    pub out: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "G_E")]
    pub g_e: Vec<Vec<f64>>,
    #[serde(rename = "G_F")]
    pub g_f: Vec<Vec<f64>>,
    pub f_samples: Vec<SampleRecord>,
    pub g_samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionFile {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "G_E")]
    pub g_e: Vec<Vec<f64>>,
    #[serde(rename = "G_F")]
    pub g_f: Vec<Vec<f64>>,
    #[serde(rename = "L_basis")]
    pub l_basis: Vec<Vec<f64>>,
    #[serde(rename = "M_basis")]
    pub m_basis: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub phi_samples: Vec<SampleRecord>,
    pub psi_samples: Vec<SampleRecord>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn columns_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn records_of(pm: &PointMap) -> Vec<SampleRecord> {
    pm.samples()
        .iter()
        .map(|(x, y)| SampleRecord {
            input: x.iter().copied().collect(),
            out: y.iter().copied().collect(),
        })
        .collect()
}

fn matrix_from_rows(field: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>, FileError> {
    if rows.len() != nrows {
        return Err(invalid(field, format!("expected {nrows} rows, found {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(invalid(
                format!("{field}[{i}]"),
                format!("expected {ncols} entries, found {}", row.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn pairing_from_rows(field: &str, rows: &[Vec<f64>], dim: usize) -> Result<Pairing, FileError> {
    let gram = matrix_from_rows(field, rows, dim, dim)?;
    Pairing::new(gram).map_err(|e| invalid(field, e))
}

fn subspace_from_vectors(field: &str, vectors: &[Vec<f64>], ambient: usize) -> Result<Subspace, FileError> {
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != ambient {
            return Err(invalid(
                format!("{field}[{i}]"),
                format!("expected {ambient} entries, found {}", v.len()),
            ));
        }
    }
    let basis = DMatrix::from_fn(ambient, vectors.len(), |i, j| vectors[j][i]);
    Subspace::from_orthonormal(basis).map_err(|e| invalid(field, e))
}

fn point_map(field: &str, records: &[SampleRecord], domain: usize, codomain: usize) -> Result<PointMap, FileError> {
    for (i, r) in records.iter().enumerate() {
        if r.input.len() != domain {
            return Err(invalid(
                format!("{field}[{i}].in"),
                format!("expected {domain} entries, found {}", r.input.len()),
            ));
        }
        if r.out.len() != codomain {
            return Err(invalid(
                format!("{field}[{i}].out"),
                format!("expected {codomain} entries, found {}", r.out.len()),
            ));
        }
    }
    let samples = records
        .iter()
        .map(|r| (DVector::from_row_slice(&r.input), DVector::from_row_slice(&r.out)))
        .collect();
    PointMap::new(domain, codomain, samples).map_err(|e| invalid(field, e))
}

fn check_header(version: u32, n: usize, m: usize) -> Result<(), FileError> {
    if version != FORMAT_VERSION {
        return Err(invalid("version", format!("unsupported version {version}, expected {FORMAT_VERSION}")));
    }
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if m == 0 {
        return Err(invalid("m", "must be positive"));
    }
    Ok(())
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            version: FORMAT_VERSION,
            n: inst.n(),
            m: inst.m(),
            g_e: rows_of(inst.e_pairing().gram()),
            g_f: rows_of(inst.f_pairing().gram()),
            f_samples: records_of(inst.f()),
            g_samples: records_of(inst.g()),
        }
    }

    pub fn to_instance(&self) -> Result<Instance, FileError> {
        check_header(self.version, self.n, self.m)?;
        let ge = pairing_from_rows("G_E", &self.g_e, self.n)?;
        let gf = pairing_from_rows("G_F", &self.g_f, self.m)?;
        let f = point_map("f_samples", &self.f_samples, self.n, self.m)?;
        let g = point_map("g_samples", &self.g_samples, self.n, self.m)?;
        Instance::new(ge, gf, f, g).map_err(|e| invalid("instance", e))
    }
}

impl DecompositionFile {
    pub fn from_decomposition(dec: &Decomposition) -> Self {
        let p = dec.parts();
        Self {
            version: FORMAT_VERSION,
            n: dec.n(),
            m: dec.m(),
            g_e: rows_of(p.e_pairing.gram()),
            g_f: rows_of(p.f_pairing.gram()),
            l_basis: columns_of(p.image_span.basis()),
            m_basis: columns_of(p.collapsed.basis()),
            a: rows_of(&p.core),
            phi_samples: records_of(&p.primal_section),
            psi_samples: records_of(&p.dual_section),
        }
    }

    pub fn to_decomposition(&self) -> Result<Decomposition, FileError> {
        check_header(self.version, self.n, self.m)?;
        let (n, m) = (self.n, self.m);
        let e_pairing = pairing_from_rows("G_E", &self.g_e, n)?;
        let f_pairing = pairing_from_rows("G_F", &self.g_f, m)?;
        let image_span = subspace_from_vectors("L_basis", &self.l_basis, m)?;
        let collapsed = subspace_from_vectors("M_basis", &self.m_basis, m)?;
        let core = matrix_from_rows("A", &self.a, n, n)?;
        let l = image_span.rank();
        let primal_section = point_map("phi_samples", &self.phi_samples, n, l)?;
        let dual_section = point_map("psi_samples", &self.psi_samples, l, m)?;
        Decomposition::new(DecompositionParts {
            e_pairing,
            f_pairing,
            image_span,
            collapsed,
            core,
            primal_section,
            dual_section,
        })
        .map_err(|e| invalid("decomposition", e))
    }
}

/// Compact JSON with every float at 17 significant digits.
#[derive(Debug, Default, Clone)]
pub struct SigDigits17(CompactFormatter);

impl Formatter for SigDigits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits17::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn instance_to_json(inst: &Instance) -> String {
    to_json(&InstanceFile::from_instance(inst)).expect("instance serializes")
}

pub fn instance_from_json(text: &str) -> Result<Instance, FileError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.to_instance()
}

pub fn decomposition_to_json(dec: &Decomposition) -> String {
    to_json(&DecompositionFile::from_decomposition(dec)).expect("decomposition serializes")
}

pub fn decomposition_from_json(text: &str) -> Result<Decomposition, FileError> {
    let file: DecompositionFile = serde_json::from_str(text)?;
    file.to_decomposition()
}

fn read(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: &Path) -> Result<Instance, FileError> {
    instance_from_json(&read(path)?)
}

pub fn save_instance(path: &Path, inst: &Instance) -> Result<(), FileError> {
    write(path, &instance_to_json(inst))
}

pub fn load_decomposition(path: &Path) -> Result<Decomposition, FileError> {
    decomposition_from_json(&read(path)?)
}

pub fn save_decomposition(path: &Path, dec: &Decomposition) -> Result<(), FileError> {
    write(path, &decomposition_to_json(dec))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = r#"{"version":1,"n":1,"m":1,"G_E":[[1]],"G_F":[[1]],
        "f_samples":[{"in":[1],"out":[1]}],"g_samples":[{"in":[1],"out":[1]}]}"#;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json(&vec![0.1f64, -2.5e-300, 1.0]).unwrap();
        assert_eq!(
            s.trim(),
            "[1.0000000000000001e-1,-2.5000000000000000e-300,1.0000000000000000e0]"
        );
    }

    #[test]
    fn parses_minimal_instance() {
        let inst = instance_from_json(IDENTITY).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.f().len(), 1);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = IDENTITY.replace("\"version\":1", "\"version\":1,\"extra\":0");
        assert!(matches!(instance_from_json(&text), Err(FileError::Json(_))));
    }

    #[test]
    fn rejects_wrong_version() {
        let text = IDENTITY.replace("\"version\":1", "\"version\":2");
        match instance_from_json(&text).unwrap_err() {
            FileError::Invalid { field, .. } => assert_eq!(field, "version"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_offending_sample_field() {
        let text = IDENTITY.replace(r#""out":[1]}],"g_samples""#, r#""out":[1,2]}],"g_samples""#);
        match instance_from_json(&text).unwrap_err() {
            FileError::Invalid { field, .. } => assert_eq!(field, "f_samples[0].out"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_singular_gram() {
        let text = IDENTITY.replace("\"G_E\":[[1]]", "\"G_E\":[[0]]");
        match instance_from_json(&text).unwrap_err() {
            FileError::Invalid { field, .. } => assert_eq!(field, "G_E"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_errors_carry_position() {
        let err = instance_from_json("{\n  \"version\": 1,\n  oops\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }
}
