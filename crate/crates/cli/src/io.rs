//! Matrix and operator-spec documents.
//!
//! A matrix is `{"rows": R, "cols": C, "entries": [[e, ...], ...]}`,
//! row-major, where each entry is a plain number or an `[re, im]` pair.

use antieig_core::linalg::{ComplexMatrix, RealMatrix, C64};
use antieig_core::ou::OuSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Pair([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(re) => C64::new(re, 0.0),
            Entry::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<Entry>>,
}

impl MatrixDoc {
    /// Always written as `[re, im]` pairs.
    pub fn from_complex(m: &ComplexMatrix) -> Self {
        let entries = (0..m.rows()).map(|i| m.row(i).iter().map(|z| Entry::Pair([z.re, z.im])).collect()).collect();
        Self { rows: m.rows(), cols: m.cols(), entries }
    }

    pub fn from_real(m: &RealMatrix) -> Self {
        let entries = (0..m.rows()).map(|i| m.row(i).iter().map(|&x| Entry::Real(x)).collect()).collect();
        Self { rows: m.rows(), cols: m.cols(), entries }
    }

    /// True when every entry was written as a plain number.
    pub fn is_real_form(&self) -> bool {
        self.entries.iter().flatten().all(|e| matches!(e, Entry::Real(_)))
    }

    fn check_shape(&self, what: &str) -> Result<(), CliError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::Usage(format!("{what}: rows and cols must be positive")));
        }
        if self.entries.len() != self.rows {
            return Err(CliError::Usage(format!(
                "{what}: declared {} rows but entries has {}",
                self.rows,
                self.entries.len()
            )));
        }
        if let Some((i, row)) = self.entries.iter().enumerate().find(|(_, r)| r.len() != self.cols) {
            return Err(CliError::Usage(format!(
                "{what}: row {i} has {} entries, expected {}",
                row.len(),
                self.cols
            )));
        }
        Ok(())
    }

    pub fn to_complex(&self, what: &str) -> Result<ComplexMatrix, CliError> {
        self.check_shape(what)?;
        let data = self.entries.iter().flatten().map(|e| e.value()).collect();
        Ok(ComplexMatrix::new(self.rows, self.cols, data)?)
    }

    /// Pairs are accepted only with a zero imaginary part.
    pub fn to_real(&self, what: &str) -> Result<RealMatrix, CliError> {
        self.check_shape(what)?;
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for e in self.entries.iter().flatten() {
            match *e {
                Entry::Real(x) | Entry::Pair([x, 0.0]) => data.push(x),
                Entry::Pair(_) => return Err(CliError::Usage(format!("{what}: must have real entries"))),
            }
        }
        Ok(RealMatrix::new(self.rows, self.cols, data)?)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    #[serde(rename = "A")]
    a: MatrixDoc,
    #[serde(rename = "B")]
    b: MatrixDoc,
    #[serde(rename = "S")]
    s: MatrixDoc,
    d: usize,
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_owned(), source })
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|source| CliError::Json { path: path.to_owned(), source })
}

pub fn parse_matrix_doc(text: &str, origin: &str) -> Result<MatrixDoc, CliError> {
    let doc: MatrixDoc = parse(text, origin)?;
    doc.check_shape(origin)?;
    Ok(doc)
}

pub fn read_matrix_doc(path: &str) -> Result<MatrixDoc, CliError> {
    parse_matrix_doc(&read(path)?, path)
}

pub fn read_matrix(path: &str) -> Result<ComplexMatrix, CliError> {
    read_matrix_doc(path)?.to_complex(path)
}

pub fn parse_spec(text: &str, origin: &str) -> Result<OuSpec, CliError> {
    let doc: SpecDoc = parse(text, origin)?;
    let a = doc.a.to_complex(&format!("{origin}: A"))?;
    let b = doc.b.to_complex(&format!("{origin}: B"))?;
    let s = doc.s.to_real(&format!("{origin}: S"))?;
    Ok(OuSpec::new(a, b, s, doc.d)?)
}

pub fn read_spec(path: &str) -> Result<OuSpec, CliError> {
    parse_spec(&read(path)?, path)
}

/// `[[re, im], ...]` for a complex vector.
pub fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}
