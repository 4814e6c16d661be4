//! Versioned plain-text container for trained pipelines.
//!
//! ```text
//! #neuroeval-model v1
//! construct workload
//! scalar fs 512
//! matrix lda_w 1 3
//! 0.5 -1 2
//! ```
//!
//! Matrices are written as a `matrix <name> <rows> <cols>` header followed by
//! one line per row. Floats use the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MODEL_MAGIC: &str = "#neuroeval-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Construct {
    Workload,
    Attention,
    Error,
}

impl Construct {
    pub const ALL: [Construct; 3] = [Construct::Workload, Construct::Attention, Construct::Error];

    pub fn as_str(self) -> &'static str {
        match self {
            Construct::Workload => "workload",
            Construct::Attention => "attention",
            Construct::Error => "error",
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Construct {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Construct::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid("construct", format!("unknown construct {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub version: u32,
    pub construct: Construct,
    pub scalars: BTreeMap<String, f64>,
    pub matrices: BTreeMap<String, DMatrix<f64>>,
}

impl ModelFile {
    pub fn new(construct: Construct) -> Self {
        Self {
            version: MODEL_VERSION,
            construct,
            scalars: BTreeMap::new(),
            matrices: BTreeMap::new(),
        }
    }

    pub fn set_scalar(&mut self, name: &str, v: f64) {
        self.scalars.insert(name.to_owned(), v);
    }

    pub fn set_matrix(&mut self, name: &str, m: DMatrix<f64>) {
        self.matrices.insert(name.to_owned(), m);
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        self.scalars
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid("model file", format!("missing scalar {name}")))
    }

    pub fn matrix(&self, name: &str) -> Result<&DMatrix<f64>> {
        self.matrices
            .get(name)
            .ok_or_else(|| Error::invalid("model file", format!("missing matrix {name}")))
    }

    /// Fetches a matrix and checks its shape.
    pub fn matrix_shaped(&self, name: &str, rows: usize, cols: usize) -> Result<&DMatrix<f64>> {
        let m = self.matrix(name)?;
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::invalid(
                "model file",
                format!(
                    "matrix {name} is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                ),
            ));
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_MAGIC} v{}", self.version);
        let _ = writeln!(s, "construct {}", self.construct);
        for (k, v) in &self.scalars {
            let _ = writeln!(s, "scalar {k} {v:?}");
        }
        for (k, m) in &self.matrices {
            let _ = writeln!(s, "matrix {k} {} {}", m.nrows(), m.ncols());
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    if c > 0 {
                        s.push(' ');
                    }
                    let _ = write!(s, "{:?}", m[(r, c)]);
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or((1, "empty model file".to_string()))?;
        let version = header
            .strip_prefix(MODEL_MAGIC)
            .and_then(|r| r.trim().strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or((1, format!("missing {MODEL_MAGIC} header")))?;
        if version != MODEL_VERSION {
            return Err((1, format!("unsupported model version {version}")));
        }
        let mut construct = None;
        let mut scalars = BTreeMap::new();
        let mut matrices = BTreeMap::new();
        while let Some((no, line)) = lines.next() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [] => continue,
                ["construct", name] => {
                    construct = Some(name.parse::<Construct>().map_err(|e| (no, e.to_string()))?)
                }
                ["scalar", name, value] => {
                    let v = value
                        .parse::<f64>()
                        .map_err(|_| (no, format!("bad scalar {value:?}")))?;
                    scalars.insert((*name).to_owned(), v);
                }
                ["matrix", name, rows, cols] => {
                    let rows: usize = rows.parse().map_err(|_| (no, "bad row count".to_string()))?;
                    let cols: usize = cols.parse().map_err(|_| (no, "bad column count".to_string()))?;
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (rno, row) = lines
                            .next()
                            .ok_or((no, format!("matrix {name}: missing rows")))?;
                        let vals: std::result::Result<Vec<f64>, _> =
                            row.split_whitespace().map(str::parse::<f64>).collect();
                        let vals = vals.map_err(|_| (rno, "bad matrix value".to_string()))?;
                        if vals.len() != cols {
                            return Err((
                                rno,
                                format!("matrix {name}: expected {cols} values, found {}", vals.len()),
                            ));
                        }
                        data.extend(vals);
                    }
                    matrices.insert((*name).to_owned(), DMatrix::from_row_slice(rows, cols, &data));
                }
                _ => return Err((no, format!("unrecognized line {line:?}"))),
            }
        }
        Ok(Self {
            version,
            construct: construct.ok_or((1, "missing construct line".to_string()))?,
            scalars,
            matrices,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }
}
