//! On-disk formats. CSV files start with `#` comment lines carrying the
//! provenance header; JSON files carry the same fields under `meta`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use skinlab_core::{BandModel, CMat, C64};

use crate::config::coeff_map;
use crate::error::{RunError, RunResult};

pub const UNITS: &str = "energies in units of J (J1 for Hatano-Nelson), times in units of 1/J";

/// Provenance shared by every file of one run.
#[derive(Debug, Clone)]
pub struct Header {
    pub experiment: &'static str,
    pub figure: &'static str,
    pub config_sha256: String,
}

impl Header {
    fn lines(&self, what: &str) -> String {
        format!(
            "# skinlab {}\n# experiment: {}\n# figure: {}\n# config_sha256: {}\n# units: {UNITS}\n# {what}\n",
            env!("CARGO_PKG_VERSION"),
            self.experiment,
            self.figure,
            self.config_sha256
        )
    }

    fn meta(&self, what: &str) -> Value {
        json!({
            "tool": "skinlab",
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": self.experiment,
            "figure": self.figure,
            "config_sha256": self.config_sha256,
            "units": UNITS,
            "description": what,
        })
    }
}

/// Accumulates CSV text; numbers use the shortest round-trip form.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &Header, what: &str, columns: &[&str]) -> Self {
        let mut text = header.lines(what);
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv {
            text,
            width: columns.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::F(x) => push_float(&mut self.text, *x),
                Cell::I(x) => write!(self.text, "{x}").unwrap(),
                Cell::S(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Plain notation for moderate magnitudes, exponent notation otherwise;
/// both are the shortest round-trip form.
fn push_float(out: &mut String, x: f64) {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        write!(out, "{x}").unwrap();
    } else {
        write!(out, "{x:e}").unwrap();
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}
impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}
impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { [$($crate::formats::Cell::from($x)),*] };
}

/// One written file as listed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files written so far, in write order.
#[derive(Debug, Default)]
pub struct Writer {
    pub dir: PathBuf,
    pub files: Vec<FileEntry>,
}

impl Writer {
    pub fn new(dir: &Path) -> RunResult<Self> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> RunResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| RunError::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: Csv) -> RunResult<()> {
        self.write(name, &csv.into_string())
    }

    pub fn json(&mut self, name: &str, header: &Header, what: &str, body: Value) -> RunResult<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("meta".into(), header.meta(what));
        match body {
            Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
        text.push('\n');
        self.write(name, &text)
    }
}

/// Dense complex matrix as `{"n", "re", "im"}` with row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let n = m.nrows();
        MatrixJson {
            n,
            re: (0..n).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> RunResult<CMat> {
        let n = self.n;
        let ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(RunError::invalid("matrix", format!("re/im are not {n}x{n}")));
        }
        Ok(CMat::from_fn(n, n, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

/// Band model as `{"h": [[m, re, im], ...], "p": [...], "label"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandModelJson {
    pub h: Vec<[f64; 3]>,
    pub p: Vec<[f64; 3]>,
    pub label: String,
}

impl BandModelJson {
    pub fn from_model(m: &BandModel) -> Self {
        let triples = |c: &std::collections::BTreeMap<i64, C64>| c.iter().map(|(&k, z)| [k as f64, z.re, z.im]).collect();
        BandModelJson {
            h: triples(m.h_coeffs()),
            p: triples(m.p_coeffs()),
            label: m.label().to_string(),
        }
    }

    pub fn to_model(&self) -> RunResult<BandModel> {
        BandModel::new(coeff_map("h", &self.h)?, coeff_map("p", &self.p)?, self.label.clone())
            .map_err(|e| RunError::invalid("model", e.to_string()))
    }
}

/// `(n, m, re, im, abs)` rows over a square block with site labels
/// `first..first+len`.
pub fn density_csv(header: &Header, what: &str, rho: &CMat, first: i64) -> Csv {
    let mut csv = Csv::new(header, what, &["n", "m", "re", "im", "abs"]);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            let z = rho[(i, j)];
            csv.row(&row![first + i as i64, first + j as i64, z.re, z.im, z.norm()]);
        }
    }
    csv
}

/// `(index, re, im)` rows.
pub fn eigenvalue_csv(header: &Header, what: &str, values: &[C64]) -> Csv {
    let mut csv = Csv::new(header, what, &["index", "re", "im"]);
    for (i, z) in values.iter().enumerate() {
        csv.row(&row![i, z.re, z.im]);
    }
    csv
}

/// Density frames as one JSON document.
pub fn frames_json(times: &[f64], frames: &[CMat], first_site: i64) -> Value {
    json!({
        "first_site": first_site,
        "frames": times
            .iter()
            .zip(frames)
            .map(|(t, m)| json!({ "t": t, "rho": MatrixJson::from_matrix(m) }))
            .collect::<Vec<_>>(),
    })
}
