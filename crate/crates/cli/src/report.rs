//! Artifact files, the manifest, and the human-readable summary.
//!
//! All floats leave through [`fmt12`] (CSV and text) or [`round12`] (JSON), so
//! outputs are locale independent and stable across platforms.

use std::io;
use std::path::{Path, PathBuf};

use fractal_ap::cantor::fmt12;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Overall verdict recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CertificationFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub status: Status,
    pub failures: Vec<String>,
    pub files: Vec<FileRecord>,
}

/// Writes files into one output directory and remembers their hashes.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    files: Vec<FileRecord>,
}

impl Artifacts {
    pub fn create(root: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        std::fs::write(self.root.join(name), bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        self.write(name, to_json(value).as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, csv: Csv) -> io::Result<()> {
        self.write(name, csv.finish().as_bytes())
    }

    /// Writes `manifest.json` listing every file written so far, sorted by path.
    pub fn finish(mut self, command: &str, seed: u64, failures: Vec<String>) -> io::Result<Manifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: "fractal-ap",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            status: if failures.is_empty() {
                Status::Ok
            } else {
                Status::CertificationFailed
            },
            failures,
            files: self.files,
        };
        std::fs::write(self.root.join(MANIFEST), to_json(&manifest))?;
        Ok(manifest)
    }
}

/// Rounds `x` to twelve significant digits.
pub fn round12(x: f64) -> f64 {
    fmt12(x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to twelve significant digits.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("artifact types serialize");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

/// Comma-separated rows under a fixed header.
#[derive(Debug, Clone)]
pub struct Csv {
    width: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            width: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt12(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                Cell::Int(v as i128)
            }
        }
    )*};
}
int_cell!(u32, u64, i64, usize);

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// `row![a, b, c]` converts each field into a [`Cell`].
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { &[$($crate::report::Cell::from($x)),*] };
}

/// Lines of the human-readable report, in the order they are added.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    lines: Vec<String>,
}

impl Summary {
    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn heading(&mut self, s: &str) {
        if !self.lines.is_empty() {
            self.lines.push(String::new());
        }
        self.lines.push(format!("== {s} =="));
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

pub fn lambda_line(value: f64, tail: f64, certified: bool) -> String {
    if certified {
        format!("Λ > 0 certified (value {}, tail {})", fmt12(value), fmt12(tail))
    } else {
        format!("Λ > 0 not certified (value {}, tail {})", fmt12(value), fmt12(tail))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_have_twelve_digits() {
        let s = to_json(&serde_json::json!({"x": std::f64::consts::PI, "n": 3, "v": [1e-20 / 3.0]}));
        assert!(s.contains("\"x\": 3.14159265359"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("3.33333333333e-21"), "{s}");
    }

    #[test]
    fn csv_rows() {
        let mut c = Csv::new(&["k", "re", "tag"]);
        c.row(row![3u64, 0.1 + 0.2, "x"]);
        c.row(row![-1i64, 2.0, "y"]);
        assert_eq!(c.finish(), "k,re,tag\n3,0.3,x\n-1,2,y\n");
    }

    #[test]
    fn manifest_lists_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::create(dir.path()).unwrap();
        a.write("b.txt", b"abc").unwrap();
        a.write("a.txt", b"").unwrap();
        let m = a.finish("test", 1, vec![]).unwrap();
        assert_eq!(m.status, Status::Ok);
        assert_eq!(m.files[0].path, "a.txt");
        assert_eq!(
            m.files[1].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(dir.path().join(MANIFEST).exists());
    }

    #[test]
    fn lambda_wording() {
        assert_eq!(lambda_line(0.5, 0.125, true), "Λ > 0 certified (value 0.5, tail 0.125)");
        assert!(lambda_line(0.1, 0.2, false).contains("not certified"));
    }
}
