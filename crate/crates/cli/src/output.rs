//! Output staging: files are written into a temporary directory inside the
//! output directory and only moved into place once the whole run succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use crate::Failure;

pub struct Staging {
    dir: TempDir,
    out: PathBuf,
    files: Vec<String>,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(out).map_err(|e| Failure::Config(format!("cannot create {}: {e}", out.display())))?;
        let dir = tempfile::Builder::new()
            .prefix(".spinwave-staging-")
            .tempdir_in(out)
            .map_err(|e| Failure::Config(format!("cannot stage outputs in {}: {e}", out.display())))?;
        Ok(Self { dir, out: out.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), Failure> {
        if self.files.iter().any(|f| f == name) {
            return Err(Failure::Config(format!("output `{name}` written twice")));
        }
        fs::write(self.dir.path().join(name), contents)
            .map_err(|e| Failure::Config(format!("cannot write {name}: {e}")))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(v).expect("JSON values always serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Moves every staged file into the output directory.
    pub fn commit(self) -> Result<Vec<PathBuf>, Failure> {
        let mut done = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let target = self.out.join(name);
            fs::rename(self.dir.path().join(name), &target)
                .map_err(|e| Failure::Config(format!("cannot move {name} into place: {e}")))?;
            done.push(target);
        }
        Ok(done)
    }
}

/// Comma-separated table with a header row. Floats use the shortest
/// representation that round-trips.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{v:e}");
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// `name.ext` or `name_007.ext` inside a sweep.
pub fn numbered(name: &str, index: Option<usize>) -> String {
    match (index, name.rsplit_once('.')) {
        (None, _) => name.to_string(),
        (Some(i), Some((stem, ext))) => format!("{stem}_{i:03}.{ext}"),
        (Some(i), None) => format!("{name}_{i:03}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbering() {
        assert_eq!(numbered("g2.csv", None), "g2.csv");
        assert_eq!(numbered("g2.csv", Some(4)), "g2_004.csv");
    }

    #[test]
    fn dropped_staging_leaves_nothing() {
        let out = tempfile::tempdir().unwrap();
        {
            let mut s = Staging::new(out.path()).unwrap();
            s.write("a.csv", b"x\n").unwrap();
        }
        assert_eq!(fs::read_dir(out.path()).unwrap().count(), 0);
        let mut s = Staging::new(out.path()).unwrap();
        s.write("a.csv", b"x\n").unwrap();
        s.commit().unwrap();
        assert_eq!(fs::read_to_string(out.path().join("a.csv")).unwrap(), "x\n");
    }

    #[test]
    fn csv_floats_round_trip() {
        let mut c = Csv::new(&["t", "re"]);
        c.row(&[0.1, -2.5e-300]);
        let text = String::from_utf8(c.into_bytes()).unwrap();
        let last: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last, vec![0.1, -2.5e-300]);
    }
}
