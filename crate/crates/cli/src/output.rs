//! CSV and metadata emission.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Renders a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes the files of one command into a directory. Files written so far
/// are removed unless [`Emitter::commit`] is called.
#[derive(Debug)]
pub struct Emitter {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Emitter {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        let mut file = fs::File::create(&path)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> io::Result<PathBuf> {
        self.write(name, &table.to_csv())
    }

    /// Keeps the written files.
    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Emitter {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}

/// Sidecar describing how the outputs were produced. The body after the
/// header comments is the resolved configuration, so the file can be passed
/// back as `--config` to reproduce the run.
pub fn metadata(command: &str, resolved_config: &str) -> String {
    format!(
        "# symbiosis {}\n# command = {command}\n{resolved_config}",
        env!("CARGO_PKG_VERSION")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, f64::MIN_POSITIVE, 0.0, 123456789.12345679] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn uncommitted_files_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        let path = {
            let mut e = Emitter::new(dir.path()).unwrap();
            e.write("a.csv", "x\n").unwrap()
        };
        assert!(!path.exists());
        let mut e = Emitter::new(dir.path()).unwrap();
        let kept = e.write("b.csv", "x\n").unwrap();
        e.commit();
        assert!(kept.exists());
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,x\n");
    }
}
