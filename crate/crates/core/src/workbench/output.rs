use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Write via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Tab-separated columns under a `#`-commented metadata header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub meta: Vec<(String, String)>,
    /// `(name, unit)`.
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(title: &str, columns: &[(&str, &str)]) -> Table {
        Table {
            title: title.to_string(),
            meta: Vec::new(),
            columns: columns
                .iter()
                .map(|(n, u)| (n.to_string(), u.to_string()))
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Table {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# title: {}", self.title);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let units: Vec<String> = self
            .columns
            .iter()
            .map(|(n, u)| format!("{n} [{u}]"))
            .collect();
        let _ = writeln!(s, "# columns: {}", units.join(", "));
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(s, "{}", names.join("\t"));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(s, "{}", cells.join("\t"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Functional files read by the run, by path.
    pub functional_hashes: BTreeMap<String, String>,
    pub outputs: Vec<ManifestEntry>,
}

impl RunManifest {
    /// Every listed output exists under `dir` with its recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for e in &self.outputs {
            let p = dir.join(&e.path);
            let bytes = fs::read(&p).map_err(|err| Error::io(&p, err))?;
            if sha256_hex(&bytes) != e.sha256 {
                return Err(Error::Mismatch(format!(
                    "{} does not match its manifest hash",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// Output directory of one command; records what it writes for the manifest.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    command: String,
    config_hash: String,
    started: u64,
    functional_hashes: BTreeMap<String, String>,
    outputs: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunDir {
    pub fn create(root: impl Into<PathBuf>, command: &str, config_text: &str) -> Result<RunDir> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(RunDir {
            root,
            command: command.to_string(),
            config_hash: sha256_hex(config_text.as_bytes()),
            started: unix_now(),
            functional_hashes: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.retain(|e| e.path != name);
        self.outputs.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write(name, table.render().as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Mismatch(e.to_string()))?;
        self.write(name, (text + "\n").as_bytes())
    }

    /// Record an already written file, e.g. a saved functional.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let path = self.root.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.outputs.retain(|e| e.path != name);
        self.outputs.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn note_functional(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.functional_hashes
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Write the manifest last, atomically.
    pub fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command,
            config_hash: self.config_hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started,
            finished_unix: unix_now(),
            functional_hashes: self.functional_hashes,
            outputs: self.outputs,
        };
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Mismatch(e.to_string()))?;
        write_atomic(&self.root.join(MANIFEST_FILE), (text + "\n").as_bytes())?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t =
            Table::new("density profile", &[("site", "index"), ("n", "electrons")]).meta("U", 4.0);
        t.push(vec![0.0, 0.25]);
        t.push(vec![1.0, 1.0 / 3.0]);
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# title: density profile");
        assert_eq!(lines[1], "# U: 4");
        assert_eq!(lines[2], "# columns: site [index], n [electrons]");
        assert_eq!(lines[3], "site\tn");
        let back: f64 = lines[5].split('\t').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn manifest_lists_and_verifies_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path().join("run"), "test", "x = 1").unwrap();
        run.write("a.txt", b"alpha").unwrap();
        run.write("a.txt", b"beta").unwrap();
        run.write_json("b.json", &vec![1, 2]).unwrap();
        let m = run.finish().unwrap();
        assert_eq!(m.outputs.len(), 2);
        let root = dir.path().join("run");
        m.verify(&root).unwrap();
        let on_disk: RunManifest =
            serde_json::from_str(&fs::read_to_string(root.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(on_disk, m);
        assert!(!root.join("manifest.json.tmp").exists());
        fs::write(root.join("a.txt"), "tampered").unwrap();
        assert!(m.verify(&root).is_err());
    }
}
