//! Dataset manifests: CSV with header `path,label,split`, preceded by a
//! `# tracenorm manifest v1` comment line. Relative paths resolve against
//! the manifest's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
const VERSION_PREFIX: &str = "# tracenorm manifest v";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::format(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub path: PathBuf,
    pub label: f64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Self {
        Self { version: MANIFEST_VERSION, entries, base_dir: base_dir.into() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let version = match text.lines().next() {
            Some(first) if first.starts_with(VERSION_PREFIX) => first[VERSION_PREFIX.len()..]
                .trim()
                .parse()
                .map_err(|_| Error::format(format!("bad manifest version line {first:?}")))?,
            _ => MANIFEST_VERSION,
        };
        if version != MANIFEST_VERSION {
            return Err(Error::format(format!("unsupported manifest version {version}")));
        }
        let mut reader =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "label", "split"] {
            return Err(Error::format(format!(
                "manifest header must be path,label,split, got {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let label: f64 = record[1]
                .parse()
                .map_err(|_| Error::format(format!("row {row}: bad label {:?}", &record[1])))?;
            if label != 1.0 && label != -1.0 {
                return Err(Error::format(format!("row {row}: label must be -1 or 1, got {label}")));
            }
            entries.push(ManifestEntry { path: PathBuf::from(&record[0]), label, split: record[2].parse()? });
        }
        Ok(Self { version, entries, base_dir: base_dir.into() })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{VERSION_PREFIX}{}\npath,label,split\n", self.version);
        for e in &self.entries {
            let label = if e.label > 0.0 { "1" } else { "-1" };
            out.push_str(&format!("{},{},{}\n", e.path.display(), label, e.split));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Requires at least one train and one test entry.
    pub fn require_both_splits(&self) -> Result<()> {
        if self.split(Split::Train).next().is_none() {
            return Err(Error::Empty("train split"));
        }
        if self.split(Split::Test).next().is_none() {
            return Err(Error::Empty("test split"));
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::format(format!("manifest: {e}"))
}
