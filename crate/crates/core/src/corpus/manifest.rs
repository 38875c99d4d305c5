use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub utt_id: String,
    /// As written in the file; relative paths resolve against the manifest's directory.
    pub path: String,
    pub label: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn audio_path(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Distinct labels in first-appearance order.
    pub fn labels(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.label.as_str()))
            .map(|e| e.label.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.utt_id, e.path, e.label, e.duration_s));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::Malformed {
        what: "manifest row",
        line,
        reason: reason.into(),
    }
}

/// Parses manifest text; `root` is recorded for resolving relative audio paths.
pub fn parse_manifest(text: &str, root: &Path) -> Result<Manifest> {
    let mut entries = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(malformed(line_no, format!("expected 4 tab-separated columns, found {}", cols.len())));
        }
        let duration_s: f64 = cols[3]
            .trim()
            .parse()
            .map_err(|_| malformed(line_no, format!("duration {:?} is not a number", cols[3])))?;
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(malformed(line_no, format!("duration {duration_s} must be finite and non-negative")));
        }
        if cols[0].is_empty() {
            return Err(malformed(line_no, "empty utt_id"));
        }
        if !ids.insert(cols[0].to_string()) {
            return Err(malformed(line_no, format!("duplicate utt_id {:?}", cols[0])));
        }
        entries.push(ManifestEntry {
            utt_id: cols[0].to_string(),
            path: cols[1].to_string(),
            label: cols[2].to_string(),
            duration_s,
        });
    }
    Ok(Manifest {
        root: root.to_path_buf(),
        entries,
    })
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, &root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_empty_manifest() {
        let m = parse_manifest("", Path::new("/d")).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn short_row_cites_line_number() {
        let mut text = String::new();
        for i in 0..6 {
            text.push_str(&format!("u{i}\tw/u{i}.wav\tA\t1.5\n"));
        }
        text.push_str("u6\tw/u6.wav\tA\n");
        let err = parse_manifest(&text, Path::new("/d")).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 7, .. }), "{err}");
        assert!(err.to_string().contains("line 7"));
    }

    #[test]
    fn rejects_duplicates_and_bad_durations() {
        let dup = "a\tx.wav\tA\t1\na\ty.wav\tB\t2\n";
        assert!(matches!(
            parse_manifest(dup, Path::new("/")).unwrap_err(),
            Error::Malformed { line: 2, .. }
        ));
        let nan = "a\tx.wav\tA\tlong\n";
        assert!(matches!(
            parse_manifest(nan, Path::new("/")).unwrap_err(),
            Error::Malformed { line: 1, .. }
        ));
    }

    #[test]
    fn resolves_relative_paths_against_root() {
        let m = parse_manifest("a\twav/a.wav\tA\t2.5\nb\t/abs/b.wav\tB\t3\n", Path::new("/data")).unwrap();
        assert_eq!(m.audio_path(&m.entries[0]), PathBuf::from("/data/wav/a.wav"));
        assert_eq!(m.audio_path(&m.entries[1]), PathBuf::from("/abs/b.wav"));
        assert_eq!(m.labels(), vec!["A", "B"]);
    }

    #[test]
    fn tsv_round_trips_durations_exactly() {
        let m = Manifest {
            root: PathBuf::from("/r"),
            entries: vec![ManifestEntry {
                utt_id: "x".into(),
                path: "x.wav".into(),
                label: "L".into(),
                duration_s: 7.123456789012345,
            }],
        };
        assert_eq!(parse_manifest(&m.to_tsv(), Path::new("/r")).unwrap(), m);
    }
}
