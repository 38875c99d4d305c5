use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::Metrics;
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "eval_report.json";
pub const PROJECTION_FILE: &str = "projection.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    pub purity: f64,
    pub probe_accuracy_base: f64,
    pub probe_accuracy_augmented: f64,
    pub projection_path: PathBuf,
}

impl EvalReport {
    pub fn new(m: Metrics, projection_path: PathBuf) -> Self {
        Self {
            auc: m.auc,
            purity: m.purity,
            probe_accuracy_base: m.probe_accuracy_base,
            probe_accuracy_augmented: m.probe_accuracy_augmented,
            projection_path,
        }
    }

    pub fn metrics_in_unit_interval(&self) -> bool {
        [self.auc, self.purity, self.probe_accuracy_base, self.probe_accuracy_augmented]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }

    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = json!({
            "auc": self.auc,
            "purity": self.purity,
            "probe_accuracy_base": self.probe_accuracy_base,
            "probe_accuracy_augmented": self.probe_accuracy_augmented,
            "projection_path": self.projection_path.to_string_lossy(),
        });
        let mut text = serde_json::to_string_pretty(&value).expect("plain values serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let value: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let num = |key: &str| {
            value
                .get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| bad(format!("missing numeric field {key}")))
        };
        let projection_path = value
            .get("projection_path")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing projection_path".into()))?;
        Ok(Self {
            auc: num("auc")?,
            purity: num("purity")?,
            probe_accuracy_base: num("probe_accuracy_base")?,
            probe_accuracy_augmented: num("probe_accuracy_augmented")?,
            projection_path: PathBuf::from(projection_path),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_has_all_five_fields() {
        let r = EvalReport {
            auc: 0.93,
            purity: 0.8125,
            probe_accuracy_base: 0.5,
            probe_accuracy_augmented: 0.75,
            projection_path: PathBuf::from("out/projection.csv"),
        };
        let text = r.to_json();
        for key in ["auc", "purity", "probe_accuracy_base", "probe_accuracy_augmented", "projection_path"] {
            assert!(text.contains(&format!("\"{key}\"")), "{key}");
        }
        assert_eq!(EvalReport::from_json(&text, Path::new("r")).unwrap(), r);
        assert!(r.metrics_in_unit_interval());
        assert!(EvalReport::from_json("{\"auc\": 1}", Path::new("r")).is_err());
    }
}
