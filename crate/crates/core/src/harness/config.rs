use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::template::TemplateId;
use crate::engine::DecodeMode;
use crate::error::{Error, Result};
use crate::metrics::CostModel;

/// How generation time is obtained for the token-rate columns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    /// Cost-model time in target-run units: one per target run plus `cost_c`
    /// per draft run. Reproducible, so reports are byte-stable.
    #[default]
    Simulated,
    /// Monotonic wall clock around each generation.
    Measured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target_model: PathBuf,
    pub draft_model: PathBuf,
    /// Condition the draft on the image context too.
    #[serde(default)]
    pub draft_uses_image: bool,
    pub gammas: Vec<usize>,
    pub mode: DecodeMode,
    pub max_new_tokens: usize,
    pub seed: u64,
    pub dataset: PathBuf,
    pub template: TemplateId,
    pub cost_c: f64,
    #[serde(default = "default_true")]
    pub stop_on_eos: bool,
    #[serde(default)]
    pub timing: Timing,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::json(format!("config {}", path.display()), e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.target_model, &mut cfg.draft_model, &mut cfg.dataset] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn cost(&self) -> Result<CostModel> {
        CostModel::new(self.cost_c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::InvalidConfig("gammas must not be empty".into()));
        }
        if self.gammas.contains(&0) {
            return Err(Error::InvalidConfig("every gamma must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::InvalidConfig("max_new_tokens must be at least 1".into()));
        }
        self.cost()?;
        for (name, p) in
            [("target_model", &self.target_model), ("draft_model", &self.draft_model), ("dataset", &self.dataset)]
        {
            if !p.is_file() {
                return Err(Error::InvalidConfig(format!("{name} {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"target_model": "t.json", "draft_model": "d.json", "gammas": [3, 5],
        "mode": "greedy", "max_new_tokens": 64, "seed": 1, "dataset": "p.jsonl",
        "template": "coco", "cost_c": 0.0164}"#;

    #[test]
    fn parse_and_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, BASE).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.target_model, dir.path().join("t.json"));
        assert_eq!(cfg.template, TemplateId::Coco);
        assert!(cfg.stop_on_eos);
        assert_eq!(cfg.timing, Timing::Simulated);
        assert!(!cfg.draft_uses_image);
        // Files are missing.
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        for f in ["t.json", "d.json", "p.jsonl"] {
            fs::write(dir.path().join(f), "").unwrap();
        }
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["t.json", "d.json", "p.jsonl"] {
            fs::write(dir.path().join(f), "").unwrap();
        }
        let path = dir.path().join("cfg.json");
        fs::write(&path, BASE).unwrap();
        let good = ExperimentConfig::load(&path).unwrap();
        let bad = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = good.clone();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(&|c| c.gammas.clear()));
        assert!(bad(&|c| c.gammas.push(0)));
        assert!(bad(&|c| c.max_new_tokens = 0));
        assert!(bad(&|c| c.cost_c = 0.0));
        fs::write(&path, BASE.replace("coco", "vqa")).unwrap();
        assert!(ExperimentConfig::load(&path).is_err());
    }
}
