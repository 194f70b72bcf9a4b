//! TOML run configuration with environment overrides.

use std::path::{Path, PathBuf};

use argentail::candidates::WindowConfig;
use argentail::dataset::BuilderConfig;
use argentail::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Prefix of override variables: `ARGENTAIL_<SECTION>_<KEY>`.
pub const ENV_PREFIX: &str = "ARGENTAIL_";

const SECTIONS: [&str; 6] = ["pipeline", "entailment", "qasrl", "fill_mask", "phrases", "builder"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub candidate_threshold: f64,
    pub local_verification_threshold: f64,
    pub window_enabled: bool,
    pub window_before: usize,
    pub window_after: usize,
    pub transitivity_expansion: bool,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        PipelineSection {
            candidate_threshold: p.candidate_threshold,
            local_verification_threshold: p.local_verification_threshold,
            window_enabled: p.window.enabled,
            window_before: p.window.sentences_before,
            window_after: p.window.sentences_after,
            transitivity_expansion: p.transitivity_expansion,
        }
    }
}

impl PipelineSection {
    pub fn to_pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            candidate_threshold: self.candidate_threshold,
            local_verification_threshold: self.local_verification_threshold,
            window: if self.window_enabled {
                WindowConfig::new(self.window_before, self.window_after)
            } else {
                WindowConfig::disabled()
            },
            transitivity_expansion: self.transitivity_expansion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentKind {
    /// Classifier NLI model behind an HTTP endpoint.
    #[default]
    Remote,
    /// Instruction-following model answering Yes/No.
    Instruct,
    /// Probe-keyed oracle read from a file.
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntailmentSection {
    pub kind: EntailmentKind,
    pub id: String,
    pub url: String,
    pub timeout_secs: u64,
    pub retries: u32,
    pub batch_size: usize,
    pub max_premise_chars: Option<usize>,
    pub prompt_template: Option<String>,
    /// Oracle entries for the mock backend.
    pub oracle: Option<PathBuf>,
    pub cache: bool,
}

impl Default for EntailmentSection {
    fn default() -> Self {
        EntailmentSection {
            kind: EntailmentKind::default(),
            id: "nli".into(),
            url: String::new(),
            timeout_secs: 60,
            retries: 2,
            batch_size: 16,
            max_premise_chars: None,
            prompt_template: None,
            oracle: None,
            cache: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    None,
    File,
    Remote,
}

/// A backend read from a precomputed file or served over HTTP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub kind: SourceKind,
    pub id: String,
    pub path: Option<PathBuf>,
    pub url: String,
    pub timeout_secs: u64,
    pub retries: u32,
    /// Mask token of a fill-mask model.
    pub mask_token: String,
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection {
            kind: SourceKind::None,
            id: String::new(),
            path: None,
            url: String::new(),
            timeout_secs: 60,
            retries: 2,
            mask_token: "[MASK]".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pipeline: PipelineSection,
    pub entailment: EntailmentSection,
    pub qasrl: SourceSection,
    pub fill_mask: SourceSection,
    pub phrases: SourceSection,
    pub builder: BuilderConfig,
}

fn env_value(raw: &str) -> toml::Value {
    // Reuse TOML literal syntax for numbers and booleans; anything else is a string.
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `ARGENTAIL_<SECTION>_<KEY>` variables to a parsed table.
pub fn apply_env(table: &mut toml::Table, vars: impl IntoIterator<Item = (String, String)>) {
    for (name, raw) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
        let rest = rest.to_ascii_lowercase();
        let Some(section) = SECTIONS.iter().find(|s| rest.starts_with(&format!("{s}_"))) else {
            continue;
        };
        let key = &rest[section.len() + 1..];
        if key.is_empty() {
            continue;
        }
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        if let toml::Value::Table(t) = entry {
            log::info!("config override from {name}");
            t.insert(key.to_string(), env_value(&raw));
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self, CliError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Input(format!("config: {e}")))?;
        apply_env(&mut table, vars);
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Input(format!("config: {e}")))?;
        cfg.pipeline
            .to_pipeline()
            .validate()
            .map_err(|e| CliError::Input(format!("config: {e}")))?;
        cfg.builder
            .validate()
            .map_err(|e| CliError::Input(format!("config: {e}")))?;
        Ok(cfg)
    }

    /// Loads a file, applying process environment overrides and resolving
    /// relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Config::from_toml(&text, std::env::vars())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.entailment.oracle);
        fix(&mut self.qasrl.path);
        fix(&mut self.fill_mask.path);
        fix(&mut self.phrases.path);
    }

    /// Key-sorted JSON form, independent of field order in the file.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_and_sections() {
        let cfg = Config::from_toml("", vars(&[])).unwrap();
        assert_eq!(cfg.pipeline.to_pipeline(), PipelineConfig::default());
        let cfg = Config::from_toml(
            "[pipeline]\ncandidate_threshold = 0.7\nwindow_enabled = false\n[entailment]\nkind = \"mock\"\noracle = \"o.jsonl\"\n",
            vars(&[]),
        )
        .unwrap();
        assert_eq!(cfg.pipeline.to_pipeline().candidate_threshold, 0.7);
        assert!(!cfg.pipeline.to_pipeline().window.enabled);
        assert_eq!(cfg.entailment.kind, EntailmentKind::Mock);
    }

    #[test]
    fn environment_overrides_file_values() {
        let cfg = Config::from_toml(
            "[entailment]\nurl = \"http://file\"\n",
            vars(&[
                ("ARGENTAIL_ENTAILMENT_URL", "http://env:8000/nli"),
                ("ARGENTAIL_PIPELINE_CANDIDATE_THRESHOLD", "0.25"),
                ("ARGENTAIL_FILL_MASK_MASK_TOKEN", "<mask>"),
                ("ARGENTAIL_BUILDER_RNG_SEED", "7"),
                ("UNRELATED", "x"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.entailment.url, "http://env:8000/nli");
        assert_eq!(cfg.pipeline.candidate_threshold, 0.25);
        assert_eq!(cfg.fill_mask.mask_token, "<mask>");
        assert_eq!(cfg.builder.rng_seed, 7);
    }

    #[test]
    fn invalid_values_are_input_errors() {
        assert!(matches!(
            Config::from_toml("[pipeline]\ncandidate_threshold = 2.0\n", vars(&[])),
            Err(CliError::Input(_))
        ));
        assert!(Config::from_toml("[pipeline]\nbogus = 1\n", vars(&[])).is_err());
        assert!(Config::from_toml("[builder]\nswap_fraction = 0.9\n", vars(&[])).is_err());
    }

    #[test]
    fn snapshot_ignores_field_order() {
        let a = Config::from_toml("[pipeline]\ncandidate_threshold = 0.3\nwindow_before = 2\n", vars(&[])).unwrap();
        let b = Config::from_toml("[pipeline]\nwindow_before = 2\ncandidate_threshold = 0.3\n", vars(&[])).unwrap();
        assert_eq!(a.snapshot().to_string(), b.snapshot().to_string());
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut cfg = Config::from_toml("[qasrl]\nkind = \"file\"\npath = \"parses.jsonl\"\n", vars(&[])).unwrap();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.qasrl.path.unwrap(), PathBuf::from("/data/run/parses.jsonl"));
    }
}
