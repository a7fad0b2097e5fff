use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use synthabd_core::evalmetrics::Hd95Convention;
use synthabd_core::gmmcluster::ClusteringConfig;
use synthabd_core::labelprep::{totalsegmentator_v1, PreprocessConfig, TargetSpec};
use synthabd_core::synthgen::GenerationConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input_dir: Option<PathBuf>,
    pub preprocessed_dir: Option<PathBuf>,
    pub variants_dir: Option<PathBuf>,
    pub synth_dir: Option<PathBuf>,
    pub eval_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleConfig {
    pub output_spacing: [f64; 3],
    pub output_shape: [usize; 3],
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            output_spacing: [1.5; 3],
            output_shape: [300, 300, 250],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub hd95_convention: Hd95Convention,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub resample: ResampleConfig,
    pub labelprep: PreprocessConfig,
    /// Source label catalog, name to id. Empty means the built-in
    /// 104-structure whole-body catalog.
    pub source_labels: IndexMap<String, u32>,
    pub targets: TargetSpec,
    pub clustering: ClusteringConfig,
    pub generation: GenerationConfig,
    pub evaluation: EvaluationConfig,
}

impl PipelineConfig {
    /// Reads the config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: PipelineConfig = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        for p in cfg.paths.all_mut() {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok((cfg, bytes))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in self.paths.all().into_iter().flatten() {
            if !seen.insert(p.clone()) {
                bail!("config paths must be distinct, {} appears twice", p.display());
            }
        }
        if self.resample.output_spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            bail!("resample.output_spacing must be positive");
        }
        if self.resample.output_shape.contains(&0) {
            bail!("resample.output_shape must be positive");
        }
        self.labelprep.validate()?;
        self.clustering.validate()?;
        self.generation.validate()?;
        Ok(())
    }

    pub fn source_catalog(&self) -> Vec<(String, u32)> {
        if self.source_labels.is_empty() {
            totalsegmentator_v1()
        } else {
            self.source_labels.iter().map(|(k, &v)| (k.clone(), v)).collect()
        }
    }
}

impl Paths {
    fn all(&self) -> [&Option<PathBuf>; 6] {
        [
            &self.input_dir,
            &self.preprocessed_dir,
            &self.variants_dir,
            &self.synth_dir,
            &self.eval_dir,
            &self.cache_dir,
        ]
    }

    fn all_mut(&mut self) -> [&mut Option<PathBuf>; 6] {
        [
            &mut self.input_dir,
            &mut self.preprocessed_dir,
            &mut self.variants_dir,
            &mut self.synth_dir,
            &mut self.eval_dir,
            &mut self.cache_dir,
        ]
    }
}

/// Picks the command-line override, else the config path, else fails.
pub fn pick(flag: Option<PathBuf>, cfg: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    match flag.or_else(|| cfg.clone()) {
        Some(p) => Ok(p),
        None => bail!("no {what} given on the command line or in the config"),
    }
}
