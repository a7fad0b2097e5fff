//! Intensity clustering of CT label maps into generation-only labels.
//!
//! Background voxels are split into `k_bg` intensity clusters and every
//! labelled segment into `k_fg` sub-labels, each with its own univariate
//! mixture fitted by EM. The minted labels get fresh ids above the organ
//! range and a [`LabelMapping`] that sends them back to their parent target,
//! so mapping an augmented map always reproduces the original target
//! segmentation.

mod gmm;
mod variants;

pub use gmm::{fit_gmm_em, GmmModel};
pub use variants::{
    generate_variants, read_variant_dir, write_variant, Provenance, Subject, Variant,
    VariantSidecar,
};

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelprep::LabelMapping;
use crate::seed;
use crate::volio::{ImageVolume, LabelVolume, Volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteringConfig {
    pub k_background_options: Vec<usize>,
    pub k_foreground_options: Vec<usize>,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Variance floor relative to the squared sample range.
    pub variance_floor: f64,
    /// Upper bound on the voxels drawn (uniformly, without replacement) for
    /// one EM fit. Cluster assignment still covers every voxel.
    pub max_fit_samples: usize,
    /// Segments with fewer voxels are never split.
    pub min_segment_voxels: usize,
    /// Variants per `(subject, k_bg, k_fg)`; pairs alternate table kept /
    /// table removed.
    pub variant_multiplier: usize,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k_background_options: vec![3, 4, 5],
            k_foreground_options: vec![1, 2, 3],
            max_iter: 100,
            rel_tol: 1e-6,
            variance_floor: 1e-6,
            max_fit_samples: 1_000_000,
            min_segment_voxels: 50,
            variant_multiplier: 2,
            seed: 0,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        let opts = self
            .k_background_options
            .iter()
            .chain(&self.k_foreground_options);
        if self.k_background_options.is_empty()
            || self.k_foreground_options.is_empty()
            || opts.clone().any(|&k| k == 0)
        {
            return Err(Error::Config("component options must be non-empty and >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.variance_floor > 0.0) {
            return Err(Error::Config("rel_tol and variance_floor must be > 0".into()));
        }
        if self.max_fit_samples == 0 || self.variant_multiplier == 0 {
            return Err(Error::Config(
                "max_fit_samples and variant_multiplier must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Hard assignment of the voxels inside `region_mask` to mixture components.
///
/// Masked voxels get `1..=K` (component index + 1), everything else 0.
pub fn assign_clusters(
    img: &ImageVolume,
    region_mask: &LabelVolume,
    model: &GmmModel,
) -> Result<LabelVolume> {
    img.geometry().ensure_same(region_mask.geometry(), "cluster assignment")?;
    let classify = model.classifier();
    let data = img
        .data()
        .iter()
        .zip(region_mask.data())
        .map(|(&x, &m)| if m != 0 { classify(x as f64) as u32 + 1 } else { 0 })
        .collect();
    Ok(Volume::from_parts(img.geometry().clone(), data))
}

/// Outcome of clustering one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RegionFit {
    Split { model: GmmModel },
    Unsplit { reason: String },
}

impl RegionFit {
    pub fn model(&self) -> Option<&GmmModel> {
        match self {
            RegionFit::Split { model } => Some(model),
            RegionFit::Unsplit { .. } => None,
        }
    }

    fn n_labels(&self) -> usize {
        self.model().map_or(1, |m| m.k)
    }
}

/// A label map whose background and segments were split into
/// generation-only sub-labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLabelMap {
    pub label: LabelVolume,
    pub mapping: LabelMapping,
    pub background: Option<RegionFit>,
    /// Keyed by the original segment label.
    pub foreground: BTreeMap<u32, RegionFit>,
}

/// Voxel indices of every label, ascending.
pub(crate) fn label_regions(lv: &LabelVolume) -> BTreeMap<u32, Vec<usize>> {
    let mut regions: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in lv.data().iter().enumerate() {
        regions.entry(l).or_default().push(i);
    }
    regions
}

fn fit_region(
    ct: &ImageVolume,
    voxels: &[usize],
    k: usize,
    min_voxels: usize,
    cfg: &ClusteringConfig,
    rng: &mut impl Rng,
) -> RegionFit {
    if voxels.len() < min_voxels {
        return RegionFit::Unsplit {
            reason: format!("{} voxels, below the {min_voxels}-voxel minimum", voxels.len()),
        };
    }
    let values = ct.data();
    let samples: Vec<f64> = if voxels.len() > cfg.max_fit_samples {
        let mut picked = index::sample(rng, voxels.len(), cfg.max_fit_samples).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| values[voxels[i]] as f64).collect()
    } else {
        voxels.iter().map(|&i| values[i] as f64).collect()
    };
    match fit_gmm_em(&samples, k, cfg) {
        Ok(model) => RegionFit::Split { model },
        Err(e) => RegionFit::Unsplit {
            reason: e.to_string(),
        },
    }
}

/// Background mixture for one `(subject, k_bg)`.
pub(crate) fn fit_background(
    ct: &ImageVolume,
    regions: &BTreeMap<u32, Vec<usize>>,
    k_bg: usize,
    cfg: &ClusteringConfig,
) -> Option<RegionFit> {
    let voxels = regions.get(&0)?;
    let mut rng = seed::rng_from(cfg.seed, &[seed::stage::FIT, 0, k_bg as u64]);
    let fit = fit_region(ct, voxels, k_bg, 1, cfg, &mut rng);
    if let RegionFit::Unsplit { reason } = &fit {
        log::warn!("background left as a single cluster: {reason}");
    }
    Some(fit)
}

/// Per-segment mixtures for one `(subject, k_fg)`.
pub(crate) fn fit_foreground(
    ct: &ImageVolume,
    regions: &BTreeMap<u32, Vec<usize>>,
    k_fg: usize,
    cfg: &ClusteringConfig,
) -> BTreeMap<u32, RegionFit> {
    regions
        .iter()
        .filter(|(&l, _)| l != 0)
        .map(|(&label, voxels)| {
            let mut rng =
                seed::rng_from(cfg.seed, &[seed::stage::FIT, 1, k_fg as u64, label as u64]);
            let fit = fit_region(ct, voxels, k_fg, cfg.min_segment_voxels, cfg, &mut rng);
            if k_fg > 1 {
                if let RegionFit::Unsplit { reason } = &fit {
                    log::warn!("segment {label} left unsplit: {reason}");
                }
            }
            (label, fit)
        })
        .collect()
}

/// Writes the minted labels and their mapping from precomputed fits.
pub(crate) fn compose(
    ct: &ImageVolume,
    lv: &LabelVolume,
    regions: &BTreeMap<u32, Vec<usize>>,
    base: &LabelMapping,
    background: Option<RegionFit>,
    foreground: BTreeMap<u32, RegionFit>,
) -> AugmentedLabelMap {
    let organ_max = base
        .generation_to_target
        .keys()
        .copied()
        .chain(regions.keys().copied())
        .max()
        .unwrap_or(0);
    let mut next = organ_max + 1;
    let mut out = vec![0u32; lv.len()];
    let mut generation_to_target = BTreeMap::from([(0u32, 0u32)]);
    let values = ct.data();

    let mut mint = |voxels: &[usize], fit: &RegionFit, target: u32, out: &mut [u32]| {
        let first = next;
        for j in 0..fit.n_labels() as u32 {
            generation_to_target.insert(first + j, target);
        }
        next += fit.n_labels() as u32;
        match fit.model() {
            Some(model) => {
                let classify = model.classifier();
                for &i in voxels {
                    out[i] = first + classify(values[i] as f64) as u32;
                }
            }
            None => voxels.iter().for_each(|&i| out[i] = first),
        }
    };

    if let (Some(fit), Some(voxels)) = (&background, regions.get(&0)) {
        mint(voxels, fit, 0, &mut out);
    }
    for (label, fit) in &foreground {
        mint(&regions[label], fit, base.target_of(*label), &mut out);
    }

    AugmentedLabelMap {
        label: Volume::from_parts(lv.geometry().clone(), out),
        mapping: LabelMapping {
            generation_to_target,
            target_names: base.target_names.clone(),
            n_targets: base.n_targets,
        },
        background,
        foreground,
    }
}

/// Splits background and segments of one subject into generation labels.
///
/// `ct` is the preconditioned intensity volume, `lv` the organ label map and
/// `base` its organ → target mapping. Segments that cannot be split (too few
/// voxels or too few distinct intensities) keep a single, relabelled id.
pub fn augment_label_map(
    ct: &ImageVolume,
    lv: &LabelVolume,
    base: &LabelMapping,
    k_bg: usize,
    k_fg: usize,
    cfg: &ClusteringConfig,
) -> Result<AugmentedLabelMap> {
    ct.geometry().ensure_same(lv.geometry(), "label map augmentation")?;
    if k_bg == 0 || k_fg == 0 {
        return Err(Error::Contract("component counts must be >= 1".into()));
    }
    let regions = label_regions(lv);
    let bg = fit_background(ct, &regions, k_bg, cfg);
    let fg = fit_foreground(ct, &regions, k_fg, cfg);
    Ok(compose(ct, lv, &regions, base, bg, fg))
}
