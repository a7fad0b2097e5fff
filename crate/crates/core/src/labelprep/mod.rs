//! Target-label selection and CT preconditioning.
//!
//! A [`LabelMapping`] sends every *generation* label (source structures and,
//! later, minted intensity clusters) to exactly one *target* label. Target 0
//! is background; targets `1..=n_targets` are the organs a segmenter predicts.

mod catalog;

pub use catalog::{default_targets, totalsegmentator_v1, ABDOMINAL_VERTEBRAE};

use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::gaussian_blur;
use crate::seed;
use crate::volio::{ImageVolume, LabelVolume, Volume};

/// Target definitions: target name → source structure names merged into it.
/// Target ids follow insertion order starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetSpec(pub IndexMap<String, Vec<String>>);

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec(default_targets())
    }
}

impl TargetSpec {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub generation_to_target: BTreeMap<u32, u32>,
    pub target_names: BTreeMap<u32, String>,
    pub n_targets: u32,
}

impl LabelMapping {
    /// Target of a generation label; labels the mapping does not know are
    /// background.
    #[inline]
    pub fn target_of(&self, generation: u32) -> u32 {
        self.generation_to_target.get(&generation).copied().unwrap_or(0)
    }

    /// Dense lookup table covering `0..=max generation id`.
    pub fn lookup_table(&self) -> Vec<u32> {
        let max = self.generation_to_target.keys().max().copied().unwrap_or(0);
        let mut table = vec![0u32; max as usize + 1];
        for (&g, &t) in &self.generation_to_target {
            table[g as usize] = t;
        }
        table
    }

    pub fn validate(&self) -> Result<()> {
        let ids: Vec<u32> = self.target_names.keys().copied().collect();
        let want: Vec<u32> = (0..=self.n_targets).collect();
        if ids != want {
            return Err(Error::Validation(format!(
                "target ids must be contiguous 0..={}, got {ids:?}",
                self.n_targets
            )));
        }
        if let Some((g, t)) = self
            .generation_to_target
            .iter()
            .find(|(_, &t)| t > self.n_targets)
        {
            return Err(Error::Validation(format!(
                "generation label {g} maps to unknown target {t}"
            )));
        }
        Ok(())
    }

    pub fn target_id(&self, name: &str) -> Option<u32> {
        self.target_names
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(&id, _)| id)
    }
}

/// Builds the generation → target mapping for a source label scheme.
///
/// Every source id appears in the result; ids not selected by `spec` map to
/// background.
pub fn build_target_mapping(source: &[(String, u32)], spec: &TargetSpec) -> Result<LabelMapping> {
    let by_name: HashMap<&str, u32> = source.iter().map(|(n, id)| (n.as_str(), *id)).collect();
    let mut generation_to_target: BTreeMap<u32, u32> = BTreeMap::new();
    for (_, id) in source {
        if *id == 0 {
            return Err(Error::Config("source label id 0 is reserved for background".into()));
        }
        generation_to_target.insert(*id, 0);
    }

    let mut target_names = BTreeMap::from([(0, "background".to_string())]);
    let mut claimed: HashMap<u32, &str> = HashMap::new();
    for (index, (target, members)) in spec.0.iter().enumerate() {
        let target_id = index as u32 + 1;
        if members.is_empty() {
            return Err(Error::Config(format!("target '{target}' lists no source structures")));
        }
        for member in members {
            let id = *by_name.get(member.as_str()).ok_or_else(|| {
                Error::Config(format!(
                    "target '{target}' needs source structure '{member}', which the source scheme lacks"
                ))
            })?;
            if let Some(prev) = claimed.insert(id, target) {
                return Err(Error::Config(format!(
                    "source structure '{member}' is claimed by both '{prev}' and '{target}'"
                )));
            }
            generation_to_target.insert(id, target_id);
        }
        target_names.insert(target_id, target.clone());
    }
    generation_to_target.insert(0, 0);

    let mapping = LabelMapping {
        generation_to_target,
        target_names,
        n_targets: spec.len() as u32,
    };
    mapping.validate()?;
    Ok(mapping)
}

/// Replaces every voxel by its target label.
pub fn apply_mapping(lv: &LabelVolume, m: &LabelMapping) -> LabelVolume {
    let table = m.lookup_table();
    lv.map(|v| table.get(v as usize).copied().unwrap_or(0))
}

/// Blur, min-max normalise, then apply `x^gamma`; output lies in `[0, 1]`.
///
/// `blur_sigma_mm` is converted to voxels per axis with the image spacing.
pub fn preprocess_ct_for_clustering(
    img: &ImageVolume,
    blur_sigma_mm: f64,
    gamma: f64,
) -> Result<ImageVolume> {
    if !(blur_sigma_mm >= 0.0) {
        return Err(Error::Contract(format!("blur sigma must be >= 0, got {blur_sigma_mm}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Contract(format!("gamma must be > 0, got {gamma}")));
    }
    let sp = img.spacing();
    let blurred = gaussian_blur(
        img,
        [blur_sigma_mm / sp[0], blur_sigma_mm / sp[1], blur_sigma_mm / sp[2]],
    );
    let (lo, hi) = blurred.min_max();
    if !(hi > lo) {
        return Err(Error::DegenerateNormalization(lo as f64));
    }
    let (lo, range) = (lo as f64, (hi - lo) as f64);
    Ok(blurred.map(|v| {
        let x = ((v as f64 - lo) / range).clamp(0.0, 1.0);
        x.powf(gamma) as f32
    }))
}

/// Zeroes the voxels of `lv` covered by a binary table mask when `remove` is set.
pub fn apply_table_mask(
    lv: &LabelVolume,
    table_mask: &LabelVolume,
    remove: bool,
) -> Result<LabelVolume> {
    lv.geometry().ensure_same(table_mask.geometry(), "table mask")?;
    if let Some(v) = table_mask.data().iter().find(|&&v| v > 1) {
        return Err(Error::Contract(format!("table mask must be binary, found value {v}")));
    }
    if !remove {
        return Ok(lv.clone());
    }
    let data = lv
        .data()
        .iter()
        .zip(table_mask.data())
        .map(|(&l, &m)| if m != 0 { 0 } else { l })
        .collect();
    Ok(Volume::from_parts(lv.geometry().clone(), data))
}

/// Subject-level preprocessing knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub blur_sigma_mm: f64,
    /// Contrast exponent, drawn once per subject from this list.
    pub gamma_options: Vec<f64>,
    /// Fraction of subjects whose CT table is removed.
    pub table_removal_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            blur_sigma_mm: 1.0,
            gamma_options: vec![0.6, 0.8, 1.0, 1.25, 1.67],
            table_removal_fraction: 0.5,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma_mm >= 0.0) {
            return Err(Error::Config("blur_sigma_mm must be >= 0".into()));
        }
        if self.gamma_options.is_empty() || self.gamma_options.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::Config("gamma_options must be non-empty and positive".into()));
        }
        if !(0.0..=1.0).contains(&self.table_removal_fraction) {
            return Err(Error::Config("table_removal_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn gamma_for_subject(&self, seed: u64, subject_index: usize) -> f64 {
        let mut rng = seed::rng_from(seed, &[seed::stage::GAMMA, subject_index as u64]);
        self.gamma_options[rng.random_range(0..self.gamma_options.len())]
    }

    /// Which subjects get their table removed: a seeded shuffle picks
    /// `round(fraction * n)` of them.
    pub fn table_removal_selection(&self, seed: u64, n_subjects: usize) -> Vec<bool> {
        let mut order: Vec<usize> = (0..n_subjects).collect();
        order.shuffle(&mut seed::rng_from(seed, &[seed::stage::SHUFFLE, n_subjects as u64]));
        let k = (self.table_removal_fraction * n_subjects as f64).round() as usize;
        let mut chosen = vec![false; n_subjects];
        for &i in order.iter().take(k) {
            chosen[i] = true;
        }
        chosen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volio::Geometry;

    fn v1_mapping() -> LabelMapping {
        build_target_mapping(&totalsegmentator_v1(), &TargetSpec::default()).unwrap()
    }

    fn id(name: &str) -> u32 {
        totalsegmentator_v1().into_iter().find(|(n, _)| n == name).unwrap().1
    }

    #[test]
    fn v1_scheme_yields_26_targets() {
        let m = v1_mapping();
        assert_eq!(m.n_targets, 26);
        let mapped: std::collections::BTreeSet<u32> =
            m.generation_to_target.values().copied().filter(|&t| t != 0).collect();
        assert_eq!(mapped.len(), 26);
        // total on the source id set
        for (_, sid) in totalsegmentator_v1() {
            assert!(m.generation_to_target.contains_key(&sid));
        }
        assert_eq!(m.target_of(id("lung_upper_lobe_left")), 0);
        assert_eq!(m.target_names[&m.target_of(id("liver"))], "liver");
    }

    #[test]
    fn vertebrae_are_merged() {
        let m = v1_mapping();
        let t = m.target_of(id("vertebrae_L1"));
        assert_ne!(t, 0);
        assert_eq!(t, m.target_of(id("vertebrae_L3")));
        assert_eq!(t, m.target_of(id("vertebrae_T10")));
        assert_eq!(m.target_names[&t], "vertebrae");
        assert_eq!(m.target_of(id("vertebrae_T9")), 0);
        assert_ne!(m.target_of(id("sacrum")), t);
    }

    #[test]
    fn missing_required_organ_is_config_error() {
        let src: Vec<_> = totalsegmentator_v1().into_iter().filter(|(n, _)| n != "liver").collect();
        assert!(matches!(
            build_target_mapping(&src, &TargetSpec::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn target_spec_json_keeps_order() {
        let json = serde_json::to_string(&TargetSpec::default()).unwrap();
        assert!(json.starts_with("{\"liver\":[\"liver\"],\"spleen\""));
        let back: TargetSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, TargetSpec::default());
        let m = v1_mapping();
        let mj: LabelMapping = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(mj, m);
    }

    #[test]
    fn apply_mapping_cases() {
        let m = v1_mapping();
        let g = Geometry::new([3, 3, 3], [1.0; 3]);
        let zeros = Volume::filled(g.clone(), 0u32).unwrap();
        assert_eq!(apply_mapping(&zeros, &m), zeros);
        let vert = Volume::filled(g.clone(), id("vertebrae_L2")).unwrap();
        let out = apply_mapping(&vert, &m);
        assert!(out.data().iter().all(|&v| v == m.target_id("vertebrae").unwrap()));
        // ids outside the scheme become background
        let odd = Volume::filled(g, 999u32).unwrap();
        assert!(apply_mapping(&odd, &m).data().iter().all(|&v| v == 0));
    }

    #[test]
    fn preprocess_identity_kernel_is_minmax() {
        let g = Geometry::new([4, 3, 2], [1.5; 3]);
        let img = Volume::from_fn(g, |[x, y, z]| (x + 4 * y + 12 * z) as f32 * 10.0 - 100.0).unwrap();
        let out = preprocess_ct_for_clustering(&img, 0.0, 1.0).unwrap();
        for (o, i) in out.data().iter().zip(img.data()) {
            let want = (i + 100.0) / 230.0;
            assert!((o - want).abs() < 1e-6);
        }
        let (lo, hi) = out.min_max();
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn preprocess_rejects_constant_and_bad_params() {
        let g = Geometry::new([4, 4, 4], [1.0; 3]);
        let c = Volume::filled(g.clone(), 5.0f32).unwrap();
        assert!(matches!(
            preprocess_ct_for_clustering(&c, 1.0, 1.0),
            Err(Error::DegenerateNormalization(_))
        ));
        let r = Volume::from_fn(g, |[x, _, _]| x as f32).unwrap();
        assert!(preprocess_ct_for_clustering(&r, -1.0, 1.0).is_err());
        assert!(preprocess_ct_for_clustering(&r, 1.0, 0.0).is_err());
    }

    #[test]
    fn preprocess_monotone_without_blur() {
        let g = Geometry::new([50, 1, 1], [1.0; 3]);
        let img = Volume::from_fn(g, |[x, _, _]| ((x * 37) % 50) as f32).unwrap();
        for gamma in [0.6, 1.67] {
            let out = preprocess_ct_for_clustering(&img, 0.0, gamma).unwrap();
            for i in 0..50 {
                for j in 0..50 {
                    if img.data()[i] < img.data()[j] {
                        assert!(out.data()[i] < out.data()[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn table_mask_cases() {
        let g = Geometry::new([4, 4, 4], [1.0; 3]);
        let lv = Volume::from_fn(g.clone(), |[x, y, z]| ((x + y + z) % 3) as u32).unwrap();
        let empty = Volume::filled(g.clone(), 0u32).unwrap();
        let full = Volume::filled(g.clone(), 1u32).unwrap();
        assert_eq!(apply_table_mask(&lv, &empty, true).unwrap(), lv);
        assert!(apply_table_mask(&lv, &full, true).unwrap().data().iter().all(|&v| v == 0));
        assert_eq!(apply_table_mask(&lv, &full, false).unwrap(), lv);

        let other = Volume::filled(Geometry::new([4, 4, 5], [1.0; 3]), 0u32).unwrap();
        assert!(matches!(apply_table_mask(&lv, &other, true), Err(Error::Contract(_))));
        let nonbinary = Volume::filled(g, 2u32).unwrap();
        assert!(apply_table_mask(&lv, &nonbinary, true).is_err());
    }

    #[test]
    fn table_selection_takes_half() {
        let cfg = PreprocessConfig::default();
        let sel = cfg.table_removal_selection(7, 10);
        assert_eq!(sel.iter().filter(|&&b| b).count(), 5);
        assert_eq!(sel, cfg.table_removal_selection(7, 10));
        let g = cfg.gamma_for_subject(7, 3);
        assert!(cfg.gamma_options.contains(&g));
    }
}
