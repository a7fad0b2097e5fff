use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compose, fit_background, fit_foreground, label_regions, ClusteringConfig, RegionFit};
use crate::error::{Error, Result};
use crate::labelprep::{apply_table_mask, LabelMapping};
use crate::seed;
use crate::volio::{read_label, write_volume, ImageVolume, LabelVolume};

/// One training subject. `ct` must already be preconditioned for clustering.
#[derive(Debug, Clone)]
pub struct Subject {
    pub id: String,
    pub ct: ImageVolume,
    pub label: LabelVolume,
    pub table_mask: Option<LabelVolume>,
    /// Used when the variant multiplier is 1.
    pub remove_table: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub subject_id: String,
    pub k_bg: usize,
    pub k_fg: usize,
    pub table_removed: bool,
    pub replica: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub provenance: Provenance,
    pub label: LabelVolume,
    pub mapping: LabelMapping,
    pub background: Option<RegionFit>,
    pub foreground: BTreeMap<u32, RegionFit>,
}

/// JSON written next to every variant label map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSidecar {
    pub label_file: String,
    pub provenance: Provenance,
    pub mapping: LabelMapping,
    pub background: Option<RegionFit>,
    pub foreground: BTreeMap<u32, RegionFit>,
}

/// Expands subjects into augmented label maps, one per
/// `(subject, k_bg, k_fg, replica)`.
///
/// Fits are shared the way the clustering loop nests them: one background
/// mixture per `(subject, k_bg)` and one set of segment mixtures per
/// `(subject, k_fg)`, each replica pair seeded independently. With a
/// multiplier of 1 the subject's own `remove_table` flag decides table
/// removal; otherwise even replicas keep the table and odd replicas drop it.
pub fn generate_variants(
    subjects: &[Subject],
    base: &LabelMapping,
    cfg: &ClusteringConfig,
) -> Result<Vec<Variant>> {
    cfg.validate()?;
    if subjects.is_empty() {
        return Err(Error::Contract("at least one subject is required".into()));
    }
    for s in subjects {
        s.ct.geometry().ensure_same(s.label.geometry(), &s.id)?;
        if let Some(m) = &s.table_mask {
            s.label.geometry().ensure_same(m.geometry(), &s.id)?;
        }
    }

    let m = cfg.variant_multiplier;
    let groups = if m == 1 { 1 } else { m.div_ceil(2) };
    let jobs: Vec<(usize, usize)> = (0..subjects.len())
        .flat_map(|s| (0..groups).map(move |g| (s, g)))
        .collect();

    let per_job: Vec<Result<Vec<Variant>>> = jobs
        .par_iter()
        .map(|&(si, group)| {
            let s = &subjects[si];
            let job_cfg = ClusteringConfig {
                seed: seed::derive_seed(cfg.seed, &[si as u64, group as u64]),
                ..cfg.clone()
            };
            let regions = label_regions(&s.label);
            let bg: Vec<_> = cfg
                .k_background_options
                .iter()
                .map(|&k| fit_background(&s.ct, &regions, k, &job_cfg))
                .collect();
            let fg: Vec<_> = cfg
                .k_foreground_options
                .iter()
                .map(|&k| fit_foreground(&s.ct, &regions, k, &job_cfg))
                .collect();

            let replicas: Vec<(usize, bool)> = if m == 1 {
                vec![(0, s.remove_table)]
            } else {
                (2 * group..(2 * group + 2).min(m)).map(|r| (r, r % 2 == 1)).collect()
            };

            let mut out = Vec::new();
            for (bi, &k_bg) in cfg.k_background_options.iter().enumerate() {
                for (fi, &k_fg) in cfg.k_foreground_options.iter().enumerate() {
                    let aug = compose(&s.ct, &s.label, &regions, base, bg[bi].clone(), fg[fi].clone());
                    for &(replica, remove) in &replicas {
                        let table_removed = remove && s.table_mask.is_some();
                        let label = match (&s.table_mask, table_removed) {
                            (Some(mask), true) => apply_table_mask(&aug.label, mask, true)?,
                            _ => aug.label.clone(),
                        };
                        out.push(Variant {
                            provenance: Provenance {
                                subject_id: s.id.clone(),
                                k_bg,
                                k_fg,
                                table_removed,
                                replica,
                            },
                            label,
                            mapping: aug.mapping.clone(),
                            background: aug.background.clone(),
                            foreground: aug.foreground.clone(),
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut variants = Vec::new();
    for r in per_job {
        variants.extend(r?);
    }
    // stable order: subject, k_bg, k_fg, replica
    variants.sort_by(|a, b| {
        let key = |v: &Variant| {
            let si = subjects.iter().position(|s| s.id == v.provenance.subject_id);
            (si, v.provenance.k_bg, v.provenance.k_fg, v.provenance.replica)
        };
        key(a).cmp(&key(b))
    });
    Ok(variants)
}

/// Writes `variant_NNNN.nii.gz` and `variant_NNNN.json` into `dir`.
pub fn write_variant(dir: impl AsRef<Path>, index: usize, v: &Variant) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let stem = format!("variant_{index:04}");
    let label_file = format!("{stem}.nii.gz");
    write_volume(&v.label, dir.join(&label_file))?;
    let sidecar = VariantSidecar {
        label_file,
        provenance: v.provenance.clone(),
        mapping: v.mapping.clone(),
        background: v.background.clone(),
        foreground: v.foreground.clone(),
    };
    let path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_vec_pretty(&sidecar)?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loads every variant sidecar of a directory, in file-name order.
pub fn read_variant_dir(dir: impl AsRef<Path>) -> Result<Vec<(VariantSidecar, LabelVolume)>> {
    let dir = dir.as_ref();
    let mut sidecars: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("variant_"))
        })
        .collect();
    sidecars.sort();
    if sidecars.is_empty() {
        return Err(Error::Contract(format!("no variants found in {}", dir.display())));
    }
    sidecars
        .into_iter()
        .map(|p| {
            let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
            let sidecar: VariantSidecar = serde_json::from_slice(&bytes)?;
            let label = read_label(dir.join(&sidecar.label_file))?;
            Ok((sidecar, label))
        })
        .collect()
}
