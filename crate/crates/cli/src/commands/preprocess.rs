use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use synthabd_core::volio::{
    crop_or_pad, read_image, read_label, resample, write_volume, Interpolation, LabelVolume,
};

use super::{ensure_dir, find_nifti, subject_dirs, Outcome};
use crate::config::PipelineConfig;
use crate::manifest::Manifest;

struct Processed {
    files: Vec<PathBuf>,
    dropped_labels: Vec<u32>,
}

/// Keeps catalog ids, zeroes everything else.
fn to_generation_ids(lv: &LabelVolume, known: &BTreeSet<u32>) -> (LabelVolume, Vec<u32>) {
    let dropped: Vec<u32> = lv
        .labels()
        .into_iter()
        .filter(|l| *l != 0 && !known.contains(l))
        .collect();
    if dropped.is_empty() {
        return (lv.clone(), dropped);
    }
    (lv.map(|v| if known.contains(&v) { v } else { 0 }), dropped)
}

fn process_subject(src: &Path, dst: &Path, cfg: &PipelineConfig, known: &BTreeSet<u32>) -> Result<Processed> {
    let ct_path = find_nifti(src, "ct").context("missing ct.nii(.gz)")?;
    let label_path = find_nifti(src, "label").context("missing label.nii(.gz)")?;
    let ct = read_image(&ct_path)?;
    let label = read_label(&label_path)?;
    ct.geometry()
        .approx_eq(label.geometry(), 1e-4)
        .then_some(())
        .context("ct and label geometries differ")?;

    let spacing = cfg.resample.output_spacing;
    let shape = cfg.resample.output_shape;
    let ct = resample(&ct, spacing, Interpolation::Trilinear)?;
    let fill = ct.min_max().0;
    let ct = crop_or_pad(&ct, shape, fill)?;
    let label = crop_or_pad(&resample(&label, spacing, Interpolation::Nearest)?, shape, 0)?;
    let (label, dropped_labels) = to_generation_ids(&label, known);

    ensure_dir(dst)?;
    let mut files = vec![dst.join("ct.nii.gz"), dst.join("label.nii.gz")];
    write_volume(&ct, &files[0])?;
    write_volume(&label, &files[1])?;
    if let Some(table_path) = find_nifti(src, "table") {
        let table = read_label(&table_path)?;
        let table = crop_or_pad(&resample(&table, spacing, Interpolation::Nearest)?, shape, 0)?;
        let out = dst.join("table.nii.gz");
        write_volume(&table, &out)?;
        files.push(out);
    }
    Ok(Processed { files, dropped_labels })
}

pub fn run(cfg: &PipelineConfig, input: &Path, out: &Path, manifest: &mut Manifest) -> Result<Outcome> {
    let subjects = subject_dirs(input)?;
    ensure_dir(out)?;
    let known: BTreeSet<u32> = cfg.source_catalog().into_iter().map(|(_, id)| id).collect();
    let results: Vec<_> = subjects
        .par_iter()
        .map(|(id, src)| process_subject(src, &out.join(id), cfg, &known))
        .collect();

    let mut failures = 0;
    let mut dropped = serde_json::Map::new();
    for ((id, _), r) in subjects.iter().zip(results) {
        match r {
            Ok(p) => {
                for f in &p.files {
                    manifest.add_output(out, f)?;
                }
                if !p.dropped_labels.is_empty() {
                    log::warn!("{id}: labels {:?} not in the source catalog, set to 0", p.dropped_labels);
                    dropped.insert(id.clone(), serde_json::json!(p.dropped_labels));
                }
            }
            Err(e) => {
                failures += 1;
                manifest.fail(id.clone(), e);
            }
        }
    }
    log::info!("preprocessed {} of {} subjects", subjects.len() - failures, subjects.len());
    manifest.details = serde_json::json!({
        "subjects": subjects.len(),
        "succeeded": subjects.len() - failures,
        "dropped_labels": dropped,
    });
    Ok(Outcome { failures })
}
