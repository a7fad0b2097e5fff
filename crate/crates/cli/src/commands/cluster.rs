use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use synthabd_core::gmmcluster::{generate_variants, write_variant, ClusteringConfig, Subject};
use synthabd_core::labelprep::{build_target_mapping, preprocess_ct_for_clustering};
use synthabd_core::volio::{read_image, read_label};

use super::{ensure_dir, find_nifti, subject_dirs, Outcome};
use crate::config::PipelineConfig;
use crate::manifest::Manifest;

fn load_subject(
    id: &str,
    dir: &Path,
    index: usize,
    remove_table: bool,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<Subject> {
    let ct = read_image(find_nifti(dir, "ct").context("missing ct.nii(.gz)")?)?;
    let label = read_label(find_nifti(dir, "label").context("missing label.nii(.gz)")?)?;
    let table_mask = find_nifti(dir, "table").map(read_label).transpose()?;
    let gamma = cfg.labelprep.gamma_for_subject(seed, index);
    log::debug!("{id}: clustering gamma {gamma}");
    let ct = preprocess_ct_for_clustering(&ct, cfg.labelprep.blur_sigma_mm, gamma)?;
    Ok(Subject {
        id: id.to_string(),
        ct,
        label,
        table_mask,
        remove_table,
    })
}

pub fn run(cfg: &PipelineConfig, input: &Path, out: &Path, seed: u64, manifest: &mut Manifest) -> Result<Outcome> {
    let dirs = subject_dirs(input)?;
    let base = build_target_mapping(&cfg.source_catalog(), &cfg.targets)?;
    let removal = cfg.labelprep.table_removal_selection(seed, dirs.len());

    let loaded: Vec<_> = dirs
        .par_iter()
        .enumerate()
        .map(|(i, (id, dir))| load_subject(id, dir, i, removal[i], cfg, seed))
        .collect();
    let mut subjects = Vec::new();
    let mut failures = 0;
    for ((id, _), r) in dirs.iter().zip(loaded) {
        match r {
            Ok(s) => subjects.push(s),
            Err(e) => {
                failures += 1;
                manifest.fail(id.clone(), e);
            }
        }
    }
    if subjects.is_empty() {
        bail!("no subject in {} could be loaded", input.display());
    }

    let clustering = ClusteringConfig {
        seed,
        ..cfg.clustering.clone()
    };
    let variants = generate_variants(&subjects, &base, &clustering)?;
    ensure_dir(out)?;
    let written: Vec<_> = variants
        .par_iter()
        .enumerate()
        .map(|(i, v)| write_variant(out, i, v).map(|sidecar| (out.join(format!("variant_{i:04}.nii.gz")), sidecar)))
        .collect();
    for w in written {
        let (label, sidecar) = w?;
        manifest.add_output(out, &label)?;
        manifest.add_output(out, &sidecar)?;
    }
    println!(
        "wrote {} label-map variants from {} subjects to {}",
        variants.len(),
        subjects.len(),
        out.display()
    );
    manifest.details = serde_json::json!({
        "subjects": dirs.len(),
        "succeeded": subjects.len(),
        "variants": variants.len(),
        "table_removed_subjects": dirs.iter().zip(&removal).filter(|(_, &r)| r).map(|((id, _), _)| id).collect::<Vec<_>>(),
    });
    Ok(Outcome { failures })
}
