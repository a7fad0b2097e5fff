use std::path::Path;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;
use synthabd_core::gmmcluster::read_variant_dir;
use synthabd_core::synthgen::SampleStream;
use synthabd_core::volio::write_volume;

use super::{ensure_dir, Outcome};
use crate::config::PipelineConfig;
use crate::manifest::Manifest;

#[derive(Serialize)]
struct SampleEntry {
    index: u64,
    variant: usize,
    variant_file: String,
    seed: u64,
    image: String,
    label: String,
}

pub fn run(
    cfg: &PipelineConfig,
    variants_dir: &Path,
    out: &Path,
    count: u64,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<Outcome> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let loaded = read_variant_dir(variants_dir)?;
    let names: Vec<String> = loaded.iter().map(|(s, _)| s.label_file.clone()).collect();
    let variants = loaded.into_iter().map(|(s, lv)| (lv, s.mapping)).collect();
    let stream = SampleStream::new(variants, cfg.generation.clone(), seed)?;
    ensure_dir(out)?;

    let results: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<SampleEntry> {
            let s = stream.sample(i)?;
            let image = format!("sample_{i:05}_image.nii.gz");
            let label = format!("sample_{i:05}_label.nii.gz");
            write_volume(&s.image, out.join(&image))?;
            write_volume(&s.label, out.join(&label))?;
            Ok(SampleEntry {
                index: i,
                variant: s.variant,
                variant_file: names[s.variant].clone(),
                seed: s.seed,
                image,
                label,
            })
        })
        .collect();

    let mut entries = Vec::new();
    let mut failures = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => {
                manifest.add_output(out, &out.join(&e.image))?;
                manifest.add_output(out, &out.join(&e.label))?;
                entries.push(e);
            }
            Err(e) => {
                failures += 1;
                manifest.fail(format!("sample {i}"), e);
            }
        }
    }
    manifest.details = serde_json::json!({
        "variants": stream.len_variants(),
        "count": count,
        "samples": entries,
    });
    Ok(Outcome { failures })
}
