use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use synthabd_core::evalmetrics::{aggregate, evaluate_case, MetricRecord, MetricSummary, UndefinedReason};
use synthabd_core::volio::read_label;

use super::{ensure_dir, find_nifti, nifti_stem, Outcome};
use crate::config::PipelineConfig;
use crate::manifest::Manifest;

/// One row of `report.csv`. Undefined metrics are empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case_id: String,
    pub label: String,
    pub dice: Option<f64>,
    pub hd95: Option<f64>,
    pub undefined_reason: String,
}

#[derive(Serialize)]
struct LabelEntry {
    label_id: u32,
    dice: MetricSummary,
    hd95: MetricSummary,
}

/// `--labels` is either inline JSON or a path to a JSON file, mapping
/// label names to ids.
pub fn parse_labels(arg: &str) -> Result<IndexMap<String, u32>> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading labels file {arg}"))?
    };
    let labels: IndexMap<String, u32> = serde_json::from_str(&text).context("parsing --labels JSON")?;
    if labels.is_empty() {
        bail!("--labels must name at least one label");
    }
    Ok(labels)
}

fn cases(gt_dir: &Path) -> Result<Vec<String>> {
    let mut ids: Vec<String> = std::fs::read_dir(gt_dir)
        .with_context(|| format!("listing {}", gt_dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .filter_map(|e| nifti_stem(&e.path()))
        .collect();
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        bail!("no NIfTI files found in {}", gt_dir.display());
    }
    Ok(ids)
}

fn evaluate_one(
    case: &str,
    pred_dir: &Path,
    gt_dir: &Path,
    ids: &[u32],
    cfg: &PipelineConfig,
) -> Result<Vec<MetricRecord>> {
    let gt = read_label(find_nifti(gt_dir, case).context("reference vanished")?)?;
    let pred = read_label(find_nifti(pred_dir, case).context("no matching prediction")?)?;
    Ok(evaluate_case(case, &pred, &gt, ids, gt.spacing(), cfg.evaluation.hd95_convention)?)
}

pub fn run(
    cfg: &PipelineConfig,
    pred_dir: &Path,
    gt_dir: &Path,
    labels: &IndexMap<String, u32>,
    report: &Path,
    manifest: &mut Manifest,
) -> Result<Outcome> {
    let case_ids = cases(gt_dir)?;
    let ids: Vec<u32> = labels.values().copied().collect();
    let names: BTreeMap<u32, &str> = labels.iter().map(|(k, &v)| (v, k.as_str())).collect();
    let results: Vec<_> = case_ids
        .par_iter()
        .map(|c| evaluate_one(c, pred_dir, gt_dir, &ids, cfg))
        .collect();

    let mut records = Vec::new();
    let mut failures = 0;
    for (c, r) in case_ids.iter().zip(results) {
        match r {
            Ok(rs) => records.extend(rs),
            Err(e) => {
                failures += 1;
                manifest.fail(c.clone(), e);
            }
        }
    }

    let dir = report.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    ensure_dir(dir)?;
    let mut w = csv::Writer::from_path(report).with_context(|| format!("creating {}", report.display()))?;
    for r in &records {
        w.serialize(ReportRow {
            case_id: r.case_id.clone(),
            label: names[&r.label_id].to_string(),
            dice: r.dice,
            hd95: r.hd95,
            undefined_reason: r.undefined_reason.as_str().to_string(),
        })?;
    }
    w.flush()?;
    drop(w);

    let summary: IndexMap<&str, LabelEntry> = {
        let agg = aggregate(&records);
        labels
            .iter()
            .filter_map(|(name, id)| {
                agg.get(id).map(|s| {
                    (name.as_str(), LabelEntry { label_id: *id, dice: s.dice, hd95: s.hd95 })
                })
            })
            .collect()
    };
    let summary_path = dir.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    manifest.add_output(dir, report)?;
    manifest.add_output(dir, &summary_path)?;
    let undefined = records.iter().filter(|r| r.undefined_reason != UndefinedReason::None).count();
    manifest.details = serde_json::json!({
        "cases": case_ids.len(),
        "records": records.len(),
        "undefined_records": undefined,
    });
    Ok(Outcome { failures })
}
