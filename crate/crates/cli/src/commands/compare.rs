use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use synthabd_core::evalmetrics::kruskal_wallis;
use synthabd_core::Error;

use super::evaluate::ReportRow;
use super::{ensure_dir, Outcome};
use crate::manifest::Manifest;

#[derive(Debug, Serialize)]
struct CompareRow {
    label: String,
    metric: &'static str,
    h: Option<f64>,
    p_value: Option<f64>,
    df: usize,
    group_sizes: String,
    status: String,
}

fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn run(reports: &[PathBuf], out: &Path, manifest: &mut Manifest) -> Result<Outcome> {
    if reports.len() < 2 {
        bail!("compare needs at least two reports");
    }
    // (label, metric) -> one value list per report; undefined values are dropped
    let mut groups: BTreeMap<(String, &'static str), Vec<Vec<f64>>> = BTreeMap::new();
    for (gi, path) in reports.iter().enumerate() {
        for row in read_report(path)? {
            for (metric, value) in [("dice", row.dice), ("hd95", row.hd95)] {
                let g = groups
                    .entry((row.label.clone(), metric))
                    .or_insert_with(|| vec![Vec::new(); reports.len()]);
                if let Some(v) = value {
                    g[gi].push(v);
                }
            }
        }
    }

    let mut rows = Vec::new();
    for ((label, metric), g) in &groups {
        let sizes = g.iter().map(|v| v.len().to_string()).collect::<Vec<_>>().join(";");
        let (h, p, status) = match kruskal_wallis(g) {
            Ok(kw) => (Some(kw.h), Some(kw.p_value), "ok".to_string()),
            // every value tied: no evidence of a difference
            Err(Error::DegenerateRanking(_)) => (Some(0.0), Some(1.0), "degenerate".to_string()),
            Err(e) => (None, None, format!("skipped: {e}")),
        };
        rows.push(CompareRow {
            label: label.clone(),
            metric,
            h,
            p_value: p,
            df: g.len() - 1,
            group_sizes: sizes,
            status,
        });
    }

    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    ensure_dir(dir)?;
    let mut w = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display()))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    drop(w);
    manifest.add_output(dir, out)?;
    manifest.details = serde_json::json!({
        "reports": reports.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "comparisons": rows.len(),
    });
    Ok(Outcome { failures: 0 })
}
