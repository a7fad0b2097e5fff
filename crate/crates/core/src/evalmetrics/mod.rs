//! Overlap and boundary-distance metrics, per-label aggregation and the
//! Kruskal-Wallis comparison of result sets.

mod distance;
mod kruskal;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volio::LabelVolume;

pub use distance::squared_edt;
pub use kruskal::{average_ranks, kruskal_wallis, KruskalWallis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedReason {
    #[default]
    None,
    EmptyPred,
    EmptyGt,
    BothEmpty,
}

impl UndefinedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UndefinedReason::None => "none",
            UndefinedReason::EmptyPred => "empty_pred",
            UndefinedReason::EmptyGt => "empty_gt",
            UndefinedReason::BothEmpty => "both_empty",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" | "" => UndefinedReason::None,
            "empty_pred" => UndefinedReason::EmptyPred,
            "empty_gt" => UndefinedReason::EmptyGt,
            "both_empty" => UndefinedReason::BothEmpty,
            _ => return None,
        })
    }

    fn of(pred_empty: bool, gt_empty: bool) -> Self {
        match (pred_empty, gt_empty) {
            (false, false) => UndefinedReason::None,
            (true, false) => UndefinedReason::EmptyPred,
            (false, true) => UndefinedReason::EmptyGt,
            (true, true) => UndefinedReason::BothEmpty,
        }
    }
}

/// How the two directed boundary-distance sets are reduced to one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hd95Convention {
    /// P95 of each direction separately, then the larger of the two.
    #[default]
    MaxOfDirected,
    /// P95 of both directions pooled together.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub case_id: String,
    pub label_id: u32,
    pub dice: Option<f64>,
    pub hd95: Option<f64>,
    pub undefined_reason: UndefinedReason,
}

fn check_shapes(pred: &LabelVolume, gt: &LabelVolume) -> Result<()> {
    if pred.shape() != gt.shape() {
        return Err(Error::Contract(format!(
            "prediction shape {:?} differs from reference shape {:?}",
            pred.shape(),
            gt.shape()
        )));
    }
    Ok(())
}

/// Dice overlap for one label. `None` when the label is absent from both.
pub fn dice(pred: &LabelVolume, gt: &LabelVolume, label: u32) -> Result<Option<f64>> {
    check_shapes(pred, gt)?;
    let (mut a, mut b, mut both) = (0u64, 0u64, 0u64);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let (ip, ig) = (p == label, g == label);
        a += ip as u64;
        b += ig as u64;
        both += (ip && ig) as u64;
    }
    if a + b == 0 {
        return Ok(None);
    }
    Ok(Some(2.0 * both as f64 / (a + b) as f64))
}

/// Voxels of `mask` with at least one face neighbour outside the mask or
/// outside the volume.
pub fn boundary(mask: &[bool], shape: [usize; 3]) -> Vec<bool> {
    let [nx, ny, nz] = shape;
    let mut out = vec![false; mask.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                if !mask[i] {
                    continue;
                }
                out[i] = x == 0
                    || y == 0
                    || z == 0
                    || x + 1 == nx
                    || y + 1 == ny
                    || z + 1 == nz
                    || !mask[i - 1]
                    || !mask[i + 1]
                    || !mask[i - nx]
                    || !mask[i + nx]
                    || !mask[i - nx * ny]
                    || !mask[i + nx * ny];
            }
        }
    }
    out
}

/// Nearest-rank percentile of an ascending slice.
fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Distances (mm) from each `from` voxel to the nearest `to` voxel.
fn directed(from: &[bool], to: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let d2 = squared_edt(to, shape, spacing);
    let mut d: Vec<f64> = from
        .iter()
        .zip(&d2)
        .filter(|(&f, _)| f)
        .map(|(_, &v)| v.sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Crops both masks to the bounding box of their union. Every boundary voxel
/// lies inside it, so distances between boundaries are unchanged.
fn crop_union(a: &[bool], b: &[bool], shape: [usize; 3]) -> (Vec<bool>, Vec<bool>, [usize; 3]) {
    let mut lo = shape;
    let mut hi = [0usize; 3];
    let [nx, ny, _] = shape;
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        if x || y {
            let c = [i % nx, (i / nx) % ny, i / (nx * ny)];
            for k in 0..3 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k] + 1);
            }
        }
    }
    let cs = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let mut ca = Vec::with_capacity(cs.iter().product());
    let mut cb = Vec::with_capacity(ca.capacity());
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            let row = nx * (y + ny * z);
            ca.extend_from_slice(&a[row + lo[0]..row + hi[0]]);
            cb.extend_from_slice(&b[row + lo[0]..row + hi[0]]);
        }
    }
    (ca, cb, cs)
}

/// 95th-percentile Hausdorff distance (mm) with the default convention.
pub fn hd95(
    pred: &LabelVolume,
    gt: &LabelVolume,
    label: u32,
    spacing: [f64; 3],
) -> Result<(Option<f64>, UndefinedReason)> {
    hd95_with(pred, gt, label, spacing, Hd95Convention::MaxOfDirected)
}

pub fn hd95_with(
    pred: &LabelVolume,
    gt: &LabelVolume,
    label: u32,
    spacing: [f64; 3],
    convention: Hd95Convention,
) -> Result<(Option<f64>, UndefinedReason)> {
    check_shapes(pred, gt)?;
    if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Contract(format!("spacing must be positive, got {spacing:?}")));
    }
    let a: Vec<bool> = pred.data().iter().map(|&v| v == label).collect();
    let b: Vec<bool> = gt.data().iter().map(|&v| v == label).collect();
    let reason = UndefinedReason::of(!a.contains(&true), !b.contains(&true));
    if reason != UndefinedReason::None {
        return Ok((None, reason));
    }
    let (a, b, shape) = crop_union(&a, &b, pred.shape());
    let ba = boundary(&a, shape);
    let bb = boundary(&b, shape);
    let ab = directed(&ba, &bb, shape, spacing);
    let ba_d = directed(&bb, &ba, shape, spacing);
    let value = match convention {
        Hd95Convention::MaxOfDirected => nearest_rank(&ab, 95.0).max(nearest_rank(&ba_d, 95.0)),
        Hd95Convention::Pooled => {
            let mut all = ab;
            all.extend(ba_d);
            all.sort_by(f64::total_cmp);
            nearest_rank(&all, 95.0)
        }
    };
    Ok((Some(value), UndefinedReason::None))
}

/// One record per requested label. Empty segments yield undefined values,
/// never errors.
pub fn evaluate_case(
    case_id: &str,
    pred: &LabelVolume,
    gt: &LabelVolume,
    labels: &[u32],
    spacing: [f64; 3],
    convention: Hd95Convention,
) -> Result<Vec<MetricRecord>> {
    pred.geometry().ensure_same(gt.geometry(), "prediction")?;
    labels
        .iter()
        .map(|&label| {
            let d = dice(pred, gt, label)?;
            let (h, reason) = hd95_with(pred, gt, label, spacing, convention)?;
            Ok(MetricRecord {
                case_id: case_id.to_string(),
                label_id: label,
                dice: d,
                hd95: h,
                undefined_reason: reason,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
    pub n_undefined: usize,
}

impl MetricSummary {
    fn from_values<I: IntoIterator<Item = Option<f64>>>(values: I) -> Self {
        let mut defined = Vec::new();
        let mut n_undefined = 0;
        for v in values {
            match v {
                Some(x) => defined.push(x),
                None => n_undefined += 1,
            }
        }
        let n = defined.len();
        if n == 0 {
            return MetricSummary { mean: None, std: None, n, n_undefined };
        }
        let mean = defined.iter().sum::<f64>() / n as f64;
        let var = defined.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        MetricSummary {
            mean: Some(mean),
            std: Some(var.sqrt()),
            n,
            n_undefined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelSummary {
    pub dice: MetricSummary,
    pub hd95: MetricSummary,
}

/// Mean and population standard deviation per label, over defined values.
pub fn aggregate(records: &[MetricRecord]) -> BTreeMap<u32, LabelSummary> {
    let mut by_label: BTreeMap<u32, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        by_label.entry(r.label_id).or_default().push(r);
    }
    by_label
        .into_iter()
        .map(|(label, rs)| {
            let summary = LabelSummary {
                dice: MetricSummary::from_values(rs.iter().map(|r| r.dice)),
                hd95: MetricSummary::from_values(rs.iter().map(|r| r.hd95)),
            };
            (label, summary)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volio::Geometry;

    fn vol(shape: [usize; 3], voxels: &[[usize; 3]], label: u32) -> LabelVolume {
        let g = Geometry::new(shape, [1.0; 3]);
        let mut data = vec![0u32; shape.iter().product()];
        for c in voxels {
            data[c[0] + shape[0] * (c[1] + shape[1] * c[2])] = label;
        }
        LabelVolume::new(g, data).unwrap()
    }

    #[test]
    fn dice_examples() {
        let a = vol([4, 4, 4], &[[0, 0, 0], [1, 0, 0]], 1);
        let b = vol([4, 4, 4], &[[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], 1);
        assert!((dice(&a, &b, 1).unwrap().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(dice(&a, &a, 1).unwrap(), Some(1.0));
        let c = vol([4, 4, 4], &[[3, 3, 3]], 1);
        assert_eq!(dice(&a, &c, 1).unwrap(), Some(0.0));
        assert_eq!(dice(&a, &b, 7).unwrap(), None);
        let other = vol([4, 4, 5], &[], 1);
        assert!(matches!(dice(&a, &other, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn hd95_examples() {
        let a = vol([8, 3, 3], &[[1, 1, 1]], 2);
        let b = vol([8, 3, 3], &[[4, 1, 1]], 2);
        assert_eq!(hd95(&a, &b, 2, [1.0; 3]).unwrap(), (Some(3.0), UndefinedReason::None));
        assert_eq!(hd95(&a, &b, 2, [2.0, 1.0, 1.0]).unwrap().0, Some(6.0));
        assert_eq!(hd95(&a, &a, 2, [1.0; 3]).unwrap().0, Some(0.0));
        let empty = vol([8, 3, 3], &[], 2);
        assert_eq!(hd95(&empty, &b, 2, [1.0; 3]).unwrap(), (None, UndefinedReason::EmptyPred));
        assert_eq!(hd95(&a, &empty, 2, [1.0; 3]).unwrap(), (None, UndefinedReason::EmptyGt));
        assert_eq!(hd95(&empty, &empty, 2, [1.0; 3]).unwrap(), (None, UndefinedReason::BothEmpty));
        assert!(hd95(&a, &b, 2, [0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn boundary_of_solid_cube() {
        let mask = vec![true; 27];
        let b = boundary(&mask, [3, 3, 3]);
        assert_eq!(b.iter().filter(|&&v| v).count(), 26);
        let mut mask = vec![true; 125];
        mask[0] = false;
        let b = boundary(&mask, [5, 5, 5]);
        assert_eq!(b.iter().filter(|&&v| v).count(), 125 - 27 - 1);
    }

    #[test]
    fn nearest_rank_convention() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 95.0), 19.0);
        assert_eq!(nearest_rank(&[4.0], 95.0), 4.0);
    }

    #[test]
    fn evaluate_and_aggregate() {
        let a = vol([5, 5, 5], &[[1, 1, 1], [2, 1, 1]], 3);
        let recs = evaluate_case("c0", &a, &a, &[3, 9], [1.0; 3], Hd95Convention::default()).unwrap();
        assert_eq!(recs[0].dice, Some(1.0));
        assert_eq!(recs[0].hd95, Some(0.0));
        assert_eq!(recs[1].undefined_reason, UndefinedReason::BothEmpty);
        assert_eq!(recs[1].dice, None);

        let mk = |d: Option<f64>| MetricRecord {
            case_id: "x".into(),
            label_id: 1,
            dice: d,
            hd95: None,
            undefined_reason: UndefinedReason::EmptyPred,
        };
        let s = aggregate(&[mk(Some(0.8)), mk(Some(1.0)), mk(None)]);
        let d = s[&1].dice;
        assert!((d.mean.unwrap() - 0.9).abs() < 1e-12);
        assert!((d.std.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!((d.n, d.n_undefined), (2, 1));
        assert_eq!(s[&1].hd95.mean, None);
        assert_eq!(s[&1].hd95.n_undefined, 3);
    }

    #[test]
    fn reason_strings_round_trip() {
        for r in [
            UndefinedReason::None,
            UndefinedReason::EmptyPred,
            UndefinedReason::EmptyGt,
            UndefinedReason::BothEmpty,
        ] {
            assert_eq!(UndefinedReason::parse(r.as_str()), Some(r));
        }
    }
}
