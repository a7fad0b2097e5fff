mod common;

use rand::Rng;
use synthabd_core::evalmetrics::{
    aggregate, dice, evaluate_case, hd95, hd95_with, kruskal_wallis, Hd95Convention, MetricRecord, UndefinedReason,
};
use synthabd_core::volio::{Geometry, LabelVolume};

fn random_labels(r: &mut impl Rng, shape: [usize; 3], spacing: [f64; 3]) -> LabelVolume {
    let centres: Vec<([f64; 3], u32)> = (0..5)
        .map(|_| (std::array::from_fn(|a| r.random_range(0.0..shape[a] as f64)), r.random_range(1..4)))
        .collect();
    LabelVolume::from_fn(Geometry::new(shape, spacing), |[x, y, z]| {
        let p = [x as f64, y as f64, z as f64];
        centres
            .iter()
            .find(|(c, _)| (0..3).map(|a| (p[a] - c[a]).powi(2)).sum::<f64>() < 6.0)
            .map(|(_, l)| *l)
            .unwrap_or(0)
    })
    .unwrap()
}

fn mask(lv: &LabelVolume, label: u32) -> Vec<bool> {
    lv.data().iter().map(|&v| v == label).collect()
}

/// Exact Hausdorff distance (P100) from all boundary pairs.
fn brute_hausdorff(a: &[bool], b: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> f64 {
    let ba = common::brute_boundary(a, shape);
    let bb = common::brute_boundary(b, shape);
    let dist = |p: &[usize; 3], q: &[usize; 3]| {
        (0..3).map(|k| ((p[k] as f64 - q[k] as f64) * spacing[k]).powi(2)).sum::<f64>().sqrt()
    };
    let directed = |from: &[[usize; 3]], to: &[[usize; 3]]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(&ba, &bb).max(directed(&bb, &ba))
}

#[test]
fn hd95_properties_against_brute_force() {
    let mut r = common::rng(31);
    for case in 0..40 {
        let shape: [usize; 3] = std::array::from_fn(|_| r.random_range(4..=14));
        let spacing: [f64; 3] = std::array::from_fn(|_| r.random_range(0.4..2.5));
        let pred = random_labels(&mut r, shape, spacing);
        let gt = random_labels(&mut r, shape, spacing);
        for label in 1..4 {
            let (a, b) = (mask(&pred, label), mask(&gt, label));
            let (h, reason) = hd95(&pred, &gt, label, spacing).unwrap();
            let (h_rev, _) = hd95(&gt, &pred, label, spacing).unwrap();
            assert_eq!(h, h_rev, "case {case}: not symmetric");
            let expected_reason = match (a.contains(&true), b.contains(&true)) {
                (true, true) => UndefinedReason::None,
                (false, true) => UndefinedReason::EmptyPred,
                (true, false) => UndefinedReason::EmptyGt,
                (false, false) => UndefinedReason::BothEmpty,
            };
            assert_eq!(reason, expected_reason);
            let Some(h) = h else { continue };
            let oracle = common::brute_hd95(&a, &b, shape, spacing);
            assert!((h - oracle).abs() < 1e-6, "case {case}: {h} vs {oracle}");
            assert!(h <= brute_hausdorff(&a, &b, shape, spacing) + 1e-12);
            assert_eq!(dice(&pred, &gt, label).unwrap(), dice(&gt, &pred, label).unwrap());
            assert_eq!(hd95(&pred, &pred, label, spacing).unwrap().0, Some(0.0));
            assert_eq!(dice(&pred, &pred, label).unwrap(), Some(1.0));
        }
    }
}

#[test]
fn pooled_convention_matches_oracle() {
    let mut r = common::rng(32);
    let shape = [12, 10, 9];
    let spacing = [1.0, 1.5, 2.0];
    for _ in 0..20 {
        let pred = random_labels(&mut r, shape, spacing);
        let gt = random_labels(&mut r, shape, spacing);
        let (a, b) = (mask(&pred, 1), mask(&gt, 1));
        if !a.contains(&true) || !b.contains(&true) {
            continue;
        }
        let ba = common::brute_boundary(&a, shape);
        let bb = common::brute_boundary(&b, shape);
        let nearest = |p: &[usize; 3], set: &[[usize; 3]]| {
            set.iter()
                .map(|q| (0..3).map(|k| ((p[k] as f64 - q[k] as f64) * spacing[k]).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        };
        let mut all: Vec<f64> = ba.iter().map(|p| nearest(p, &bb)).chain(bb.iter().map(|p| nearest(p, &ba))).collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let oracle = all[(0.95 * all.len() as f64).ceil() as usize - 1];
        let h = hd95_with(&pred, &gt, 1, spacing, Hd95Convention::Pooled).unwrap().0.unwrap();
        assert!((h - oracle).abs() < 1e-9);
        let default = hd95(&pred, &gt, 1, spacing).unwrap().0.unwrap();
        assert!(h <= default + 1e-12);
    }
}

#[test]
fn case_records_match_single_calls() {
    let mut r = common::rng(33);
    let spacing = [1.2, 0.8, 2.0];
    let pred = random_labels(&mut r, [14, 12, 10], spacing);
    let gt = random_labels(&mut r, [14, 12, 10], spacing);
    let labels = [1, 2, 3, 9];
    let recs = evaluate_case("case", &pred, &gt, &labels, spacing, Hd95Convention::default()).unwrap();
    assert_eq!(recs.len(), 4);
    for (rec, &l) in recs.iter().zip(&labels) {
        assert_eq!(rec.label_id, l);
        let (h, reason) = hd95(&pred, &gt, l, spacing).unwrap();
        let d = dice(&pred, &gt, l).unwrap();
        assert_eq!((rec.dice, rec.hd95, rec.undefined_reason), (d, h, reason));
        assert_eq!(rec.undefined_reason == UndefinedReason::None, rec.dice.is_some() && rec.hd95.is_some());
    }
    assert_eq!(recs[3].undefined_reason, UndefinedReason::BothEmpty);

    let shifted = LabelVolume::new(
        pred.geometry().clone().with_origin([5.0, 0.0, 0.0]),
        pred.data().to_vec(),
    )
    .unwrap();
    assert!(evaluate_case("x", &shifted, &gt, &labels, spacing, Hd95Convention::default()).is_err());
}

#[test]
fn aggregate_bookkeeping() {
    let mut r = common::rng(34);
    let records: Vec<MetricRecord> = (0..200)
        .map(|i| {
            let defined = r.random::<f64>() < 0.8;
            MetricRecord {
                case_id: format!("c{i}"),
                label_id: r.random_range(1..5),
                dice: defined.then(|| r.random()),
                hd95: defined.then(|| r.random_range(0.0..30.0)),
                undefined_reason: if defined { UndefinedReason::None } else { UndefinedReason::EmptyPred },
            }
        })
        .collect();
    let agg = aggregate(&records);
    for (label, s) in &agg {
        let mine: Vec<&MetricRecord> = records.iter().filter(|r| r.label_id == *label).collect();
        assert_eq!(s.dice.n + s.dice.n_undefined, mine.len());
        let vals: Vec<f64> = mine.iter().filter_map(|r| r.dice).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        assert!((s.dice.mean.unwrap() - mean).abs() < 1e-12);
        assert!((s.dice.std.unwrap() - std).abs() < 1e-12);
    }
}

#[test]
fn kruskal_wallis_invariances() {
    let mut r = common::rng(35);
    for _ in 0..30 {
        let groups: Vec<Vec<f64>> = (0..r.random_range(2..5))
            .map(|g| (0..r.random_range(2..12)).map(|_| (r.random_range(0..20) + g) as f64).collect())
            .collect();
        let Ok(base) = kruskal_wallis(&groups) else { continue };
        // strictly monotone transforms keep the ranks
        for f in [|x: f64| x.exp(), |x: f64| 3.0 * x - 7.0, |x: f64| x.powi(3)] {
            let t: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|&x| f(x)).collect()).collect();
            let kw = kruskal_wallis(&t).unwrap();
            assert!((kw.h - base.h).abs() < 1e-9 && (kw.p_value - base.p_value).abs() < 1e-12);
        }
        let mut rev = groups.clone();
        rev.reverse();
        let kw = kruskal_wallis(&rev).unwrap();
        assert!((kw.h - base.h).abs() < 1e-9);
        if groups.len() == 3 {
            // two degrees of freedom: survival function is exp(-h/2)
            assert!((base.p_value - (-base.h / 2.0).exp()).abs() < 1e-9);
        }
    }
}

#[test]
fn kruskal_wallis_hand_example() {
    // ranks 1..6 split 3/3: mean ranks 2 and 5 around 3.5
    let kw = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    let hand = 12.0 / (6.0 * 7.0) * (3.0 * 1.5f64.powi(2) * 2.0);
    assert!((kw.h - hand).abs() < 1e-12);
    assert!((kw.h - 3.857).abs() < 1e-3);
}
