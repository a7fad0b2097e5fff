#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use synthabd_core::labelprep::{build_target_mapping, totalsegmentator_v1, LabelMapping, TargetSpec};
use synthabd_core::volio::{Geometry, ImageVolume, LabelVolume};

pub const ORGANS: [&str; 7] = [
    "liver",
    "spleen",
    "kidney_right",
    "kidney_left",
    "stomach",
    "vertebrae_L1",
    "vertebrae_L2",
];

pub fn source_id(name: &str) -> u32 {
    totalsegmentator_v1()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, id)| id)
        .unwrap()
}

pub fn base_mapping() -> LabelMapping {
    build_target_mapping(&totalsegmentator_v1(), &TargetSpec::default()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random abdomen-like phantom: air, a body ellipsoid with two soft-tissue
/// textures, and ellipsoidal organs carrying source label ids.
pub fn phantom(seed: u64, shape: [usize; 3], spacing: f64) -> (ImageVolume, LabelVolume) {
    let mut r = rng(seed);
    let g = Geometry::new(shape, [spacing; 3]);
    let c: [f64; 3] = std::array::from_fn(|a| (shape[a] as f64 - 1.0) / 2.0);
    let body: [f64; 3] = std::array::from_fn(|a| shape[a] as f64 * r.random_range(0.38..0.46));
    let organs: Vec<(u32, [f64; 3], [f64; 3], f64)> = ORGANS
        .iter()
        .map(|name| {
            let centre: [f64; 3] =
                std::array::from_fn(|a| c[a] + body[a] * r.random_range(-0.45..0.45));
            let radii: [f64; 3] = std::array::from_fn(|a| shape[a] as f64 * r.random_range(0.06..0.14));
            (source_id(name), centre, radii, r.random_range(20.0..200.0))
        })
        .collect();
    let inside = |p: [f64; 3], centre: [f64; 3], radii: [f64; 3]| {
        (0..3).map(|a| ((p[a] - centre[a]) / radii[a]).powi(2)).sum::<f64>() < 1.0
    };
    let label = LabelVolume::from_fn(g.clone(), |[x, y, z]| {
        let p = [x as f64, y as f64, z as f64];
        if !inside(p, c, body) {
            return 0;
        }
        organs
            .iter()
            .find(|o| inside(p, o.1, o.2))
            .map(|o| o.0)
            .unwrap_or(0)
    })
    .unwrap();
    let noise = Normal::new(0.0, 8.0).unwrap();
    let ct = ImageVolume::from_fn(g, |[x, y, z]| {
        let p = [x as f64, y as f64, z as f64];
        let l = label.get(x, y, z);
        let base = if let Some(o) = organs.iter().find(|o| o.0 == l && l != 0) {
            o.3
        } else if inside(p, c, body) {
            if (x / 3 + y / 3) % 2 == 0 { -90.0 } else { 30.0 }
        } else {
            -1000.0
        };
        (base + noise.sample(&mut r)) as f32
    })
    .unwrap();
    (ct, label)
}

/// Min-max normalised copy, the form clustering expects.
pub fn unit_ct(ct: &ImageVolume) -> ImageVolume {
    let (lo, hi) = ct.min_max();
    ct.map(|v| (v - lo) / (hi - lo))
}

/// Face-neighbour boundary, written independently of the library.
pub fn brute_boundary(mask: &[bool], shape: [usize; 3]) -> Vec<[usize; 3]> {
    let at = |x: i64, y: i64, z: i64| -> bool {
        if x < 0 || y < 0 || z < 0 || x >= shape[0] as i64 || y >= shape[1] as i64 || z >= shape[2] as i64 {
            return false;
        }
        mask[x as usize + shape[0] * (y as usize + shape[1] * z as usize)]
    };
    let mut out = Vec::new();
    for z in 0..shape[2] as i64 {
        for y in 0..shape[1] as i64 {
            for x in 0..shape[0] as i64 {
                if !at(x, y, z) {
                    continue;
                }
                let nb = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)];
                if nb.iter().any(|(dx, dy, dz)| !at(x + dx, y + dy, z + dz)) {
                    out.push([x as usize, y as usize, z as usize]);
                }
            }
        }
    }
    out
}

/// All-pairs directed distances, each direction's nearest-rank P95, max.
pub fn brute_hd95(a: &[bool], b: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> f64 {
    let ba = brute_boundary(a, shape);
    let bb = brute_boundary(b, shape);
    let directed = |from: &[[usize; 3]], to: &[[usize; 3]]| {
        let mut d: Vec<f64> = from
            .iter()
            .map(|p| {
                to.iter()
                    .map(|q| {
                        (0..3)
                            .map(|k| ((p[k] as f64 - q[k] as f64) * spacing[k]).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let rank = (0.95 * d.len() as f64).ceil() as usize;
        d[rank.max(1) - 1]
    };
    directed(&ba, &bb).max(directed(&bb, &ba))
}
