use serde::{Deserialize, Serialize};

use super::{Geometry, ImageVolume, Volume, Voxel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Trilinear,
}

/// Per-axis lookup for one output coordinate: two source taps and the weight
/// of the upper tap.
#[derive(Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    w: f64,
}

fn axis_taps(n_out: usize, n_in: usize, scale: f64, interp: Interpolation) -> Vec<Tap> {
    let last = (n_in - 1) as f64;
    (0..n_out)
        .map(|i| {
            // voxel-corner alignment: output cell edges map onto input cell edges
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            match interp {
                Interpolation::Nearest => {
                    let k = (src + 0.5).floor().min(last) as usize;
                    Tap { lo: k, hi: k, w: 0.0 }
                }
                Interpolation::Trilinear => {
                    let lo = src.floor() as usize;
                    let hi = (lo + 1).min(n_in - 1);
                    Tap { lo, hi, w: src - lo as f64 }
                }
            }
        })
        .collect()
}

/// Resamples onto `out_shape`, where one output voxel spans `scale[a]` input
/// voxels along axis `a`. Out-of-range samples are clamped to the edge.
fn regrid<T: Voxel>(
    v: &Volume<T>,
    out_shape: [usize; 3],
    scale: [f64; 3],
    out_spacing: [f64; 3],
    interp: Interpolation,
) -> Volume<T> {
    let g = v.geometry();
    let taps: Vec<Vec<Tap>> = (0..3)
        .map(|a| axis_taps(out_shape[a], g.shape[a], scale[a], interp))
        .collect();

    let first = [0.5 * scale[0] - 0.5, 0.5 * scale[1] - 0.5, 0.5 * scale[2] - 0.5];
    let out_geom = Geometry {
        shape: out_shape,
        spacing: out_spacing,
        origin: g.index_to_world(first),
        direction: g.direction,
    };

    let src = v.data();
    let mut data = Vec::with_capacity(out_geom.len());
    match interp {
        Interpolation::Nearest => {
            for tz in &taps[2] {
                for ty in &taps[1] {
                    let row = g.index(0, ty.lo, tz.lo);
                    data.extend(taps[0].iter().map(|tx| src[row + tx.lo]));
                }
            }
        }
        Interpolation::Trilinear => {
            for tz in &taps[2] {
                for ty in &taps[1] {
                    let r00 = g.index(0, ty.lo, tz.lo);
                    let r10 = g.index(0, ty.hi, tz.lo);
                    let r01 = g.index(0, ty.lo, tz.hi);
                    let r11 = g.index(0, ty.hi, tz.hi);
                    for tx in &taps[0] {
                        let lerp_x = |row: usize| {
                            let a = src[row + tx.lo].to_f64();
                            let b = src[row + tx.hi].to_f64();
                            a + (b - a) * tx.w
                        };
                        let c0 = lerp_x(r00) * (1.0 - ty.w) + lerp_x(r10) * ty.w;
                        let c1 = lerp_x(r01) * (1.0 - ty.w) + lerp_x(r11) * ty.w;
                        data.push(T::from_f64(c0 * (1.0 - tz.w) + c1 * tz.w));
                    }
                }
            }
        }
    }
    Volume::from_parts(out_geom, data)
}

/// Resamples a volume to a new voxel spacing, preserving its physical extent.
///
/// Output shape per axis is `round(n * spacing / target)`, at least 1. Voxel
/// corners of the first and last cells are aligned with the input extent.
/// Label maps only accept [`Interpolation::Nearest`].
pub fn resample<T: Voxel>(
    v: &Volume<T>,
    target_spacing: [f64; 3],
    interp: Interpolation,
) -> Result<Volume<T>> {
    if target_spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Contract(format!(
            "target spacing must be positive, got {target_spacing:?}"
        )));
    }
    if T::IS_LABEL && interp != Interpolation::Nearest {
        return Err(Error::Contract(
            "label maps can only be resampled with nearest-neighbour interpolation".into(),
        ));
    }
    let g = v.geometry();
    let mut shape = [0; 3];
    let mut scale = [0.0; 3];
    for a in 0..3 {
        let extent = g.shape[a] as f64 * g.spacing[a];
        shape[a] = ((extent / target_spacing[a]).round() as usize).max(1);
        scale[a] = target_spacing[a] / g.spacing[a];
    }
    Ok(regrid(v, shape, scale, target_spacing, interp))
}

/// Trilinear resize to an explicit shape, keeping the physical extent.
pub fn resize_trilinear(v: &ImageVolume, shape: [usize; 3]) -> Result<ImageVolume> {
    if shape.iter().any(|&n| n == 0) {
        return Err(Error::Contract(format!("resize target {shape:?} has an empty axis")));
    }
    let g = v.geometry();
    let mut scale = [0.0; 3];
    let mut spacing = [0.0; 3];
    for a in 0..3 {
        scale[a] = g.shape[a] as f64 / shape[a] as f64;
        spacing[a] = g.spacing[a] * scale[a];
    }
    Ok(regrid(v, shape, scale, spacing, Interpolation::Trilinear))
}

/// Centre-crops and/or pads each axis to `target_shape`.
///
/// Odd remainders put the extra voxel on the high side. The origin moves so
/// every retained voxel keeps its world position.
pub fn crop_or_pad<T: Voxel>(v: &Volume<T>, target_shape: [usize; 3], fill: T) -> Result<Volume<T>> {
    if target_shape.iter().any(|&n| n == 0) {
        return Err(Error::Contract(format!(
            "target shape must be >= 1 per axis, got {target_shape:?}"
        )));
    }
    let g = v.geometry();
    if g.shape == target_shape {
        return Ok(v.clone());
    }
    // input index = output index + offset
    let offset: [i64; 3] = std::array::from_fn(|a| {
        let n = g.shape[a] as i64;
        let t = target_shape[a] as i64;
        if n >= t {
            (n - t) / 2
        } else {
            -((t - n) / 2)
        }
    });
    let out_geom = Geometry {
        shape: target_shape,
        spacing: g.spacing,
        origin: g.index_to_world([offset[0] as f64, offset[1] as f64, offset[2] as f64]),
        direction: g.direction,
    };
    let src = v.data();
    let mut data = Vec::with_capacity(out_geom.len());
    let inside = |i: usize, a: usize| -> Option<usize> {
        let s = i as i64 + offset[a];
        (s >= 0 && s < g.shape[a] as i64).then_some(s as usize)
    };
    for z in 0..target_shape[2] {
        let sz = inside(z, 2);
        for y in 0..target_shape[1] {
            let sy = inside(y, 1);
            match (sy, sz) {
                (Some(sy), Some(sz)) => {
                    let row = g.index(0, sy, sz);
                    data.extend((0..target_shape[0]).map(|x| match inside(x, 0) {
                        Some(sx) => src[row + sx],
                        None => fill,
                    }));
                }
                _ => data.extend(std::iter::repeat_n(fill, target_shape[0])),
            }
        }
    }
    Ok(Volume::from_parts(out_geom, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volio::LabelVolume;

    fn ramp(shape: [usize; 3], spacing: [f64; 3]) -> ImageVolume {
        Volume::from_fn(Geometry::new(shape, spacing), |[x, y, z]| {
            (x + 10 * y + 100 * z) as f32
        })
        .unwrap()
    }

    #[test]
    fn factor_two_shape_law() {
        let v = Volume::filled(Geometry::new([100, 100, 100], [3.0; 3]), 0u32).unwrap();
        let r = resample(&v, [1.5; 3], Interpolation::Nearest).unwrap();
        assert_eq!(r.shape(), [200, 200, 200]);
        assert_eq!(r.spacing(), [1.5; 3]);
    }

    #[test]
    fn constant_preserved() {
        let v = Volume::filled(Geometry::new([7, 9, 5], [1.2, 0.8, 3.0]), 42.5f32).unwrap();
        for t in [[1.5; 3], [0.33, 2.0, 5.1]] {
            let r = resample(&v, t, Interpolation::Trilinear).unwrap();
            assert!(r.data().iter().all(|&x| (x - 42.5).abs() < 1e-6));
        }
    }

    #[test]
    fn trilinear_on_labels_is_rejected() {
        let v: LabelVolume = Volume::filled(Geometry::new([2, 2, 2], [1.0; 3]), 1).unwrap();
        assert!(matches!(
            resample(&v, [0.5; 3], Interpolation::Trilinear),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn identity_spacing_is_identity() {
        let v = ramp([5, 6, 7], [1.5; 3]);
        let r = resample(&v, [1.5; 3], Interpolation::Trilinear).unwrap();
        assert_eq!(r, v);
    }

    #[test]
    fn extent_preserved_within_one_voxel() {
        let v = ramp([17, 9, 4], [1.1, 2.3, 0.7]);
        let t = [1.5, 1.5, 1.5];
        let r = resample(&v, t, Interpolation::Trilinear).unwrap();
        for a in 0..3 {
            let e_in = v.shape()[a] as f64 * v.spacing()[a];
            let e_out = r.shape()[a] as f64 * t[a];
            assert!((e_in - e_out).abs() <= t[a]);
        }
        // output cells stay centred on the input extent
        let c_in = v.geometry().center_world();
        let c_out = r.geometry().center_world();
        for a in 0..3 {
            assert!((c_in[a] - c_out[a]).abs() <= t[a] / 2.0 + 1e-9);
        }
    }

    #[test]
    fn pad_centres_data() {
        let v = Volume::filled(Geometry::new([4, 4, 4], [1.0; 3]), 7u32).unwrap();
        let p = crop_or_pad(&v, [6, 6, 6], 0).unwrap();
        for z in 0..6 {
            for y in 0..6 {
                for x in 0..6 {
                    let inner = [x, y, z].iter().all(|&c| (1..5).contains(&c));
                    assert_eq!(p.get(x, y, z), if inner { 7 } else { 0 });
                }
            }
        }
        assert_eq!(p.geometry().origin, [-1.0, -1.0, -1.0]);
    }

    #[test]
    fn odd_remainder_goes_high() {
        let v = ramp([4, 1, 1], [1.0; 3]);
        let p = crop_or_pad(&v, [7, 1, 1], -1.0).unwrap();
        assert_eq!(p.data(), &[-1.0, 0.0, 1.0, 2.0, 3.0, -1.0, -1.0]);
        let c = crop_or_pad(&v, [1, 1, 1], -1.0).unwrap();
        assert_eq!(c.data(), &[1.0]);
    }

    #[test]
    fn crop_then_pad_keeps_interior() {
        let v = ramp([30, 8, 6], [1.5; 3]);
        let c = crop_or_pad(&v, [25, 8, 6], 0.0).unwrap();
        let back = crop_or_pad(&c, [30, 8, 6], 0.0).unwrap();
        for z in 0..6 {
            for y in 0..8 {
                for x in 0..30 {
                    let want = if (2..27).contains(&x) { v.get(x, y, z) } else { 0.0 };
                    assert_eq!(back.get(x, y, z), want);
                }
            }
        }
        assert!(back.geometry().approx_eq(v.geometry(), 1e-12));
    }

    #[test]
    fn retained_voxels_keep_world_position() {
        let v = ramp([9, 4, 3], [1.5, 2.0, 2.5]);
        let c = crop_or_pad(&v, [5, 6, 3], 0.0).unwrap();
        // input voxel (2, 0, 0) lands on output (0, 1, 0)
        let w_in = v.geometry().index_to_world([2.0, 0.0, 0.0]);
        let w_out = c.geometry().index_to_world([0.0, 1.0, 0.0]);
        assert_eq!(c.get(0, 1, 0), v.get(2, 0, 0));
        for a in 0..3 {
            assert!((w_in[a] - w_out[a]).abs() < 1e-12);
        }
    }
}
