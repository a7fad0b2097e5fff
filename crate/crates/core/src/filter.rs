//! Separable Gaussian smoothing with mirror (`reflect`) boundaries.

use crate::volio::{ImageVolume, Volume};

/// Normalised 1-D Gaussian taps, truncated at four standard deviations.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma + 0.5) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-0.5 * (x as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Half-sample symmetric reflection: `d c b a | a b c d | d c b a`.
#[inline]
pub fn reflect_index(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

fn blur_axis(data: &mut [f32], shape: [usize; 3], axis: usize, kernel: &[f64]) {
    let n = shape[axis];
    let radius = (kernel.len() / 2) as i64;
    let stride = match axis {
        0 => 1,
        1 => shape[0],
        _ => shape[0] * shape[1],
    };
    let mut line = vec![0f64; n + 2 * radius as usize];
    let (oa, ob) = match axis {
        0 => (shape[1], shape[2]),
        1 => (shape[0], shape[2]),
        _ => (shape[0], shape[1]),
    };
    for b in 0..ob {
        for a in 0..oa {
            let start = match axis {
                0 => shape[0] * (a + shape[1] * b),
                1 => a + shape[0] * shape[1] * b,
                _ => a + shape[0] * b,
            };
            for (j, slot) in line.iter_mut().enumerate() {
                let src = reflect_index(j as i64 - radius, n);
                *slot = data[start + src * stride] as f64;
            }
            for i in 0..n {
                let acc: f64 = kernel
                    .iter()
                    .zip(&line[i..i + kernel.len()])
                    .map(|(w, v)| w * v)
                    .sum();
                data[start + i * stride] = acc as f32;
            }
        }
    }
}

/// Gaussian blur with per-axis standard deviation in voxels.
pub fn gaussian_blur(img: &ImageVolume, sigma_voxels: [f64; 3]) -> ImageVolume {
    let shape = img.shape();
    let mut data = img.data().to_vec();
    for (axis, &sigma) in sigma_voxels.iter().enumerate() {
        if sigma > 0.0 && shape[axis] > 1 {
            blur_axis(&mut data, shape, axis, &gaussian_kernel(sigma));
        }
    }
    Volume::from_parts(img.geometry().clone(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volio::Geometry;

    #[test]
    fn reflect_matches_mirror_convention() {
        let got: Vec<usize> = (-3..7).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        assert_eq!(reflect_index(-1, 1), 0);
        assert_eq!(reflect_index(5, 1), 0);
    }

    #[test]
    fn kernel_sums_to_one() {
        for s in [0.3, 1.0, 2.7] {
            let k = gaussian_kernel(s);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(k.len() % 2, 1);
        }
    }

    #[test]
    fn blur_preserves_constant_and_mass() {
        let g = Geometry::new([9, 5, 6], [1.0; 3]);
        let c = Volume::filled(g.clone(), 3.25f32).unwrap();
        let b = gaussian_blur(&c, [1.0, 2.0, 0.5]);
        assert!(b.data().iter().all(|&v| (v - 3.25).abs() < 1e-5));

        // reflect boundaries conserve total mass
        let r = Volume::from_fn(g, |[x, y, z]| ((x * 7 + y * 3 + z) % 5) as f32).unwrap();
        let br = gaussian_blur(&r, [1.3, 0.8, 2.1]);
        let s0: f64 = r.data().iter().map(|&v| v as f64).sum();
        let s1: f64 = br.data().iter().map(|&v| v as f64).sum();
        assert!((s0 - s1).abs() < 1e-3);
    }
}
