use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::lattice::upsample;
use super::GenerationConfig;
use crate::error::{Error, Result};
use crate::filter::gaussian_blur;
use crate::seed;
use crate::volio::{resize_trilinear, ImageVolume, LabelVolume, Volume};

fn uniform(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

/// Mean and standard deviation drawn for one generation label. Each label
/// has its own stream, so the draw does not depend on which other labels are
/// present.
pub fn label_params(seed: u64, label: u32, cfg: &GenerationConfig) -> (f64, f64) {
    let mut rng = seed::rng_from(seed, &[seed::stage::LABEL_PARAMS, label as u64]);
    let mu = uniform(&mut rng, cfg.mean_range);
    let sigma = uniform(&mut rng, cfg.std_range);
    (mu, sigma)
}

/// Renders a label map as a Gaussian mixture image: voxel `v` with label
/// `k` gets an independent draw from `N(μ_k, σ_k²)`.
pub fn sample_intensities(gen_lv: &LabelVolume, seed: u64, cfg: &GenerationConfig) -> ImageVolume {
    let labels = gen_lv.labels();
    let max = labels.last().copied().unwrap_or(0) as usize;
    let mut params = vec![(0.0f64, 0.0f64); max + 1];
    for &l in &labels {
        params[l as usize] = label_params(seed, l, cfg);
    }
    let mut rng = seed::rng_from(seed, &[seed::stage::INTENSITY]);
    let data = gen_lv
        .data()
        .iter()
        .map(|&l| {
            let (mu, sigma) = params[l as usize];
            let z: f64 = StandardNormal.sample(&mut rng);
            (mu + sigma * z) as f32
        })
        .collect();
    Volume::from_parts(gen_lv.geometry().clone(), data)
}

/// Multiplicative bias field for `shape`: `exp` of a smooth log-field drawn
/// i.i.d. `N(0, bias_std²)` on a `bias_grid³` lattice.
pub fn sample_bias_field(shape: [usize; 3], seed: u64, cfg: &GenerationConfig) -> Vec<f64> {
    let g = [cfg.bias_grid; 3];
    let n = g.iter().product::<usize>();
    if cfg.bias_std == 0.0 {
        return vec![1.0; shape.iter().product()];
    }
    let mut rng = seed::rng_from(seed, &[seed::stage::BIAS]);
    let normal = Normal::new(0.0, cfg.bias_std).expect("validated bias_std");
    let lattice: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let mut field = upsample(&lattice, g, shape);
    field.iter_mut().for_each(|v| *v = v.exp());
    field
}

pub fn apply_bias_field(img: &ImageVolume, seed: u64, cfg: &GenerationConfig) -> ImageVolume {
    if cfg.bias_std == 0.0 {
        return img.clone();
    }
    let field = sample_bias_field(img.shape(), seed, cfg);
    let data = img
        .data()
        .iter()
        .zip(&field)
        .map(|(&v, &b)| (v as f64 * b) as f32)
        .collect();
    Volume::from_parts(img.geometry().clone(), data)
}

/// Acquisition spacing drawn per axis for resolution simulation.
pub fn draw_acquisition_spacing(seed: u64, cfg: &GenerationConfig) -> [f64; 3] {
    let mut rng = seed::rng_from(seed, &[seed::stage::RESOLUTION]);
    [
        uniform(&mut rng, cfg.spacing_range),
        uniform(&mut rng, cfg.spacing_range),
        uniform(&mut rng, cfg.spacing_range),
    ]
}

/// Blur / downsample / upsample with a fixed acquisition spacing.
pub fn degrade_resolution(img: &ImageVolume, acquisition: [f64; 3], blur_factor: f64) -> Result<ImageVolume> {
    let sp = img.spacing();
    let shape = img.shape();
    let sigma: [f64; 3] = std::array::from_fn(|a| blur_factor * acquisition[a] / sp[a]);
    let blurred = gaussian_blur(img, sigma);
    let low: [usize; 3] =
        std::array::from_fn(|a| ((shape[a] as f64 * sp[a] / acquisition[a]).round() as usize).max(1));
    if low == shape {
        return Ok(blurred);
    }
    let down = resize_trilinear(&blurred, low)?;
    let up = resize_trilinear(&down, shape)?;
    Ok(Volume::from_parts(img.geometry().clone(), up.into_data()))
}

/// Simulates a coarser, anisotropic acquisition at a random spacing; the
/// output keeps the input geometry.
pub fn simulate_resolution(img: &ImageVolume, seed: u64, cfg: &GenerationConfig) -> Result<ImageVolume> {
    degrade_resolution(img, draw_acquisition_spacing(seed, cfg), cfg.blur_factor)
}

/// The log-exponent `γ` of the gamma transform.
pub fn draw_gamma(seed: u64, cfg: &GenerationConfig) -> f64 {
    if cfg.gamma_std == 0.0 {
        return 0.0;
    }
    let mut rng = seed::rng_from(seed, &[seed::stage::GAMMA]);
    Normal::new(0.0, cfg.gamma_std)
        .expect("validated gamma_std")
        .sample(&mut rng)
}

/// Min-max rescale to `[0, 1]` followed by `x ↦ x^exp(γ)`.
pub fn normalize_gamma(img: &ImageVolume, seed: u64, cfg: &GenerationConfig) -> Result<ImageVolume> {
    let (lo, hi) = img.min_max();
    if !(hi > lo) {
        return Err(Error::DegenerateNormalization(lo as f64));
    }
    let exponent = draw_gamma(seed, cfg).exp();
    let (lo, range) = (lo as f64, hi as f64 - lo as f64);
    Ok(img.map(|v| {
        let x = ((v as f64 - lo) / range).clamp(0.0, 1.0);
        x.powf(exponent) as f32
    }))
}
