//! Domain-randomised image synthesis from generation label maps.
//!
//! One sample is produced by a fixed chain of stages, each a pure function of
//! its input and a stage seed derived from the sample seed:
//!
//! 1. [`sample_transform`] + [`apply_transform_label`]: random affine and
//!    smooth deformation of the generation labels onto the output grid;
//! 2. [`sample_intensities`]: a Gaussian mixture rendering with random
//!    per-label mean and standard deviation;
//! 3. [`apply_bias_field`]: smooth multiplicative inhomogeneity;
//! 4. [`simulate_resolution`]: blur and resample through a random
//!    acquisition spacing;
//! 5. [`normalize_gamma`]: min-max scaling and a random gamma.
//!
//! The target label map is the deformed generation map pushed through the
//! [`LabelMapping`], so image and labels stay aligned by construction.

mod appearance;
mod lattice;
mod spatial;
mod stream;

pub use appearance::{
    apply_bias_field, degrade_resolution, draw_acquisition_spacing, draw_gamma, label_params,
    normalize_gamma, sample_bias_field, sample_intensities, simulate_resolution,
};
pub use lattice::{lattice_coord, upsample as upsample_lattice};
pub use spatial::{
    apply_transform_label, invert_affine, sample_transform, AffineParams, Mat4, SpatialTransform,
};
pub use stream::{Batch, Sample, SampleStream};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelprep::{apply_mapping, LabelMapping};
use crate::seed;
use crate::volio::{Geometry, ImageVolume, LabelVolume};

/// Toggles for the appearance stages after intensity sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Stages {
    pub bias: bool,
    pub resolution: bool,
    pub gamma: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            bias: true,
            resolution: true,
            gamma: true,
        }
    }
}

/// Randomisation hyperparameters. Ranges are `[lo, hi]`, drawn uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub mean_range: [f64; 2],
    pub std_range: [f64; 2],
    pub rotation_range: [f64; 2],
    pub scale_range: [f64; 2],
    pub shear_range: [f64; 2],
    pub translation_range: [f64; 2],
    pub deform_grid: usize,
    pub deform_std: f64,
    pub bias_grid: usize,
    pub bias_std: f64,
    pub spacing_range: [f64; 2],
    /// Blur std per axis, in output voxels, is `blur_factor · acquisition / output` spacing.
    pub blur_factor: f64,
    pub gamma_std: f64,
    pub output_shape: [usize; 3],
    pub output_spacing: [f64; 3],
    pub stages: Stages,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            mean_range: [0.0, 255.0],
            std_range: [1.0, 35.0],
            rotation_range: [-15.0, 15.0],
            scale_range: [0.85, 1.15],
            shear_range: [-0.012, 0.012],
            translation_range: [-10.0, 10.0],
            deform_grid: 6,
            deform_std: 4.0,
            bias_grid: 4,
            bias_std: 0.5,
            spacing_range: [1.5, 9.0],
            blur_factor: 0.42,
            gamma_std: 0.4,
            output_shape: [160, 160, 128],
            output_spacing: [1.5; 3],
            stages: Stages::default(),
        }
    }
}

impl GenerationConfig {
    /// No spatial or appearance randomisation: samples are plain mixture
    /// renderings that differ only through voxel noise and the per-label
    /// `(μ, σ)` draws.
    pub fn frozen() -> Self {
        GenerationConfig {
            rotation_range: [0.0, 0.0],
            scale_range: [1.0, 1.0],
            shear_range: [0.0, 0.0],
            translation_range: [0.0, 0.0],
            deform_std: 0.0,
            bias_std: 0.0,
            gamma_std: 0.0,
            stages: Stages {
                bias: false,
                resolution: false,
                gamma: false,
            },
            ..GenerationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("mean_range", self.mean_range),
            ("std_range", self.std_range),
            ("rotation_range", self.rotation_range),
            ("scale_range", self.scale_range),
            ("shear_range", self.shear_range),
            ("translation_range", self.translation_range),
            ("spacing_range", self.spacing_range),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("{name} must satisfy lo <= hi, got [{lo}, {hi}]")));
            }
        }
        if !(self.std_range[0] > 0.0) {
            return Err(Error::Config("std_range lower bound must be > 0".into()));
        }
        if !(self.scale_range[0] > 0.0) || !(self.spacing_range[0] > 0.0) {
            return Err(Error::Config("scale_range and spacing_range must be positive".into()));
        }
        if self.deform_grid < 2 || self.bias_grid < 2 {
            return Err(Error::Config("deform_grid and bias_grid must be >= 2".into()));
        }
        for (name, v) in [
            ("deform_std", self.deform_std),
            ("bias_std", self.bias_std),
            ("gamma_std", self.gamma_std),
            ("blur_factor", self.blur_factor),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if self.output_shape.iter().any(|&n| n == 0) {
            return Err(Error::Config("output_shape must be >= 1 per axis".into()));
        }
        if self.output_spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config("output_spacing must be positive".into()));
        }
        Ok(())
    }

    /// Output grid for a source label map: `output_shape` at
    /// `output_spacing`, centred on the source and sharing its orientation.
    pub fn output_geometry(&self, source: &Geometry) -> Geometry {
        source.centered_like(self.output_shape, self.output_spacing)
    }
}

/// Synthesises one `(image, target labels)` pair.
pub fn generate_sample(
    gen_lv: &LabelVolume,
    mapping: &LabelMapping,
    seed: u64,
    cfg: &GenerationConfig,
) -> Result<(ImageVolume, LabelVolume)> {
    cfg.validate()?;
    if let Some(l) = gen_lv
        .labels()
        .into_iter()
        .find(|&l| l != 0 && !mapping.generation_to_target.contains_key(&l))
    {
        return Err(Error::Contract(format!("generation label {l} is not covered by the mapping")));
    }
    let stage_seed = |tag: u64| seed::derive_seed(seed, &[tag]);

    let out_geometry = cfg.output_geometry(gen_lv.geometry());
    let transform = sample_transform(stage_seed(seed::stage::TRANSFORM), cfg);
    let deformed = apply_transform_label(gen_lv, &transform, &out_geometry)?;

    let mut image = sample_intensities(&deformed, stage_seed(seed::stage::INTENSITY), cfg);
    if cfg.stages.bias {
        image = apply_bias_field(&image, stage_seed(seed::stage::BIAS), cfg);
    }
    if cfg.stages.resolution {
        image = simulate_resolution(&image, stage_seed(seed::stage::RESOLUTION), cfg)?;
    }
    if cfg.stages.gamma {
        image = normalize_gamma(&image, stage_seed(seed::stage::GAMMA), cfg)?;
    }
    let target = apply_mapping(&deformed, mapping);
    Ok((image, target))
}

/// The intensity seed `generate_sample` hands to [`sample_intensities`] and
/// therefore to [`label_params`].
pub fn intensity_seed(sample_seed: u64) -> u64 {
    seed::derive_seed(sample_seed, &[seed::stage::INTENSITY])
}
