//! Volumes, NIfTI-1 I/O and grid resampling.
//!
//! A [`Volume`] is an immutable 3-D grid plus its [`Geometry`]. Voxels are
//! stored x-fastest (`x + nx * (y + ny * z)`), the same order NIfTI uses on
//! disk. Images are `Volume<f32>`, label maps are `Volume<u32>`, so the
//! "labels are non-negative integers" invariant is carried by the type.

mod nifti;
mod resample;

pub use nifti::{read_image, read_label, write_volume, NiftiDatatype};
pub use resample::{crop_or_pad, resample, resize_trilinear, Interpolation};

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar stored in a volume.
pub trait Voxel: Copy + Debug + PartialEq + Send + Sync + 'static {
    const IS_LABEL: bool;
    fn to_f64(self) -> f64;
    /// Nearest representable voxel value.
    fn from_f64(v: f64) -> Self;
}

impl Voxel for f32 {
    const IS_LABEL: bool = false;
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Voxel for u32 {
    const IS_LABEL: bool = true;
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v.round().max(0.0) as u32
    }
}

/// Spatial metadata of a voxel grid, in RAS+ millimetres.
///
/// Column `c` of `direction` is the world-space unit vector of voxel axis `c`,
/// so the centre of voxel `(i, j, k)` sits at
/// `origin + direction * (spacing ⊙ [i, j, k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub shape: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub direction: [[f64; 3]; 3],
}

pub const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl Geometry {
    pub fn new(shape: [usize; 3], spacing: [f64; 3]) -> Self {
        Geometry {
            shape,
            spacing,
            origin: [0.0; 3],
            direction: IDENTITY3,
        }
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_direction(mut self, direction: [[f64; 3]; 3]) -> Self {
        self.direction = direction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.iter().any(|&n| n == 0) {
            return Err(Error::Validation(format!(
                "shape components must be >= 1, got {:?}",
                self.shape
            )));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Validation(format!(
                "spacing components must be positive, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Validation("origin must be finite".into()));
        }
        let d = &self.direction;
        for a in 0..3 {
            for b in a..3 {
                let dot: f64 = (0..3).map(|r| d[r][a] * d[r][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-6 {
                    return Err(Error::Validation(format!(
                        "direction matrix is not orthonormal: {d:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.shape[0] * (y + self.shape[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.shape[0];
        let ny = self.shape[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// World position of a (possibly fractional) voxel index.
    pub fn index_to_world(&self, ijk: [f64; 3]) -> [f64; 3] {
        let mut out = self.origin;
        for (r, o) in out.iter_mut().enumerate() {
            for c in 0..3 {
                *o += self.direction[r][c] * self.spacing[c] * ijk[c];
            }
        }
        out
    }

    /// Continuous voxel index of a world position.
    pub fn world_to_index(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1], p[2] - self.origin[2]];
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let proj: f64 = (0..3).map(|r| self.direction[r][c] * d[r]).sum();
            *o = proj / self.spacing[c];
        }
        out
    }

    /// World position of the geometric centre of the grid.
    pub fn center_world(&self) -> [f64; 3] {
        let mid = [
            (self.shape[0] as f64 - 1.0) / 2.0,
            (self.shape[1] as f64 - 1.0) / 2.0,
            (self.shape[2] as f64 - 1.0) / 2.0,
        ];
        self.index_to_world(mid)
    }

    /// A grid with the given shape and spacing sharing this grid's centre and
    /// axis orientation.
    pub fn centered_like(&self, shape: [usize; 3], spacing: [f64; 3]) -> Geometry {
        let center = self.center_world();
        let mut g = Geometry::new(shape, spacing).with_direction(self.direction);
        let half = [
            (shape[0] as f64 - 1.0) / 2.0,
            (shape[1] as f64 - 1.0) / 2.0,
            (shape[2] as f64 - 1.0) / 2.0,
        ];
        let offset = g.index_to_world(half);
        g.origin = [
            center[0] - offset[0],
            center[1] - offset[1],
            center[2] - offset[2],
        ];
        g
    }

    /// Same shape, and spacing/origin/direction equal within `tol`.
    pub fn approx_eq(&self, other: &Geometry, tol: f64) -> bool {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
        self.shape == other.shape
            && close(&self.spacing, &other.spacing)
            && close(&self.origin, &other.origin)
            && (0..3).all(|r| close(&self.direction[r], &other.direction[r]))
    }

    pub(crate) fn ensure_same(&self, other: &Geometry, what: &str) -> Result<()> {
        if self.approx_eq(other, 1e-4) {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "{what}: geometry mismatch ({:?} vs {:?})",
                self.shape, other.shape
            )))
        }
    }
}

/// An immutable voxel grid with spatial metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    geometry: Geometry,
    data: Vec<T>,
}

pub type ImageVolume = Volume<f32>;
pub type LabelVolume = Volume<u32>;

impl<T: Voxel> Volume<T> {
    pub fn new(geometry: Geometry, data: Vec<T>) -> Result<Self> {
        geometry.validate()?;
        if data.len() != geometry.len() {
            return Err(Error::Validation(format!(
                "data length {} does not match shape {:?}",
                data.len(),
                geometry.shape
            )));
        }
        Ok(Volume { geometry, data })
    }

    pub fn filled(geometry: Geometry, value: T) -> Result<Self> {
        let n = geometry.len();
        Volume::new(geometry, vec![value; n])
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> T) -> Result<Self> {
        let data = (0..geometry.len()).map(|i| f(geometry.coords(i))).collect();
        Volume::new(geometry, data)
    }

    /// Builds a volume whose geometry is already known to be valid.
    pub(crate) fn from_parts(geometry: Geometry, data: Vec<T>) -> Self {
        debug_assert_eq!(geometry.len(), data.len());
        Volume { geometry, data }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn shape(&self) -> [usize; 3] {
        self.geometry.shape
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geometry.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.geometry.index(x, y, z)]
    }

    /// Same geometry, voxel-wise mapped data.
    pub fn map<U: Voxel>(&self, f: impl Fn(T) -> U) -> Volume<U> {
        Volume {
            geometry: self.geometry.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn with_data<U: Voxel>(&self, data: Vec<U>) -> Result<Volume<U>> {
        Volume::new(self.geometry.clone(), data)
    }
}

impl LabelVolume {
    /// Sorted distinct label values.
    pub fn labels(&self) -> Vec<u32> {
        let mut seen: Vec<u32> = self.data.clone();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    pub fn count(&self, label: u32) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }
}

impl ImageVolume {
    /// `(min, max)` over all voxels.
    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}
