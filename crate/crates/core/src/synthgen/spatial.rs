use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::lattice::upsample;
use super::GenerationConfig;
use crate::error::{Error, Result};
use crate::seed;
use crate::volio::{Geometry, LabelVolume, Volume};

pub type Mat4 = [[f64; 4]; 4];

/// Random spatial augmentation: an affine map plus a smooth displacement
/// field (mm) sampled on the output grid.
///
/// Both act in a millimetre frame centred on the source volume and aligned
/// with its voxel axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialTransform {
    pub affine: Mat4,
    /// x-fastest over `shape`; empty means no displacement.
    pub displacement: Vec<[f32; 3]>,
    pub shape: [usize; 3],
}

fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

fn identity4() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    (0..4).for_each(|i| m[i][i] = 1.0);
    m
}

fn det3(m: &Mat4) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of an affine 4×4 (last row `0 0 0 1`).
pub fn invert_affine(m: &Mat4) -> Result<Mat4> {
    let det = det3(m);
    if !(det.abs() > 1e-9) {
        return Err(Error::Contract(format!("affine is not invertible (det = {det})")));
    }
    let mut inv = identity4();
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    inv[0][0] = cof(1, 2, 1, 2) / det;
    inv[0][1] = -cof(0, 2, 1, 2) / det;
    inv[0][2] = cof(0, 1, 1, 2) / det;
    inv[1][0] = -cof(1, 2, 0, 2) / det;
    inv[1][1] = cof(0, 2, 0, 2) / det;
    inv[1][2] = -cof(0, 1, 0, 2) / det;
    inv[2][0] = cof(1, 2, 0, 1) / det;
    inv[2][1] = -cof(0, 2, 0, 1) / det;
    inv[2][2] = cof(0, 1, 0, 1) / det;
    for r in 0..3 {
        inv[r][3] = -(0..3).map(|k| inv[r][k] * m[k][3]).sum::<f64>();
    }
    Ok(inv)
}

/// Parameters of the affine part, in draw order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    pub rotation_deg: [f64; 3],
    pub scale: [f64; 3],
    pub shear: [f64; 3],
    pub translation_mm: [f64; 3],
}

impl AffineParams {
    /// `translation · rotation(z·y·x) · shear · scale`.
    pub fn matrix(&self) -> Mat4 {
        let [ax, ay, az] = self.rotation_deg.map(f64::to_radians);
        let mut rx = identity4();
        rx[1][1] = ax.cos();
        rx[1][2] = -ax.sin();
        rx[2][1] = ax.sin();
        rx[2][2] = ax.cos();
        let mut ry = identity4();
        ry[0][0] = ay.cos();
        ry[0][2] = ay.sin();
        ry[2][0] = -ay.sin();
        ry[2][2] = ay.cos();
        let mut rz = identity4();
        rz[0][0] = az.cos();
        rz[0][1] = -az.sin();
        rz[1][0] = az.sin();
        rz[1][1] = az.cos();
        let mut sh = identity4();
        sh[0][1] = self.shear[0];
        sh[0][2] = self.shear[1];
        sh[1][2] = self.shear[2];
        let mut sc = identity4();
        (0..3).for_each(|i| sc[i][i] = self.scale[i]);
        let mut tr = identity4();
        (0..3).for_each(|i| tr[i][3] = self.translation_mm[i]);
        let rot = matmul(&rz, &matmul(&ry, &rx));
        matmul(&tr, &matmul(&rot, &matmul(&sh, &sc)))
    }
}

fn uniform(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

pub(crate) fn draw_affine(rng: &mut impl Rng, cfg: &GenerationConfig) -> AffineParams {
    let mut draw3 = |r: [f64; 2]| [uniform(rng, r), uniform(rng, r), uniform(rng, r)];
    let rotation_deg = draw3(cfg.rotation_range);
    let scale = draw3(cfg.scale_range);
    let shear = draw3(cfg.shear_range);
    let translation_mm = draw3(cfg.translation_range);
    AffineParams {
        rotation_deg,
        scale,
        shear,
        translation_mm,
    }
}

/// Draws a transform for `cfg.output_shape`.
///
/// Affine parameters are uniform on their ranges per axis; the displacement
/// is i.i.d. `N(0, deform_std²)` per component on a `deform_grid³` lattice,
/// trilinearly upsampled.
pub fn sample_transform(seed: u64, cfg: &GenerationConfig) -> SpatialTransform {
    let mut rng = seed::rng_from(seed, &[seed::stage::TRANSFORM]);
    let affine = draw_affine(&mut rng, cfg).matrix();
    let shape = cfg.output_shape;
    let displacement = if cfg.deform_std > 0.0 {
        let g = [cfg.deform_grid; 3];
        let nodes = g[0] * g[1] * g[2];
        let normal = Normal::new(0.0, cfg.deform_std).expect("validated deform_std");
        let fields: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let lattice: Vec<f64> = (0..nodes).map(|_| normal.sample(&mut rng)).collect();
                upsample(&lattice, g, shape)
            })
            .collect();
        (0..fields[0].len())
            .map(|i| [fields[0][i] as f32, fields[1][i] as f32, fields[2][i] as f32])
            .collect()
    } else {
        Vec::new()
    };
    SpatialTransform {
        affine,
        displacement,
        shape,
    }
}

impl SpatialTransform {
    pub fn identity(shape: [usize; 3]) -> Self {
        SpatialTransform {
            affine: identity4(),
            displacement: Vec::new(),
            shape,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.affine == identity4() && self.displacement.iter().all(|d| *d == [0.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        invert_affine(&self.affine)?;
        if !self.displacement.is_empty() && self.displacement.len() != self.shape.iter().product::<usize>() {
            return Err(Error::Contract("displacement does not cover its grid".into()));
        }
        if self.displacement.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Contract("displacement field is not finite".into()));
        }
        Ok(())
    }
}

/// Pulls labels through `t` onto `out_geometry` with nearest-neighbour
/// lookup: output voxel `x` takes the label at `affine⁻¹(x + displacement(x))`.
/// Samples falling outside the source grid become 0.
pub fn apply_transform_label(
    lv: &LabelVolume,
    t: &SpatialTransform,
    out_geometry: &Geometry,
) -> Result<LabelVolume> {
    t.validate()?;
    out_geometry.validate()?;
    if !t.displacement.is_empty() && t.shape != out_geometry.shape {
        return Err(Error::Contract(format!(
            "transform grid {:?} does not match output shape {:?}",
            t.shape, out_geometry.shape
        )));
    }
    let inv = invert_affine(&t.affine)?;
    let src = lv.geometry();
    let center = src.center_world();
    let n_in = src.shape;
    let half = [
        (n_in[0] as f64 - 1.0) / 2.0,
        (n_in[1] as f64 - 1.0) / 2.0,
        (n_in[2] as f64 - 1.0) / 2.0,
    ];

    // rel(i) = D_srcᵀ (world(i) - centre) = lin · i + off
    let mut lin = [[0.0; 3]; 3];
    let mut off = [0.0; 3];
    for a in 0..3 {
        for c in 0..3 {
            lin[a][c] = (0..3)
                .map(|r| src.direction[r][a] * out_geometry.direction[r][c])
                .sum::<f64>()
                * out_geometry.spacing[c];
        }
        off[a] = (0..3)
            .map(|r| src.direction[r][a] * (out_geometry.origin[r] - center[r]))
            .sum();
    }

    let data = lv.data();
    let shape = out_geometry.shape;
    let mut out = Vec::with_capacity(out_geometry.len());
    let mut idx = 0usize;
    for z in 0..shape[2] {
        for y in 0..shape[1] {
            for x in 0..shape[0] {
                let v = [x as f64, y as f64, z as f64];
                let mut q = [0.0; 3];
                for a in 0..3 {
                    q[a] = lin[a][0] * v[0] + lin[a][1] * v[1] + lin[a][2] * v[2] + off[a];
                }
                if let Some(d) = t.displacement.get(idx) {
                    q[0] += d[0] as f64;
                    q[1] += d[1] as f64;
                    q[2] += d[2] as f64;
                }
                let mut ijk = [0usize; 3];
                let mut inside = true;
                for a in 0..3 {
                    let s = inv[a][0] * q[0] + inv[a][1] * q[1] + inv[a][2] * q[2] + inv[a][3];
                    let f = (s / src.spacing[a] + half[a] + 0.5).floor();
                    if f < 0.0 || f >= n_in[a] as f64 {
                        inside = false;
                        break;
                    }
                    ijk[a] = f as usize;
                }
                out.push(if inside { data[src.index(ijk[0], ijk[1], ijk[2])] } else { 0 });
                idx += 1;
            }
        }
    }
    Ok(Volume::from_parts(out_geometry.clone(), out))
}
