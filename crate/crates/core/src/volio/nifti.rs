//! Minimal NIfTI-1 single-file (`.nii` / `.nii.gz`) reader and writer.
//!
//! Little-endian only, 3-D only, no extensions. Datatypes uint8, int16,
//! int32 and float32. Orientation is taken from the sform when present,
//! otherwise from the qform, otherwise the grid is axis-aligned at the origin.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{Geometry, ImageVolume, LabelVolume, Volume, Voxel};
use crate::error::{Error, Result};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;
const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// On-disk voxel encodings this module understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiftiDatatype {
    Uint8,
    Int16,
    Int32,
    Float32,
}

impl NiftiDatatype {
    pub fn code(self) -> i16 {
        match self {
            NiftiDatatype::Uint8 => 2,
            NiftiDatatype::Int16 => 4,
            NiftiDatatype::Int32 => 8,
            NiftiDatatype::Float32 => 16,
        }
    }

    pub fn from_code(code: i16) -> Result<Self> {
        match code {
            2 => Ok(NiftiDatatype::Uint8),
            4 => Ok(NiftiDatatype::Int16),
            8 => Ok(NiftiDatatype::Int32),
            16 => Ok(NiftiDatatype::Float32),
            other => Err(Error::UnsupportedDatatype(other)),
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            NiftiDatatype::Uint8 => 1,
            NiftiDatatype::Int16 => 2,
            NiftiDatatype::Int32 | NiftiDatatype::Float32 => 4,
        }
    }
}

struct Header {
    shape: [usize; 3],
    datatype: NiftiDatatype,
    pixdim: [f32; 8],
    vox_offset: usize,
    scl_slope: f32,
    scl_inter: f32,
    qform_code: i16,
    sform_code: i16,
    quatern: [f32; 3],
    qoffset: [f32; 3],
    srow: [[f32; 4]; 3],
}

fn i16_at(b: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([b[off], b[off + 1]])
}

fn i32_at(b: &[u8], off: usize) -> i32 {
    i32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn parse_header(b: &[u8]) -> Result<Header> {
    if b.len() < HEADER_SIZE {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than a NIfTI-1 header",
            b.len()
        )));
    }
    let sizeof_hdr = i32_at(b, 0);
    if sizeof_hdr != HEADER_SIZE as i32 {
        if i32::from_be_bytes(b[0..4].try_into().unwrap()) == HEADER_SIZE as i32 {
            return Err(Error::Format("big-endian NIfTI files are not supported".into()));
        }
        return Err(Error::Format(format!("sizeof_hdr is {sizeof_hdr}, expected 348")));
    }
    if &b[344..348] != MAGIC_SINGLE {
        return Err(Error::Format(
            "missing 'n+1' magic (only single-file NIfTI-1 is supported)".into(),
        ));
    }

    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = i16_at(b, 40 + 2 * i);
    }
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(Error::Format(format!("dim[0] = {ndim} is out of range")));
    }
    let ndim = ndim as usize;
    let mut shape = [1usize; 3];
    for axis in 0..ndim {
        let n = dim[axis + 1];
        if n < 1 {
            return Err(Error::Format(format!("dim[{}] = {n} must be >= 1", axis + 1)));
        }
        if axis < 3 {
            shape[axis] = n as usize;
        } else if n > 1 {
            return Err(Error::Format(format!(
                "only 3-D volumes are supported (dim[{}] = {n})",
                axis + 1
            )));
        }
    }

    let datatype = NiftiDatatype::from_code(i16_at(b, 70))?;
    let mut pixdim = [0f32; 8];
    for (i, p) in pixdim.iter_mut().enumerate() {
        *p = f32_at(b, 76 + 4 * i);
    }
    let vox_offset = f32_at(b, 108);
    if !(vox_offset.is_finite() && vox_offset >= HEADER_SIZE as f32) {
        return Err(Error::Format(format!("invalid vox_offset {vox_offset}")));
    }

    let mut srow = [[0f32; 4]; 3];
    for (r, row) in srow.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = f32_at(b, 280 + 16 * r + 4 * c);
        }
    }

    Ok(Header {
        shape,
        datatype,
        pixdim,
        vox_offset: vox_offset as usize,
        scl_slope: f32_at(b, 112),
        scl_inter: f32_at(b, 116),
        qform_code: i16_at(b, 252),
        sform_code: i16_at(b, 254),
        quatern: [f32_at(b, 256), f32_at(b, 260), f32_at(b, 264)],
        qoffset: [f32_at(b, 268), f32_at(b, 272), f32_at(b, 276)],
        srow,
    })
}

/// Gram-Schmidt on the columns of `m`.
fn orthonormalize(m: [[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let mut cols = [[0.0; 3]; 3];
    for c in 0..3 {
        let mut v = [m[0][c], m[1][c], m[2][c]];
        for prev in cols.iter().take(c) {
            let dot: f64 = (0..3).map(|r| v[r] * prev[r]).sum();
            for r in 0..3 {
                v[r] -= dot * prev[r];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return Err(Error::Format("degenerate orientation matrix".into()));
        }
        cols[c] = [v[0] / norm, v[1] / norm, v[2] / norm];
    }
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = cols[c][r];
        }
    }
    Ok(out)
}

fn quaternion_to_rotation(b: f64, c: f64, d: f64, qfac: f64) -> [[f64; 3]; 3] {
    let mut a = 1.0 - (b * b + c * c + d * d);
    let (a, b, c, d) = if a < 1e-7 {
        let n = (b * b + c * c + d * d).sqrt();
        (0.0, b / n, c / n, d / n)
    } else {
        a = a.sqrt();
        (a, b, c, d)
    };
    [
        [
            a * a + b * b - c * c - d * d,
            2.0 * (b * c - a * d),
            2.0 * (b * d + a * c) * qfac,
        ],
        [
            2.0 * (b * c + a * d),
            a * a + c * c - b * b - d * d,
            2.0 * (c * d - a * b) * qfac,
        ],
        [
            2.0 * (b * d - a * c),
            2.0 * (c * d + a * b),
            (a * a + d * d - c * c - b * b) * qfac,
        ],
    ]
}

/// Inverse of [`quaternion_to_rotation`]: returns `(b, c, d, qfac)`.
fn rotation_to_quaternion(m: &[[f64; 3]; 3]) -> (f64, f64, f64, f64) {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut r = *m;
    let qfac = if det < 0.0 {
        for row in r.iter_mut() {
            row[2] = -row[2];
        }
        -1.0
    } else {
        1.0
    };
    let trace = r[0][0] + r[1][1] + r[2][2] + 1.0;
    let (mut a, mut b, mut c, mut d);
    if trace > 0.5 {
        a = 0.5 * trace.sqrt();
        b = 0.25 * (r[2][1] - r[1][2]) / a;
        c = 0.25 * (r[0][2] - r[2][0]) / a;
        d = 0.25 * (r[1][0] - r[0][1]) / a;
    } else {
        let xd = 1.0 + r[0][0] - (r[1][1] + r[2][2]);
        let yd = 1.0 + r[1][1] - (r[0][0] + r[2][2]);
        let zd = 1.0 + r[2][2] - (r[0][0] + r[1][1]);
        if xd > 1.0 {
            b = 0.5 * xd.sqrt();
            c = 0.25 * (r[0][1] + r[1][0]) / b;
            d = 0.25 * (r[0][2] + r[2][0]) / b;
            a = 0.25 * (r[2][1] - r[1][2]) / b;
        } else if yd > 1.0 {
            c = 0.5 * yd.sqrt();
            b = 0.25 * (r[0][1] + r[1][0]) / c;
            d = 0.25 * (r[1][2] + r[2][1]) / c;
            a = 0.25 * (r[0][2] - r[2][0]) / c;
        } else {
            d = 0.5 * zd.sqrt();
            b = 0.25 * (r[0][2] + r[2][0]) / d;
            c = 0.25 * (r[1][2] + r[2][1]) / d;
            a = 0.25 * (r[1][0] - r[0][1]) / d;
        }
        if a < 0.0 {
            b = -b;
            c = -c;
            d = -d;
            a = -a;
        }
    }
    let _ = a;
    (b, c, d, qfac)
}

fn header_geometry(h: &Header) -> Result<Geometry> {
    let geometry = if h.sform_code > 0 {
        let mut lin = [[0.0; 3]; 3];
        let mut spacing = [0.0; 3];
        for c in 0..3 {
            let col: Vec<f64> = (0..3).map(|r| h.srow[r][c] as f64).collect();
            spacing[c] = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            for r in 0..3 {
                lin[r][c] = col[r];
            }
        }
        Geometry {
            shape: h.shape,
            spacing,
            origin: [h.srow[0][3] as f64, h.srow[1][3] as f64, h.srow[2][3] as f64],
            direction: orthonormalize(lin)?,
        }
    } else {
        let spacing = [
            (h.pixdim[1] as f64).abs(),
            (h.pixdim[2] as f64).abs(),
            (h.pixdim[3] as f64).abs(),
        ];
        if h.qform_code > 0 {
            let qfac = if h.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
            let rot = quaternion_to_rotation(
                h.quatern[0] as f64,
                h.quatern[1] as f64,
                h.quatern[2] as f64,
                qfac,
            );
            Geometry {
                shape: h.shape,
                spacing,
                origin: [h.qoffset[0] as f64, h.qoffset[1] as f64, h.qoffset[2] as f64],
                direction: orthonormalize(rot)?,
            }
        } else {
            Geometry::new(h.shape, spacing)
        }
    };
    geometry
        .validate()
        .map_err(|e| Error::Format(format!("header geometry: {e}")))?;
    Ok(geometry)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::with_capacity(raw.len() * 4);
        MultiGzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("gzip stream: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Decodes header and scaled voxel values.
fn decode(path: &Path) -> Result<(Geometry, Vec<f64>)> {
    let bytes = read_bytes(path)?;
    let h = parse_header(&bytes)?;
    let geometry = header_geometry(&h)?;
    let n = geometry.len();
    let width = h.datatype.bytes();
    let end = h.vox_offset + n * width;
    if bytes.len() < end {
        return Err(Error::Format(format!(
            "truncated voxel data: need {end} bytes, file has {}",
            bytes.len()
        )));
    }
    let raw = &bytes[h.vox_offset..end];
    let mut values: Vec<f64> = match h.datatype {
        NiftiDatatype::Uint8 => raw.iter().map(|&v| v as f64).collect(),
        NiftiDatatype::Int16 => raw
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        NiftiDatatype::Int32 => raw
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        NiftiDatatype::Float32 => raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    let (slope, inter) = (h.scl_slope as f64, h.scl_inter as f64);
    if slope.is_finite() && slope != 0.0 && !(slope == 1.0 && inter == 0.0) {
        for v in values.iter_mut() {
            *v = *v * slope + inter;
        }
    }
    Ok((geometry, values))
}

/// Reads an intensity volume. Stored values are converted to `f32` after
/// applying `scl_slope` / `scl_inter`.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageVolume> {
    let (geometry, values) = decode(path.as_ref())?;
    Ok(Volume::from_parts(
        geometry,
        values.into_iter().map(|v| v as f32).collect(),
    ))
}

/// Reads a label map; every voxel must be a non-negative integer.
pub fn read_label(path: impl AsRef<Path>) -> Result<LabelVolume> {
    let (geometry, values) = decode(path.as_ref())?;
    let mut data = Vec::with_capacity(values.len());
    for (i, v) in values.into_iter().enumerate() {
        if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 || !v.is_finite() {
            return Err(Error::Validation(format!(
                "label map {} holds non-label value {v} at voxel {i}",
                path.as_ref().display()
            )));
        }
        data.push(v as u32);
    }
    Ok(Volume::from_parts(geometry, data))
}

fn label_datatype(max: u32) -> Result<NiftiDatatype> {
    if max <= u8::MAX as u32 {
        Ok(NiftiDatatype::Uint8)
    } else if max <= i16::MAX as u32 {
        Ok(NiftiDatatype::Int16)
    } else if max <= i32::MAX as u32 {
        Ok(NiftiDatatype::Int32)
    } else {
        Err(Error::Validation(format!("label {max} does not fit int32")))
    }
}

fn encode_header(g: &Geometry, datatype: NiftiDatatype) -> Vec<u8> {
    let mut b = vec![0u8; VOX_OFFSET];
    let put_i16 = |b: &mut [u8], off: usize, v: i16| b[off..off + 2].copy_from_slice(&v.to_le_bytes());
    let put_f32 = |b: &mut [u8], off: usize, v: f32| b[off..off + 4].copy_from_slice(&v.to_le_bytes());

    b[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    b[38] = b'r';
    let dims = [3, g.shape[0] as i16, g.shape[1] as i16, g.shape[2] as i16, 1, 1, 1, 1];
    for (i, d) in dims.iter().enumerate() {
        put_i16(&mut b, 40 + 2 * i, *d);
    }
    put_i16(&mut b, 70, datatype.code());
    put_i16(&mut b, 72, (datatype.bytes() * 8) as i16);

    let (qb, qc, qd, qfac) = rotation_to_quaternion(&g.direction);
    let pixdim = [qfac, g.spacing[0], g.spacing[1], g.spacing[2], 1.0, 1.0, 1.0, 1.0];
    for (i, p) in pixdim.iter().enumerate() {
        put_f32(&mut b, 76 + 4 * i, *p as f32);
    }
    put_f32(&mut b, 108, VOX_OFFSET as f32);
    put_f32(&mut b, 112, 1.0);
    put_f32(&mut b, 116, 0.0);
    // mm + seconds
    b[123] = 2 | 8;

    let descrip = b"synthabd";
    b[148..148 + descrip.len()].copy_from_slice(descrip);

    put_i16(&mut b, 252, 1);
    put_i16(&mut b, 254, 1);
    put_f32(&mut b, 256, qb as f32);
    put_f32(&mut b, 260, qc as f32);
    put_f32(&mut b, 264, qd as f32);
    for (i, o) in g.origin.iter().enumerate() {
        put_f32(&mut b, 268 + 4 * i, *o as f32);
    }
    for r in 0..3 {
        for c in 0..3 {
            put_f32(&mut b, 280 + 16 * r + 4 * c, (g.direction[r][c] * g.spacing[c]) as f32);
        }
        put_f32(&mut b, 280 + 16 * r + 12, g.origin[r] as f32);
    }
    b[344..348].copy_from_slice(MAGIC_SINGLE);
    b
}

fn encode_data<T: Voxel>(data: &[T], datatype: NiftiDatatype) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() * datatype.bytes());
    for v in data {
        let x = v.to_f64();
        match datatype {
            NiftiDatatype::Uint8 => out.push(x as u8),
            NiftiDatatype::Int16 => out.extend_from_slice(&(x as i16).to_le_bytes()),
            NiftiDatatype::Int32 => out.extend_from_slice(&(x as i32).to_le_bytes()),
            NiftiDatatype::Float32 => out.extend_from_slice(&(x as f32).to_le_bytes()),
        }
    }
    out
}

/// Writes a volume as NIfTI-1; a `.gz` suffix selects gzip compression.
///
/// Images are stored as float32. Label maps use the narrowest of
/// uint8 / int16 / int32 that holds their largest label.
pub fn write_volume<T: Voxel>(v: &Volume<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let datatype = if T::IS_LABEL {
        let max = v.data().iter().map(|x| x.to_f64() as u32).max().unwrap_or(0);
        label_datatype(max)?
    } else {
        NiftiDatatype::Float32
    };
    if v.shape().iter().any(|&n| n > i16::MAX as usize) {
        return Err(Error::Validation(format!(
            "shape {:?} exceeds the NIfTI-1 dimension limit",
            v.shape()
        )));
    }
    let header = encode_header(v.geometry(), datatype);
    let body = encode_data(v.data(), datatype);

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let result = if gz {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::fast());
        enc.write_all(&header)
            .and_then(|_| enc.write_all(&body))
            .and_then(|_| enc.finish()?.flush())
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(&header)
            .and_then(|_| w.write_all(&body))
            .and_then(|_| w.flush())
    };
    result.map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_header(dim: [i16; 4], pixdim: [f32; 3], datatype: i16) -> Vec<u8> {
        let mut b = vec![0u8; VOX_OFFSET];
        b[0..4].copy_from_slice(&348i32.to_le_bytes());
        b[40..42].copy_from_slice(&dim[0].to_le_bytes());
        for i in 1..4 {
            b[40 + 2 * i..42 + 2 * i].copy_from_slice(&dim[i].to_le_bytes());
        }
        b[70..72].copy_from_slice(&datatype.to_le_bytes());
        b[76..80].copy_from_slice(&1f32.to_le_bytes());
        for i in 0..3 {
            b[80 + 4 * i..84 + 4 * i].copy_from_slice(&pixdim[i].to_le_bytes());
        }
        b[108..112].copy_from_slice(&352f32.to_le_bytes());
        b[344..348].copy_from_slice(MAGIC_SINGLE);
        b
    }

    #[test]
    fn decodes_hand_built_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.nii");
        let mut bytes = raw_header([3, 4, 4, 4], [1.5, 1.5, 1.5], 2);
        bytes.extend((0..64u8).map(|v| v % 5));
        std::fs::write(&path, &bytes).unwrap();

        let v = read_label(&path).unwrap();
        assert_eq!(v.shape(), [4, 4, 4]);
        assert_eq!(v.spacing(), [1.5, 1.5, 1.5]);
        assert_eq!(v.get(3, 0, 0), 3);
        assert_eq!(v.geometry().direction, super::super::IDENTITY3);
    }

    #[test]
    fn fractional_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frac.nii");
        let mut bytes = raw_header([3, 2, 1, 1], [1.0; 3], 16);
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(2.5f32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();

        assert!(matches!(read_label(&path), Err(Error::Validation(_))));
        // the same file is a fine image
        assert_eq!(read_image(&path).unwrap().data(), &[1.0, 2.5]);
    }

    #[test]
    fn unsupported_datatype_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f64.nii");
        let mut bytes = raw_header([3, 1, 1, 1], [1.0; 3], 64);
        bytes.extend(0f64.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_image(&path), Err(Error::UnsupportedDatatype(64))));

        let short = dir.path().join("short.nii");
        std::fs::write(&short, [0u8; 100]).unwrap();
        assert!(matches!(read_image(&short), Err(Error::Format(_))));

        let mut bytes = raw_header([3, 2, 2, 2], [1.0; 3], 2);
        bytes.extend([0u8; 3]);
        let trunc = dir.path().join("trunc.nii");
        std::fs::write(&trunc, &bytes).unwrap();
        assert!(matches!(read_image(&trunc), Err(Error::Format(_))));
    }

    #[test]
    fn scaling_applied_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scaled.nii");
        let mut bytes = raw_header([3, 2, 1, 1], [1.0; 3], 4);
        bytes[112..116].copy_from_slice(&2f32.to_le_bytes());
        bytes[116..120].copy_from_slice(&(-1024f32).to_le_bytes());
        bytes.extend(10i16.to_le_bytes());
        bytes.extend(20i16.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert_eq!(read_image(&path).unwrap().data(), &[-1004.0, -984.0]);
    }

    #[test]
    fn quaternion_round_trip_including_reflection() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mats = [
            super::super::IDENTITY3,
            [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
            [[s, -s, 0.0], [s, s, 0.0], [0.0, 0.0, -1.0]],
            [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        ];
        for m in mats {
            let (b, c, d, qfac) = rotation_to_quaternion(&m);
            let back = quaternion_to_rotation(b, c, d, qfac);
            for r in 0..3 {
                for k in 0..3 {
                    assert!((back[r][k] - m[r][k]).abs() < 1e-9, "{m:?} -> {back:?}");
                }
            }
        }
    }

    #[test]
    fn qform_used_when_sform_absent() {
        let dir = tempfile::tempdir().unwrap();
        let g = Geometry::new([2, 3, 4], [1.5, 2.0, 2.5])
            .with_origin([10.0, -20.0, 30.0])
            .with_direction([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        let v = Volume::filled(g.clone(), 1.0f32).unwrap();
        let path = dir.path().join("q.nii");
        write_volume(&v, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[254..256].copy_from_slice(&0i16.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        let back = read_image(&path).unwrap();
        assert!(back.geometry().approx_eq(&g, 1e-6), "{:?}", back.geometry());
    }
}
