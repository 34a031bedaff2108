//! NIfTI-1 single-file (`.nii` / `.nii.gz`) reading and writing.
//!
//! Reads datatypes 2/4/8/16/64 in either byte order and applies
//! `scl_slope`/`scl_inter`. Always writes little-endian float32 with unit
//! scaling and the affine stored as the sform (code 1).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use thiserror::Error;
use voxpost_core::{Dims, Mask, SourceDtype, Volume};

use crate::error::{Error, Result};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DEFAULT_VOX_OFFSET: usize = 352;
pub const MAGIC: &[u8; 4] = b"n+1\0";
pub const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const QUATERN_B: usize = 256;
    pub const QOFFSET_X: usize = 268;
    pub const SROW_X: usize = 280;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Error, PartialEq)]
pub enum NiftiError {
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported dimensions: dim[0]={ndim}, dim={dim:?}")]
    DimensionMismatch { ndim: i16, dim: [i16; 8] },
    #[error("non-finite voxel at index {0}")]
    NonFiniteVoxel(usize),
    #[error("gzip: {0}")]
    Gzip(String),
    #[error(transparent)]
    Volume(#[from] voxpost_core::Error),
}

fn malformed(reason: impl Into<String>) -> NiftiError {
    NiftiError::MalformedHeader(reason.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

struct Reader<'a> {
    buf: &'a [u8],
    endian: Endian,
}

impl Reader<'_> {
    fn bytes<const N: usize>(&self, at: usize) -> [u8; N] {
        self.buf[at..at + N].try_into().unwrap()
    }

    fn i16(&self, at: usize) -> i16 {
        match self.endian {
            Endian::Little => i16::from_le_bytes(self.bytes(at)),
            Endian::Big => i16::from_be_bytes(self.bytes(at)),
        }
    }

    fn i32(&self, at: usize) -> i32 {
        match self.endian {
            Endian::Little => i32::from_le_bytes(self.bytes(at)),
            Endian::Big => i32::from_be_bytes(self.bytes(at)),
        }
    }

    fn f32(&self, at: usize) -> f32 {
        match self.endian {
            Endian::Little => f32::from_le_bytes(self.bytes(at)),
            Endian::Big => f32::from_be_bytes(self.bytes(at)),
        }
    }

    fn f64(&self, at: usize) -> f64 {
        match self.endian {
            Endian::Little => f64::from_le_bytes(self.bytes(at)),
            Endian::Big => f64::from_be_bytes(self.bytes(at)),
        }
    }
}

/// The header fields this crate interprets.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
    big_endian: bool,
}

impl Header {
    pub fn parse(buf: &[u8]) -> std::result::Result<Header, NiftiError> {
        if buf.len() < HEADER_SIZE {
            return Err(malformed(format!("{} bytes, need {}", buf.len(), HEADER_SIZE)));
        }
        let sizeof = &buf[offsets::SIZEOF_HDR..4];
        let endian = if i32::from_le_bytes(sizeof.try_into().unwrap()) == HEADER_SIZE as i32 {
            Endian::Little
        } else if i32::from_be_bytes(sizeof.try_into().unwrap()) == HEADER_SIZE as i32 {
            Endian::Big
        } else {
            return Err(malformed("sizeof_hdr is not 348"));
        };
        if &buf[offsets::MAGIC..offsets::MAGIC + 4] != MAGIC {
            return Err(malformed("magic is not \"n+1\" (only single-file NIfTI-1 is supported)"));
        }
        let r = Reader { buf, endian };
        let mut dim = [0i16; 8];
        let mut pixdim = [0f32; 8];
        for i in 0..8 {
            dim[i] = r.i16(offsets::DIM + 2 * i);
            pixdim[i] = r.f32(offsets::PIXDIM + 4 * i);
        }
        let mut srow = [[0f32; 4]; 3];
        for (row, out) in srow.iter_mut().enumerate() {
            for (col, v) in out.iter_mut().enumerate() {
                *v = r.f32(offsets::SROW_X + 16 * row + 4 * col);
            }
        }
        Ok(Header {
            dim,
            datatype: r.i16(offsets::DATATYPE),
            bitpix: r.i16(offsets::BITPIX),
            pixdim,
            vox_offset: r.f32(offsets::VOX_OFFSET),
            scl_slope: r.f32(offsets::SCL_SLOPE),
            scl_inter: r.f32(offsets::SCL_INTER),
            qform_code: r.i16(offsets::QFORM_CODE),
            sform_code: r.i16(offsets::SFORM_CODE),
            quatern: [0, 1, 2].map(|i| r.f32(offsets::QUATERN_B + 4 * i)),
            qoffset: [0, 1, 2].map(|i| r.f32(offsets::QOFFSET_X + 4 * i)),
            srow,
            big_endian: endian == Endian::Big,
        })
    }

    pub fn dims(&self) -> std::result::Result<Dims, NiftiError> {
        let ndim = self.dim[0];
        let bad = || NiftiError::DimensionMismatch {
            ndim,
            dim: self.dim,
        };
        if !(3..=7).contains(&ndim) {
            return Err(bad());
        }
        if self.dim[4..=ndim as usize].iter().any(|&d| d != 1) {
            return Err(bad());
        }
        if self.dim[1..=3].iter().any(|&d| d < 1) {
            return Err(bad());
        }
        Ok(Dims::new(
            self.dim[1] as usize,
            self.dim[2] as usize,
            self.dim[3] as usize,
        ))
    }

    pub fn source_dtype(&self) -> std::result::Result<(SourceDtype, usize), NiftiError> {
        Ok(match self.datatype {
            2 => (SourceDtype::U8, 1),
            4 => (SourceDtype::I16, 2),
            8 => (SourceDtype::I32, 4),
            16 => (SourceDtype::F32, 4),
            64 => (SourceDtype::F64, 8),
            code => return Err(NiftiError::UnsupportedDatatype(code)),
        })
    }

    pub fn spacing(&self) -> std::result::Result<[f64; 3], NiftiError> {
        let s = [1, 2, 3].map(|i| (self.pixdim[i] as f64).abs());
        if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(malformed(format!("pixdim[1..3] must be positive, got {:?}", s)));
        }
        Ok(s)
    }

    /// Voxel-to-world matrix: sform if set, else qform, else scaled identity.
    pub fn affine(&self, spacing: [f64; 3]) -> [[f64; 4]; 4] {
        let mut a = [[0.0; 4]; 4];
        a[3][3] = 1.0;
        if self.sform_code > 0 {
            for (row, src) in a.iter_mut().zip(&self.srow) {
                for (v, s) in row.iter_mut().zip(src) {
                    *v = *s as f64;
                }
            }
        } else if self.qform_code > 0 {
            let [b, c, d] = self.quatern.map(|v| v as f64);
            let a0 = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
            let qfac = if self.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
            let rot = [
                [a0 * a0 + b * b - c * c - d * d, 2.0 * (b * c - a0 * d), 2.0 * (b * d + a0 * c)],
                [2.0 * (b * c + a0 * d), a0 * a0 + c * c - b * b - d * d, 2.0 * (c * d - a0 * b)],
                [2.0 * (b * d - a0 * c), 2.0 * (c * d + a0 * b), a0 * a0 + d * d - c * c - b * b],
            ];
            let scale = [spacing[0], spacing[1], qfac * spacing[2]];
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] = rot[i][j] * scale[j];
                }
                a[i][3] = self.qoffset[i] as f64;
            }
        } else {
            for i in 0..3 {
                a[i][i] = spacing[i];
            }
        }
        a
    }
}

fn gunzip(bytes: &[u8]) -> std::result::Result<Vec<u8>, NiftiError> {
    let mut out = Vec::new();
    MultiGzDecoder::new(bytes)
        .read_to_end(&mut out)
        .map_err(|e| NiftiError::Gzip(e.to_string()))?;
    Ok(out)
}

/// Parses a (possibly gzip-wrapped) NIfTI-1 image held in memory.
pub fn decode(bytes: &[u8]) -> std::result::Result<Volume, NiftiError> {
    let inflated;
    let buf = if bytes.starts_with(&GZIP_MAGIC) {
        inflated = gunzip(bytes)?;
        &inflated[..]
    } else {
        bytes
    };
    let h = Header::parse(buf)?;
    let dims = h.dims()?;
    let (dtype, width) = h.source_dtype()?;
    if h.bitpix as usize != width * 8 {
        return Err(malformed(format!(
            "bitpix {} does not match datatype {}",
            h.bitpix, h.datatype
        )));
    }
    let spacing = h.spacing()?;
    let offset = h.vox_offset as usize;
    if !(h.vox_offset.is_finite() && offset >= HEADER_SIZE) {
        return Err(malformed(format!("vox_offset {}", h.vox_offset)));
    }
    let n = dims.len();
    let payload = buf
        .get(offset..offset + n * width)
        .ok_or_else(|| malformed(format!("payload truncated: need {} bytes after offset {}", n * width, offset)))?;

    let slope = if h.scl_slope == 0.0 || !h.scl_slope.is_finite() {
        1.0
    } else {
        h.scl_slope as f64
    };
    let inter = if h.scl_inter.is_finite() { h.scl_inter as f64 } else { 0.0 };
    let r = Reader {
        buf: payload,
        endian: if h.big_endian { Endian::Big } else { Endian::Little },
    };
    let raw = |i: usize| -> f64 {
        let at = i * width;
        match dtype {
            SourceDtype::U8 => payload[at] as f64,
            SourceDtype::I16 => r.i16(at) as f64,
            SourceDtype::I32 => r.i32(at) as f64,
            SourceDtype::F32 => r.f32(at) as f64,
            SourceDtype::F64 => r.f64(at),
        }
    };
    let identity = slope == 1.0 && inter == 0.0;
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        let v = if identity { raw(i) } else { raw(i) * slope + inter };
        if !v.is_finite() {
            return Err(NiftiError::NonFiniteVoxel(i));
        }
        data.push(v);
    }
    let affine = h.affine(spacing);
    Ok(Volume::with_affine(dims, spacing, affine, data)?.with_source_dtype(dtype))
}

/// Serializes as uncompressed little-endian float32 NIfTI-1.
pub fn encode(v: &Volume) -> std::result::Result<Vec<u8>, NiftiError> {
    let dims = v.dims();
    let mut out = vec![0u8; DEFAULT_VOX_OFFSET + 4 * dims.len()];
    let put = |out: &mut [u8], at: usize, bytes: &[u8]| out[at..at + bytes.len()].copy_from_slice(bytes);
    put(&mut out, offsets::SIZEOF_HDR, &(HEADER_SIZE as i32).to_le_bytes());
    for d in dims.0 {
        if d > i16::MAX as usize {
            return Err(malformed(format!("extent {} exceeds NIfTI-1 limit", d)));
        }
    }
    let dim: [i16; 8] = [3, dims.nx() as i16, dims.ny() as i16, dims.nz() as i16, 1, 1, 1, 1];
    let sp = v.spacing();
    let pixdim: [f32; 8] = [1.0, sp[0] as f32, sp[1] as f32, sp[2] as f32, 0.0, 0.0, 0.0, 0.0];
    for i in 0..8 {
        put(&mut out, offsets::DIM + 2 * i, &dim[i].to_le_bytes());
        put(&mut out, offsets::PIXDIM + 4 * i, &pixdim[i].to_le_bytes());
    }
    put(&mut out, offsets::DATATYPE, &16i16.to_le_bytes());
    put(&mut out, offsets::BITPIX, &32i16.to_le_bytes());
    put(&mut out, offsets::VOX_OFFSET, &(DEFAULT_VOX_OFFSET as f32).to_le_bytes());
    put(&mut out, offsets::SCL_SLOPE, &1f32.to_le_bytes());
    put(&mut out, offsets::SCL_INTER, &0f32.to_le_bytes());
    // millimetres
    out[offsets::XYZT_UNITS] = 2;
    put(&mut out, offsets::SFORM_CODE, &1i16.to_le_bytes());
    for (row, values) in v.affine()[..3].iter().enumerate() {
        for (col, x) in values.iter().enumerate() {
            put(&mut out, offsets::SROW_X + 16 * row + 4 * col, &(*x as f32).to_le_bytes());
        }
    }
    put(&mut out, offsets::MAGIC, MAGIC);
    for (i, &x) in v.data().iter().enumerate() {
        let f = x as f32;
        if !f.is_finite() {
            return Err(NiftiError::NonFiniteVoxel(i));
        }
        put(&mut out, DEFAULT_VOX_OFFSET + 4 * i, &f.to_le_bytes());
    }
    Ok(out)
}

pub fn gzip(bytes: &[u8]) -> Vec<u8> {
    // GzEncoder writes mtime 0, so output depends only on the input bytes.
    let mut enc = GzEncoder::new(Vec::with_capacity(bytes.len() / 2), Compression::default());
    enc.write_all(bytes).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Nifti {
        path: path.into(),
        source,
    })
}

/// Reads a volume and binarizes it with `> 0.5`.
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let v = read_volume(&path)?;
    Ok(Mask::from_values(v.dims(), v.data())?)
}

pub fn write_volume(v: &Volume, path: impl AsRef<Path>, compress: bool) -> Result<()> {
    let path = path.as_ref();
    let raw = encode(v).map_err(|source| Error::Nifti {
        path: path.into(),
        source,
    })?;
    let bytes = if compress { gzip(&raw) } else { raw };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `true` when the file name ends in `.gz`.
pub fn wants_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}
