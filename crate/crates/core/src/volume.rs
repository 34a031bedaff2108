use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Grid extent `(nx, ny, nz)`; data is stored x-fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims(pub [usize; 3]);

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims([nx, ny, nz])
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.0[0]
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.0[1]
    }

    #[inline]
    pub fn nz(&self) -> usize {
        self.0[2]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0[0] * self.0[1] * self.0[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.0[0] * (y + self.0[1] * z)
    }

    pub fn min_extent(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }
}

/// Storage type of the file a volume was loaded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceDtype {
    U8,
    I16,
    I32,
    #[default]
    F32,
    F64,
}

/// Dense 3D scalar field in 64-bit reals.
///
/// Invariants (checked by [`Volume::new`]): every extent is positive, the data
/// length is `nx*ny*nz`, every voxel is finite and every spacing is positive.
/// The affine is carried along untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Dims,
    spacing: [f64; 3],
    affine: [[f64; 4]; 4],
    data: Vec<f64>,
    source_dtype: SourceDtype,
}

pub(crate) fn diagonal_affine(spacing: [f64; 3]) -> [[f64; 4]; 4] {
    [
        [spacing[0], 0.0, 0.0, 0.0],
        [0.0, spacing[1], 0.0, 0.0],
        [0.0, 0.0, spacing[2], 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn check_shape(dims: Dims, len: usize) -> Result<()> {
    if dims.0.contains(&0) || dims.len() != len {
        return Err(Error::InvalidShape { dims: dims.0, len });
    }
    Ok(())
}

impl Volume {
    /// Builds a volume with a diagonal affine taken from `spacing`.
    pub fn new(dims: Dims, spacing: [f64; 3], data: Vec<f64>) -> Result<Self> {
        Self::with_affine(dims, spacing, diagonal_affine(spacing), data)
    }

    pub fn with_affine(
        dims: Dims,
        spacing: [f64; 3],
        affine: [[f64; 4]; 4],
        data: Vec<f64>,
    ) -> Result<Self> {
        check_shape(dims, data.len())?;
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidSpacing(spacing));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteVoxel { index });
        }
        Ok(Volume {
            dims,
            spacing,
            affine,
            data,
            source_dtype: SourceDtype::F64,
        })
    }

    /// Unit spacing, handy for synthetic data.
    pub fn from_data(dims: Dims, data: Vec<f64>) -> Result<Self> {
        Self::new(dims, [1.0; 3], data)
    }

    pub fn filled(dims: Dims, value: f64) -> Result<Self> {
        Self::from_data(dims, alloc::vec![value; dims.len()])
    }

    pub fn with_source_dtype(mut self, dtype: SourceDtype) -> Self {
        self.source_dtype = dtype;
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn affine(&self) -> &[[f64; 4]; 4] {
        &self.affine
    }

    pub fn source_dtype(&self) -> SourceDtype {
        self.source_dtype
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.dims.index(x, y, z)]
    }

    /// Same geometry as `self`, new voxel values. Internal kernels only
    /// produce finite values from finite inputs, so this skips the scan.
    pub(crate) fn like(&self, data: Vec<f64>) -> Volume {
        debug_assert_eq!(data.len(), self.data.len());
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            affine: self.affine,
            data,
            source_dtype: self.source_dtype,
        }
    }

    /// Same geometry, new values, with the finiteness check.
    pub fn map_data(&self, data: Vec<f64>) -> Result<Volume> {
        check_shape(self.dims, data.len())?;
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteVoxel { index });
        }
        Ok(self.like(data))
    }
}

/// Binary region congruent with a [`Volume`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    dims: Dims,
    data: Vec<bool>,
    binarized: bool,
}

impl Mask {
    pub fn new(dims: Dims, data: Vec<bool>) -> Result<Self> {
        check_shape(dims, data.len())?;
        Ok(Mask {
            dims,
            data,
            binarized: false,
        })
    }

    /// Thresholds real values at `> 0.5`. The `binarized` flag records whether
    /// any value other than exactly 0 or 1 was seen.
    pub fn from_values(dims: Dims, values: &[f64]) -> Result<Self> {
        check_shape(dims, values.len())?;
        let binarized = values.iter().any(|&v| v != 0.0 && v != 1.0);
        Ok(Mask {
            dims,
            data: values.iter().map(|&v| v > 0.5).collect(),
            binarized,
        })
    }

    pub fn full(dims: Dims, value: bool) -> Self {
        Mask {
            dims,
            data: alloc::vec![value; dims.len()],
            binarized: false,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn was_binarized(&self) -> bool {
        self.binarized
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.dims.index(x, y, z)]
    }
}

pub(crate) fn check_dims(expected: Dims, found: Dims) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected: expected.0,
            found: found.0,
        });
    }
    Ok(())
}

/// Errors with `DimensionMismatch` unless `m` has the same extent as `v`.
pub fn check_congruent(v: &Volume, m: &Mask) -> Result<()> {
    check_dims(v.dims(), m.dims())
}

/// Voxels from `inside` where the mask is set, from `outside` elsewhere.
/// Outside voxels are copied bit-for-bit.
pub fn composite(inside: &Volume, outside: &Volume, m: &Mask) -> Result<Volume> {
    check_dims(outside.dims(), inside.dims())?;
    check_congruent(outside, m)?;
    let data = inside
        .data()
        .iter()
        .zip(outside.data())
        .zip(m.data())
        .map(|((&i, &o), &keep)| if keep { i } else { o })
        .collect();
    Ok(outside.like(data))
}
