//! Dense voxel containers shared by every stage of the pipeline.
//!
//! All grids use the same linear order, x fastest:
//! `index = x + nx * (y + ny * z)`.

mod files;

pub use files::{
    load_field, load_field_with_dtype, save_field, save_field_annotated, save_mask,
    save_mask_annotated, Dtype, FieldFormat,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel counts per axis and the physical edge length of one voxel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub spacing: f64,
}

// Spacing is validated finite on construction.
impl Eq for GridDims {}

impl GridDims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Self::with_spacing(nx, ny, nz, 1.0)
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    pub fn with_spacing(nx: usize, ny: usize, nz: usize, spacing: f64) -> Result<Self> {
        let bad = Error::InvalidDims {
            nx,
            ny,
            nz,
            spacing,
        };
        if nx == 0 || ny == 0 || nz == 0 || !(spacing.is_finite() && spacing > 0.0) {
            return Err(bad);
        }
        // The doubled cell grid used by the cubical complex must also be addressable.
        let doubled = (2 * nx as u128 + 1) * (2 * ny as u128 + 1) * (2 * nz as u128 + 1);
        if doubled > u32::MAX as u128 || (nx as u128 * ny as u128 * nz as u128) > isize::MAX as u128
        {
            return Err(bad);
        }
        Ok(Self {
            nx,
            ny,
            nz,
            spacing,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.nx;
        let rest = index / self.nx;
        [x, rest % self.ny, rest / self.ny]
    }

    pub fn same_shape(&self, other: &GridDims) -> bool {
        self.shape() == other.shape()
    }
}

/// Voxel occupancy: bit 1 marks the shape (foreground), bit 0 the background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    dims: GridDims,
    bits: Vec<u64>,
}

impl BinaryMask {
    pub fn zeros(dims: GridDims) -> Self {
        Self {
            dims,
            bits: vec![0; dims.len().div_ceil(64)],
        }
    }

    pub fn from_fn(dims: GridDims, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut mask = Self::zeros(dims);
        let mut i = 0;
        for z in 0..dims.nz {
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    if f(x, y, z) {
                        mask.bits[i >> 6] |= 1 << (i & 63);
                    }
                    i += 1;
                }
            }
        }
        mask
    }

    pub fn from_bools(dims: GridDims, values: &[bool]) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::LengthMismatch {
                expected: dims.len(),
                actual: values.len(),
            });
        }
        let mut mask = Self::zeros(dims);
        for (i, _) in values.iter().enumerate().filter(|(_, &b)| b) {
            mask.bits[i >> 6] |= 1 << (i & 63);
        }
        Ok(mask)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        (self.bits[index >> 6] >> (index & 63)) & 1 == 1
    }

    #[inline]
    pub fn get_xyz(&self, x: usize, y: usize, z: usize) -> bool {
        self.get(self.dims.index(x, y, z))
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        if value {
            self.bits[index >> 6] |= 1 << (index & 63);
        } else {
            self.bits[index >> 6] &= !(1 << (index & 63));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.dims.len()).map(move |i| self.get(i))
    }

    /// Packed bits as bytes, voxel `i` at byte `i / 8`, bit `i % 8`.
    pub fn packed_bytes(&self) -> Vec<u8> {
        let n = self.dims.len().div_ceil(8);
        self.bits
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(n)
            .collect()
    }

    /// The mask as a 0/1 field, e.g. for saving.
    pub fn to_field(&self) -> ScalarField {
        ScalarField {
            dims: self.dims,
            values: self.iter().map(|b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// One finite `f64` per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: GridDims,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(dims: GridDims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::LengthMismatch {
                expected: dims.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dims, values })
    }

    pub fn constant(dims: GridDims, value: f64) -> Result<Self> {
        Self::new(dims, vec![value; dims.len()])
    }

    pub fn from_fn(dims: GridDims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(dims.len());
        for z in 0..dims.nz {
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    values.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, values)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.dims.index(x, y, z)]
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        self.dims = GridDims::with_spacing(self.dims.nx, self.dims.ny, self.dims.nz, spacing)?;
        Ok(self)
    }

    /// Applies `f` to every value; fails if any result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.dims, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Voxel-wise sum of two fields with the same shape.
    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        if !self.dims.same_shape(&other.dims) {
            return Err(Error::LengthMismatch {
                expected: self.dims.len(),
                actual: other.dims.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.dims, values)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keep {
    AboveOrEqual,
    Below,
}

/// Foreground where `value >= level` (or `value < level`).
pub fn threshold_mask(field: &ScalarField, level: f64, keep: Keep) -> BinaryMask {
    let mut mask = BinaryMask::zeros(field.dims);
    for (i, &v) in field.values.iter().enumerate() {
        let on = match keep {
            Keep::AboveOrEqual => v >= level,
            Keep::Below => v < level,
        };
        if on {
            mask.set(i, true);
        }
    }
    mask
}

/// Forces every voxel within `width` voxels of the domain wall to background,
/// so the shape's surface is closed inside the grid.
pub fn close_boundary(mask: &BinaryMask, width: usize) -> Result<BinaryMask> {
    let dims = mask.dims;
    let [nx, ny, nz] = dims.shape();
    if width == 0 || 2 * width >= nx.min(ny).min(nz) {
        return Err(Error::CloseWidth {
            width,
            dims: dims.shape(),
        });
    }
    let inner = |c: usize, n: usize| c >= width && c < n - width;
    let mut out = mask.clone();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !(inner(x, nx) && inner(y, ny) && inner(z, nz)) {
                    out.set(dims.index(x, y, z), false);
                }
            }
        }
    }
    Ok(out)
}
