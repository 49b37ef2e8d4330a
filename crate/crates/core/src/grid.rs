//! Equidistant mesh over the normalized domain and signed class rasters.
//!
//! Axis convention used throughout the crate: feature `x1` indexes columns
//! (`j`), feature `x2` indexes rows (`i`). Pixel `(i, j)` is centered at
//! `((j + 0.5)·dx, (i + 0.5)·dx)`.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Square mesh geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n_mesh: usize,
    domain_width: f64,
}

impl GridSpec {
    /// Mesh of `n_mesh` pixels per axis over the unit square.
    pub fn new(n_mesh: usize) -> Result<Self> {
        Self::with_domain_width(n_mesh, 1.0)
    }

    pub fn with_domain_width(n_mesh: usize, domain_width: f64) -> Result<Self> {
        if n_mesh < 8 || !n_mesh.is_power_of_two() {
            return Err(Error::InvalidMesh(n_mesh));
        }
        if !(domain_width.is_finite() && domain_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "domain width must be positive, got {domain_width}"
            )));
        }
        Ok(Self {
            n_mesh,
            domain_width,
        })
    }

    pub fn n_mesh(&self) -> usize {
        self.n_mesh
    }

    pub fn domain_width(&self) -> f64 {
        self.domain_width
    }

    pub fn pixel_size(&self) -> f64 {
        self.domain_width / self.n_mesh as f64
    }

    /// Total pixel count, `n_mesh²`.
    pub fn len(&self) -> usize {
        self.n_mesh * self.n_mesh
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Center of pixel `index` along one axis.
    pub fn center(&self, index: usize) -> f64 {
        (index as f64 + 0.5) * self.pixel_size()
    }

    /// Pixel containing a normalized point; coordinates outside the domain
    /// clamp to the boundary pixels.
    pub fn map_to_pixel(&self, x1: f64, x2: f64) -> Result<PixelIndex> {
        if x1.is_nan() || x2.is_nan() {
            return Err(Error::NonFinite);
        }
        Ok(PixelIndex {
            i: self.bin(x2),
            j: self.bin(x1),
        })
    }

    fn bin(&self, x: f64) -> usize {
        let v = (x / self.domain_width * self.n_mesh as f64).floor();
        // NaN is excluded by the caller; infinities clamp like any other value.
        v.clamp(0.0, (self.n_mesh - 1) as f64) as usize
    }
}

pub fn map_to_pixel(x1: f64, x2: f64, grid: &GridSpec) -> Result<PixelIndex> {
    grid.map_to_pixel(x1, x2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelIndex {
    pub i: usize,
    pub j: usize,
}

impl PixelIndex {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    /// Row-major offset into a field of `n_mesh` columns.
    pub fn offset(&self, n_mesh: usize) -> usize {
        self.i * n_mesh + self.j
    }
}

/// Real scalar field on the mesh, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn filled(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(values.len(), grid.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, p: PixelIndex) -> f64 {
        self.values[p.offset(self.grid.n_mesh)]
    }

    pub fn set(&mut self, p: PixelIndex, v: f64) {
        let n = self.grid.n_mesh;
        self.values[p.offset(n)] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// One-vs-rest raster of already-normalized data for class `target`.
///
/// A pixel holding any target-class point is +1, a pixel holding only other
/// classes is −1, an empty pixel is 0. Multiplicity never scales the value.
pub fn rasterize_signed(data: &Dataset, target: usize, grid: &GridSpec) -> Result<DensityField> {
    if target >= data.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "target class index {target} out of range for {} classes",
            data.n_classes()
        )));
    }
    let mut field = DensityField::zeros(*grid);
    let classes = data.class_indices();
    for (p, &k) in data.points().iter().zip(&classes) {
        let px = grid.map_to_pixel(p.x1, p.x2)?;
        if k == target {
            field.set(px, 1.0);
        } else if field.get(px) == 0.0 {
            field.set(px, -1.0);
        }
    }
    Ok(field)
}

/// Convenience wrapper resolving `target` by label.
pub fn rasterize_signed_label(data: &Dataset, target: &str, grid: &GridSpec) -> Result<DensityField> {
    let k = data
        .label_index(target)
        .ok_or_else(|| Error::UnknownLabel(target.to_string()))?;
    rasterize_signed(data, k, grid)
}
