//! Occupancy grids: splatting point clouds, thresholding, IoU.
//!
//! Each point is treated as an axis-aligned cube of side one cell centered on
//! it. A cell receives the fraction of that cube's volume it intersects, which
//! is exactly the trilinear weight of the point relative to the neighboring
//! cell centers. Contributions are summed and the sum clamped to [0, 1].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointSet};

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub dims: usize,
    pub origin: Point3,
    pub cell_size: f64,
    /// `dims³` values, z fastest, x slowest.
    pub values: Vec<f64>,
}

impl OccupancyGrid {
    pub fn zeros(dims: usize, origin: Point3, cell_size: f64) -> Result<Self> {
        check_geometry(dims, origin, cell_size)?;
        Ok(OccupancyGrid { dims, origin, cell_size, values: vec![0.0; dims * dims * dims] })
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims + iy) * self.dims + iz
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.index(ix, iy, iz)]
    }

    pub fn same_geometry(&self, other: &OccupancyGrid) -> bool {
        self.dims == other.dims && self.origin == other.origin && self.cell_size == other.cell_size
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn occupied(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1.0).count()
    }

    /// Checks the grid invariants: geometry, body length, values in [0, 1].
    pub fn validate(&self) -> Result<()> {
        check_geometry(self.dims, self.origin, self.cell_size)?;
        let expected = self.dims * self.dims * self.dims;
        if self.values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: self.values.len() });
        }
        if let Some(i) = self.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("values", format!("cell {i} holds {} outside [0, 1]", self.values[i])));
        }
        Ok(())
    }

    /// Reporting unit of this grid, see [`grid_unit_scale`].
    pub fn unit_scale(&self) -> f64 {
        grid_unit_scale(self.dims, self.cell_size)
    }
}

fn check_geometry(dims: usize, origin: Point3, cell_size: f64) -> Result<()> {
    if dims == 0 {
        return Err(Error::invalid("dims", "must be at least 1"));
    }
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::invalid("cell_size", "must be positive and finite"));
    }
    if !origin.is_finite() {
        return Err(Error::invalid("origin", "must be finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bounds {
    /// Move each cube center inward so the whole cube lies inside the grid.
    Clamp,
    /// Reject points outside the grid volume; cube parts that stick out are dropped.
    Strict,
}

/// Per-point cell contributions before any clamping. Entries are `(cell, weight)`.
fn contributions(p: &Point3, dims: usize, origin: Point3, h: f64, bounds: Bounds) -> Option<Vec<(usize, f64)>> {
    let mut axes = [[(0usize, 0.0f64); 2]; 3];
    let mut counts = [0usize; 3];
    for axis in 0..3 {
        let mut u = (p.axis(axis) - origin.axis(axis)) / h;
        match bounds {
            Bounds::Clamp => u = u.clamp(0.5, dims as f64 - 0.5),
            Bounds::Strict => {
                if !(0.0..=dims as f64).contains(&u) {
                    return None;
                }
            }
        }
        let c = u - 0.5;
        let i0 = c.floor();
        let f = c - i0;
        for (cell, w) in [(i0, 1.0 - f), (i0 + 1.0, f)] {
            if w > 0.0 && cell >= 0.0 && cell < dims as f64 {
                axes[axis][counts[axis]] = (cell as usize, w);
                counts[axis] += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(8);
    for &(ix, wx) in &axes[0][..counts[0]] {
        for &(iy, wy) in &axes[1][..counts[1]] {
            for &(iz, wz) in &axes[2][..counts[2]] {
                out.push(((ix * dims + iy) * dims + iz, wx * wy * wz));
            }
        }
    }
    Some(out)
}

/// Summed contributions without the clamp to 1.
pub fn splat_accumulate(ps: &PointSet, dims: usize, origin: Point3, cell_size: f64, bounds: Bounds) -> Result<Vec<f64>> {
    ps.validate_nonempty()?;
    check_geometry(dims, origin, cell_size)?;
    let per_point: Vec<Option<Vec<(usize, f64)>>> = ps
        .par_iter()
        .map(|p| contributions(p, dims, origin, cell_size, bounds))
        .collect();
    let mut acc = vec![0.0f64; dims * dims * dims];
    for (index, c) in per_point.into_iter().enumerate() {
        let c = c.ok_or(Error::PointOutsideGrid { index })?;
        for (cell, w) in c {
            acc[cell] += w;
        }
    }
    Ok(acc)
}

pub fn splat(ps: &PointSet, dims: usize, origin: Point3, cell_size: f64, bounds: Bounds) -> Result<OccupancyGrid> {
    let acc = splat_accumulate(ps, dims, origin, cell_size, bounds)?;
    Ok(OccupancyGrid { dims, origin, cell_size, values: acc.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() })
}

/// Maps each value to 1 if `v ≥ threshold`, else 0.
pub fn binarize(g: &OccupancyGrid, threshold: f64) -> Result<OccupancyGrid> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    Ok(OccupancyGrid {
        values: g.values.iter().map(|&v| if v >= threshold { 1.0 } else { 0.0 }).collect(),
        ..g.clone()
    })
}

/// Intersection over union of two binary grids; 1 when both are empty.
pub fn iou(g1: &OccupancyGrid, g2: &OccupancyGrid) -> Result<f64> {
    if !g1.same_geometry(g2) || g1.values.len() != g2.values.len() {
        return Err(Error::GridMismatch);
    }
    for g in [g1, g2] {
        if let Some(index) = g.values.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::NonBinaryGrid { index, value: g.values[index] });
        }
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in g1.values.iter().zip(&g2.values) {
        let (a, b) = (a == 1.0, b == 1.0);
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// One tenth of the grid's side length, the unit distances are reported in.
pub fn grid_unit_scale(dims: usize, cell_size: f64) -> f64 {
    dims as f64 * cell_size / 10.0
}
