use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Cubic grid of signed distances, negative inside.
///
/// Voxel `(i, j, k)` sits at `((i+0.5)/N, (j+0.5)/N, (k+0.5)/N)` and is stored
/// at `(k N + j) N + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfVolume {
    n: usize,
    values: Vec<f64>,
}

impl SdfVolume {
    /// Wrap `N^3` finite values.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            bail!(Input, "volume resolution must be positive");
        }
        if values.len() != n * n * n {
            bail!(Input, "volume of resolution {} needs {} values, got {}", n, n * n * n, values.len());
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            bail!(Input, "volume value {} is not finite", v);
        }
        Ok(Self { n, values })
    }

    /// Resolution per axis.
    pub fn resolution(&self) -> usize {
        self.n
    }

    #[allow(missing_docs)]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of voxel `(i, j, k)`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(k * self.n + j) * self.n + i]
    }

    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same volume with values multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.n, self.values.iter().map(|v| v * s).collect())
    }
}

/// Analytic shapes inside the unit cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SdfShape {
    #[allow(missing_docs)]
    Sphere { center: [f64; 3], radius: f64 },
    /// Ring of radius `major` around the z axis through `center`, tube radius `minor`.
    #[allow(missing_docs)]
    Torus { center: [f64; 3], major: f64, minor: f64 },
    /// Axis-aligned box.
    #[allow(missing_docs)]
    Box { center: [f64; 3], half_extents: [f64; 3] },
}

impl SdfShape {
    /// Input error for non-finite or non-positive parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            SdfShape::Sphere { center, radius } => {
                if !ok(center) || !(radius.is_finite() && *radius > 0.0) {
                    bail!(Input, "sphere needs a finite center and positive radius");
                }
            }
            SdfShape::Torus { center, major, minor } => {
                if !ok(center) || !(major.is_finite() && minor.is_finite() && *minor > 0.0 && *major > *minor) {
                    bail!(Input, "torus needs a finite center and 0 < minor < major");
                }
            }
            SdfShape::Box { center, half_extents } => {
                if !ok(center) || !half_extents.iter().all(|h| h.is_finite() && *h > 0.0) {
                    bail!(Input, "box needs a finite center and positive half extents");
                }
            }
        }
        Ok(())
    }

    /// Exact signed distance at `p`.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        match *self {
            SdfShape::Sphere { center, radius } => norm3(sub(p, center)) - radius,
            SdfShape::Torus { center, major, minor } => {
                let q = sub(p, center);
                let ring = libm::hypot(q[0], q[1]) - major;
                libm::hypot(ring, q[2]) - minor
            }
            SdfShape::Box { center, half_extents } => {
                let q = sub(p, center);
                let d = [
                    q[0].abs() - half_extents[0],
                    q[1].abs() - half_extents[1],
                    q[2].abs() - half_extents[2],
                ];
                let outside = norm3([d[0].max(0.0), d[1].max(0.0), d[2].max(0.0)]);
                outside + d[0].max(d[1]).max(d[2]).min(0.0)
            }
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(v: [f64; 3]) -> f64 {
    libm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}

/// Exact SDF of `shape` at the voxel centers of an `N^3` grid.
pub fn analytic_sdf(shape: SdfShape, n: usize) -> Result<SdfVolume> {
    shape.validate()?;
    let c = |i: usize| (i as f64 + 0.5) / n as f64;
    let mut values = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                values.push(shape.distance([c(i), c(j), c(k)]));
            }
        }
    }
    SdfVolume::new(n, values)
}
