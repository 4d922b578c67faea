//! Points of interest, raw positional encoding and Lissajous-curve utilities.
//!
//! For a coordinate `x` and angular frequencies `phi_1 < ... < phi_L` the
//! points of interest are `(x, S_1..S_L, C_1..C_L)` with
//! `S_i = (1 + sin(x phi_i)) / 2` and `C_i = (1 + cos(x phi_i)) / 2`,
//! applied per axis. Every projected point lies in `[0,1]^d`, so any encoder
//! defined on the unit cube can be sampled there.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{bail, Result};
use crate::Error;

/// Default upper bound of the Lissajous sweep in [`lissajous_distinct`].
pub const LISSAJOUS_PHI_MAX: f64 = 16.0 * PI;
/// Default number of samples in [`lissajous_distinct`].
pub const LISSAJOUS_SAMPLES: usize = 4096;
/// Two curves are distinct when some sample differs by more than this.
pub const LISSAJOUS_TOLERANCE: f64 = 1e-6;

/// Angular frequencies `phi_i`, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySchedule {
    phi: Vec<f64>,
}

impl FrequencySchedule {
    /// `phi_i = 2^i * pi` for `i = 1..=count`.
    pub fn power_of_two(count: usize) -> Self {
        Self {
            phi: (1..=count).map(|i| libm::ldexp(PI, i as i32)).collect(),
        }
    }

    /// Arbitrary strictly increasing positive frequencies.
    pub fn custom(phi: Vec<f64>) -> Result<Self> {
        if phi.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            bail!(Config, "frequencies must be finite and positive");
        }
        if phi.windows(2).any(|w| w[1] <= w[0]) {
            bail!(Config, "frequencies must be strictly increasing");
        }
        Ok(Self { phi })
    }

    /// Number of frequencies `L`.
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    #[allow(missing_docs)]
    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Angular coefficients `phi_i`.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Ordinary frequencies `f_i = phi_i / (2 pi)`.
    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.phi.iter().map(|p| p / (2.0 * PI))
    }

    /// Half periods of `sin(x phi_i)` over the unit interval, `phi_i / pi`.
    ///
    /// This is `2^i` for the power-of-two schedule and is the divisor used
    /// by the pink latent allocation.
    pub fn half_cycles(&self, i: usize) -> f64 {
        self.phi[i - 1] / PI
    }

    /// True when this is exactly [`Self::power_of_two`] of its length.
    pub fn is_power_of_two(&self) -> bool {
        *self == Self::power_of_two(self.len())
    }
}

/// The `2L+1` points `(x, S_1..S_L, C_1..C_L)` of one coordinate, flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct PointsOfInterest {
    dims: usize,
    levels: usize,
    points: Vec<f64>,
}

impl PointsOfInterest {
    /// Number of points, `2L+1`.
    pub fn len(&self) -> usize {
        2 * self.levels + 1
    }

    /// Never true: the origin is always present.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate dimensionality.
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Point `k` in layout order.
    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dims..(k + 1) * self.dims]
    }

    /// The original coordinate.
    pub fn origin(&self) -> &[f64] {
        self.point(0)
    }

    /// `S_i` for `i` in `1..=L`.
    pub fn sin_point(&self, i: usize) -> &[f64] {
        self.point(i)
    }

    /// `C_i` for `i` in `1..=L`.
    pub fn cos_point(&self, i: usize) -> &[f64] {
        self.point(self.levels + i)
    }

    /// Iterate points in layout order.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dims)
    }

    /// Flat storage, point-major.
    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if let Some(a) = x.iter().position(|v| v.is_nan()) {
        bail!(Input, "coordinate component {} is NaN", a);
    }
    if let Some(a) = x.iter().position(|v| !v.is_finite()) {
        bail!(Input, "coordinate component {} is not finite", a);
    }
    Ok(())
}

/// Points of interest of `x` under `schedule`.
pub fn project(x: &[f64], schedule: &FrequencySchedule) -> Result<PointsOfInterest> {
    let mut points = Vec::with_capacity((2 * schedule.len() + 1) * x.len());
    project_into(x, schedule, true, &mut points)?;
    Ok(PointsOfInterest {
        dims: x.len(),
        levels: schedule.len(),
        points,
    })
}

/// Append the points of interest of `x` to `out`, optionally without the origin.
pub fn project_into(x: &[f64], schedule: &FrequencySchedule, include_origin: bool, out: &mut Vec<f64>) -> Result<()> {
    check_finite(x)?;
    if include_origin {
        out.extend_from_slice(x);
    }
    for &phi in schedule.phi() {
        out.extend(x.iter().map(|&v| 0.5 * (1.0 + libm::sin(v * phi))));
    }
    for &phi in schedule.phi() {
        out.extend(x.iter().map(|&v| 0.5 * (1.0 + libm::cos(v * phi))));
    }
    Ok(())
}

/// Raw positional encoding, `2 L d` values ordered by frequency, then axis,
/// then `(sin, cos)`.
pub fn ape(x: &[f64], schedule: &FrequencySchedule) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * schedule.len() * x.len());
    ape_into(x, schedule, &mut out)?;
    Ok(out)
}

/// Appending form of [`ape`].
pub fn ape_into(x: &[f64], schedule: &FrequencySchedule, out: &mut Vec<f64>) -> Result<()> {
    check_finite(x)?;
    for &phi in schedule.phi() {
        for &v in x {
            let (s, c) = libm::sincos(v * phi);
            out.push(s);
            out.push(c);
        }
    }
    Ok(())
}

/// Samples `(sin(p_x phi), sin(p_y phi))` for `phi` evenly spaced over `[phi_min, phi_max]`.
pub fn lissajous_curve(p: [f64; 2], phi_min: f64, phi_max: f64, samples: usize) -> Result<Vec<[f64; 2]>> {
    check_finite(&p)?;
    if samples < 2 {
        bail!(Input, "a curve needs at least 2 samples, got {}", samples);
    }
    if phi_min >= phi_max || phi_min.is_nan() || phi_max.is_nan() || !phi_min.is_finite() || !phi_max.is_finite() {
        bail!(Input, "need finite phi_min < phi_max, got [{}, {}]", phi_min, phi_max);
    }
    let step = (phi_max - phi_min) / (samples - 1) as f64;
    Ok((0..samples)
        .map(|j| {
            let phi = phi_min + step * j as f64;
            [libm::sin(p[0] * phi), libm::sin(p[1] * phi)]
        })
        .collect())
}

/// Largest Euclidean gap between the curves of `p` and `q` sampled over `[0, phi_max]`.
pub fn lissajous_gap(p: [f64; 2], q: [f64; 2], phi_max: f64, samples: usize) -> Result<f64> {
    let a = lissajous_curve(p, 0.0, phi_max, samples)?;
    let b = lissajous_curve(q, 0.0, phi_max, samples)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(u, v)| libm::hypot(u[0] - v[0], u[1] - v[1]))
        .fold(0.0, f64::max))
}

/// Whether two distinct points trace different Lissajous curves.
pub fn lissajous_distinct(p: [f64; 2], q: [f64; 2], phi_max: f64, samples: usize) -> Result<bool> {
    if p == q {
        return Err(Error::Contract(alloc::format!(
            "distinctness is only defined for two different points, got {:?} twice",
            p
        )));
    }
    Ok(lissajous_gap(p, q, phi_max, samples)? > LISSAJOUS_TOLERANCE)
}
