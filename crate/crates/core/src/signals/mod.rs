//! Ground-truth signals and their samplers.
//!
//! Coordinates follow the center convention: pixel `(i, j)` of a `W x H`
//! image sits at `((i+0.5)/W, (j+0.5)/H)`, with coordinate axis 0 along the
//! image width. Samplers interpolate between centers and clamp at borders.

mod image;
pub mod procedural;
mod sdf;

use alloc::vec::Vec;

use rand::Rng;

pub use image::{Image, TextureSet};
pub use sdf::{analytic_sdf, SdfShape, SdfVolume};

/// Sample offsets this close to a pixel center read that pixel exactly.
const CENTER_SNAP: f64 = 1e-9;

fn axis(x: f64, n: usize) -> (usize, usize, f64) {
    let mut u = (x * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
    let r = libm::round(u);
    if libm::fabs(u - r) <= CENTER_SNAP {
        u = r;
    }
    let lo = (libm::floor(u) as usize).min(n - 1);
    (lo, (lo + 1).min(n - 1), u - lo as f64)
}

/// Bilinear sample of `img` at `x` in `[0,1]^2`.
pub fn sample_image(img: &Image, x: &[f64]) -> Vec<f64> {
    let (x0, x1, tx) = axis(x[0], img.width());
    let (y0, y1, ty) = axis(x[1], img.height());
    (0..img.channels())
        .map(|c| {
            let top = (1.0 - tx) * img.get(x0, y0, c) + tx * img.get(x1, y0, c);
            let bottom = (1.0 - tx) * img.get(x0, y1, c) + tx * img.get(x1, y1, c);
            (1.0 - ty) * top + ty * bottom
        })
        .collect()
}

/// Trilinear sample of `vol` at `x` in `[0,1]^3`.
pub fn sample_volume(vol: &SdfVolume, x: &[f64]) -> f64 {
    let n = vol.resolution();
    let (i0, i1, tx) = axis(x[0], n);
    let (j0, j1, ty) = axis(x[1], n);
    let (k0, k1, tz) = axis(x[2], n);
    let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
    let plane = |k| {
        lerp(
            lerp(vol.get(i0, j0, k), vol.get(i1, j0, k), tx),
            lerp(vol.get(i0, j1, k), vol.get(i1, j1, k), tx),
            ty,
        )
    };
    lerp(plane(k0), plane(k1), tz)
}

/// Where training coordinates are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateDomain {
    /// Uniformly chosen pixel centers.
    Pixels {
        #[allow(missing_docs)]
        width: usize,
        #[allow(missing_docs)]
        height: usize,
    },
    /// Uniform points in `[0,1]^dims`.
    Continuous {
        #[allow(missing_docs)]
        dims: usize,
    },
}

impl CoordinateDomain {
    #[allow(missing_docs)]
    pub fn dims(&self) -> usize {
        match self {
            CoordinateDomain::Pixels { .. } => 2,
            CoordinateDomain::Continuous { dims } => *dims,
        }
    }
}

/// `n` coordinates drawn from `domain`, flattened row-major.
pub fn sample_coordinates(rng: &mut impl Rng, n: usize, domain: CoordinateDomain) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * domain.dims());
    match domain {
        CoordinateDomain::Pixels { width, height } => {
            for _ in 0..n {
                let i = rng.gen_range(0..width);
                let j = rng.gen_range(0..height);
                out.push((i as f64 + 0.5) / width as f64);
                out.push((j as f64 + 0.5) / height as f64);
            }
        }
        CoordinateDomain::Continuous { dims } => out.extend((0..n * dims).map(|_| rng.gen::<f64>())),
    }
    out
}

/// Every pixel center of a `width x height` image in storage order.
pub fn pixel_centers(width: usize, height: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * width * height);
    for j in 0..height {
        for i in 0..width {
            out.push((i as f64 + 0.5) / width as f64);
            out.push((j as f64 + 0.5) / height as f64);
        }
    }
    out
}

/// Every voxel center of an `n^3` volume in storage order.
pub fn voxel_centers(n: usize) -> Vec<f64> {
    let c = |i: usize| (i as f64 + 0.5) / n as f64;
    let mut out = Vec::with_capacity(3 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                out.extend_from_slice(&[c(i), c(j), c(k)]);
            }
        }
    }
    out
}

/// A ground truth to fit.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    /// RGB image in `[0,1]`.
    Image(Image),
    #[allow(missing_docs)]
    TextureSet(TextureSet),
    #[allow(missing_docs)]
    Sdf(SdfVolume),
}

impl Signal {
    /// Validating constructor for an RGB image.
    pub fn image(img: Image) -> crate::Result<Self> {
        img.check_rgb_unit()?;
        Ok(Signal::Image(img))
    }

    /// Coordinate dimensionality.
    pub fn dims(&self) -> usize {
        match self {
            Signal::Sdf(_) => 3,
            _ => 2,
        }
    }

    /// Values per coordinate.
    pub fn channels(&self) -> usize {
        match self {
            Signal::Image(i) => i.channels(),
            Signal::TextureSet(t) => 3 * t.len(),
            Signal::Sdf(_) => 1,
        }
    }

    /// Training coordinate distribution.
    pub fn domain(&self) -> CoordinateDomain {
        match self {
            Signal::Image(i) => CoordinateDomain::Pixels {
                width: i.width(),
                height: i.height(),
            },
            Signal::TextureSet(t) => CoordinateDomain::Pixels {
                width: t.layers()[0].width(),
                height: t.layers()[0].height(),
            },
            Signal::Sdf(_) => CoordinateDomain::Continuous { dims: 3 },
        }
    }

    /// Interpolated ground truth at `x`; out-of-range inputs are clamped.
    pub fn sample(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Signal::Image(i) => sample_image(i, x),
            Signal::TextureSet(t) => t.layers().iter().flat_map(|l| sample_image(l, x)).collect(),
            Signal::Sdf(v) => alloc::vec![sample_volume(v, x)],
        }
    }

    /// Ground truth for many coordinates, row-major.
    pub fn sample_batch(&self, coords: &[f64]) -> Vec<f64> {
        coords.chunks_exact(self.dims()).flat_map(|x| self.sample(x)).collect()
    }

    /// All lattice coordinates (pixel or voxel centers) in storage order.
    pub fn lattice(&self) -> Vec<f64> {
        match self {
            Signal::Sdf(v) => voxel_centers(v.resolution()),
            _ => match self.domain() {
                CoordinateDomain::Pixels { width, height } => pixel_centers(width, height),
                CoordinateDomain::Continuous { .. } => unreachable!(),
            },
        }
    }

    /// Raw values in lattice order.
    pub fn lattice_values(&self) -> Vec<f64> {
        match self {
            Signal::Image(i) => i.data().to_vec(),
            Signal::TextureSet(t) => t.stacked().into_data(),
            Signal::Sdf(v) => v.values().to_vec(),
        }
    }
}

/// Free-function form of [`Signal::sample`].
pub fn sample_ground_truth(signal: &Signal, x: &[f64]) -> Vec<f64> {
    signal.sample(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(w: usize, h: usize) -> Image {
        let data = (0..w * h * 3).map(|i| (i % 97) as f64 / 97.0).collect();
        Image::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn pixel_centers_are_exact() {
        let img = ramp(7, 5);
        let sig = Signal::image(img.clone()).unwrap();
        let coords = sig.lattice();
        assert_eq!(sig.sample_batch(&coords), img.data());
    }

    #[test]
    fn two_by_two_center_is_mean() {
        let img = Image::new(2, 2, 1, vec![0.0, 1.0, 2.0, 5.0]).unwrap();
        assert!((sample_image(&img, &[0.5, 0.5])[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_everywhere_and_clamped() {
        let img = Image::filled(4, 3, 3, 0.25).unwrap();
        for x in [[-1.0, 0.3], [0.0, 0.0], [0.7, 2.0], [0.41, 0.93]] {
            assert_eq!(sample_image(&img, &x), vec![0.25; 3]);
        }
    }

    #[test]
    fn coordinates_land_on_centers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dom = CoordinateDomain::Pixels { width: 8, height: 4 };
        assert!(sample_coordinates(&mut rng, 0, dom).is_empty());
        let pts = sample_coordinates(&mut rng, 100, dom);
        for p in pts.chunks(2) {
            let i = p[0] * 8.0 - 0.5;
            let j = p[1] * 4.0 - 0.5;
            assert_eq!(i, i.round());
            assert_eq!(j, j.round());
        }
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let dom = CoordinateDomain::Continuous { dims: 3 };
        assert_eq!(sample_coordinates(&mut a, 10, dom), sample_coordinates(&mut b, 10, dom));
    }

    #[test]
    fn sphere_examples() {
        let s = SdfShape::Sphere {
            center: [0.5; 3],
            radius: 0.25,
        };
        assert_eq!(s.distance([0.5, 0.5, 0.5]), -0.25);
        assert_eq!(s.distance([0.5, 0.5, 0.75]), 0.0);
        assert!((s.distance([0.0; 3]) - (0.75f64.sqrt() - 0.25)).abs() < 1e-15);
        assert!(analytic_sdf(SdfShape::Sphere { center: [0.5; 3], radius: 0.0 }, 4).is_err());
    }

    #[test]
    fn volume_lattice_is_exact() {
        let vol = analytic_sdf(
            SdfShape::Torus {
                center: [0.5; 3],
                major: 0.3,
                minor: 0.1,
            },
            6,
        )
        .unwrap();
        let sig = Signal::Sdf(vol.clone());
        assert_eq!(sig.sample_batch(&sig.lattice()), vol.values());
    }

    #[test]
    fn texture_set_is_name_sorted() {
        let a = Image::filled(2, 2, 3, 0.1).unwrap();
        let b = Image::filled(2, 2, 3, 0.9).unwrap();
        let one = TextureSet::new(vec![("rough".into(), a.clone()), ("albedo".into(), b.clone())]).unwrap();
        let two = TextureSet::new(vec![("albedo".into(), b), ("rough".into(), a)]).unwrap();
        assert_eq!(one, two);
        assert_eq!(one.names(), ["albedo", "rough"]);
        assert_eq!(one.stacked().pixel(0, 0), &[0.9, 0.9, 0.9, 0.1, 0.1, 0.1]);
    }

    #[test]
    fn generators_are_deterministic_and_in_range() {
        for gen in [procedural::dead_leaves, procedural::white_noise, procedural::brownian_field] {
            let a = gen(32, 5).unwrap();
            assert_eq!(a, gen(32, 5).unwrap());
            a.check_rgb_unit().unwrap();
        }
    }
}
