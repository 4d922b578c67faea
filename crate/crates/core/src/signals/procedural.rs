//! Synthetic test signals, so no licensed images are needed.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Image;
use crate::error::{bail, Result};

fn check_size(size: usize) -> Result<()> {
    if size < 2 {
        bail!(Input, "generated images need a side of at least 2, got {}", size);
    }
    Ok(())
}

/// Dead-leaves image: opaque disks with radii drawn from `p(r) ~ r^-3`
/// stacked front to back until the canvas is covered.
///
/// The scale-invariant radius law gives the image the `1/f^2` power spectrum
/// typical of natural photographs; each leaf also carries a soft shading
/// gradient so regions are not perfectly flat.
pub fn dead_leaves(size: usize, seed: u64) -> Result<Image> {
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size * size;
    let mut covered = alloc::vec![false; n];
    let mut remaining = n;
    let mut data = alloc::vec![0.0; n * 3];
    let (r_min, r_max) = (1.0f64, size as f64 / 3.0);
    let (a, b) = (1.0 / (r_min * r_min), 1.0 / (r_max * r_max));
    let max_leaves = 64 * n;
    let mut leaves = 0;
    while remaining > 0 && leaves < max_leaves {
        leaves += 1;
        let u: f64 = rng.gen();
        let r = libm::pow(a - u * (a - b), -0.5);
        let cx = rng.gen_range(-r..size as f64 + r);
        let cy = rng.gen_range(-r..size as f64 + r);
        let base: [f64; 3] = {
            let l: f64 = rng.gen_range(0.1..0.9);
            [
                (l + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0),
                (l + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0),
                (l + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0),
            ]
        };
        let (gx, gy) = (rng.gen_range(-0.15..0.15) / r, rng.gen_range(-0.15..0.15) / r);
        let x0 = libm::floor(cx - r).max(0.0) as usize;
        let x1 = (libm::ceil(cx + r).max(0.0) as usize).min(size);
        let y0 = libm::floor(cy - r).max(0.0) as usize;
        let y1 = (libm::ceil(cy + r).max(0.0) as usize).min(size);
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let p = y * size + x;
                if covered[p] || dx * dx + dy * dy > r * r {
                    continue;
                }
                covered[p] = true;
                remaining -= 1;
                let shade = gx * dx + gy * dy;
                for c in 0..3 {
                    data[p * 3 + c] = (base[c] + shade).clamp(0.0, 1.0);
                }
            }
        }
    }
    Image::new(size, size, 3, data)
}

/// Independent uniform values in `[0, 1]` for every pixel and channel.
pub fn white_noise(size: usize, seed: u64) -> Result<Image> {
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..size * size * 3).map(|_| rng.gen::<f64>()).collect();
    Image::new(size, size, 3, data)
}

/// Brownian sheet: centered white noise summed cumulatively along both axes,
/// rescaled to `[0, 1]` and replicated over three channels.
pub fn brownian_field(size: usize, seed: u64) -> Result<Image> {
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<f64> = (0..size * size).map(|_| rng.gen::<f64>() - 0.5).collect();
    for y in 0..size {
        for x in 1..size {
            f[y * size + x] += f[y * size + x - 1];
        }
    }
    for y in 1..size {
        for x in 0..size {
            f[y * size + x] += f[(y - 1) * size + x];
        }
    }
    let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let data = f.iter().flat_map(|&v| [(v - lo) / span; 3]).collect();
    Image::new(size, size, 3, data)
}
