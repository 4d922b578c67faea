//! Image quality, spectral and SDF metrics.
//!
//! Spectra are computed on a zero-padded square canvas whose side is the
//! next power of two of the larger image side; both images of a comparison
//! share the same canvas. Magnitudes are floored at `1e-10` before logs.

mod fft;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::signals::{Image, SdfVolume};
use fft::{fft2_padded, padded_side};

/// Magnitude floor applied before taking logarithms.
pub const SPECTRAL_FLOOR: f64 = 1e-10;

/// SSIM window size.
pub const SSIM_WINDOW: usize = 11;
/// SSIM Gaussian standard deviation.
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Mean squared error over all values.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let n = a.data().len() as f64;
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// `20 log10(peak) - 10 log10(MSE)`; infinite for identical images.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    if !(peak > 0.0 && peak.is_finite()) {
        bail!(Input, "peak must be positive and finite, got {}", peak);
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * libm::log10(peak) - 10.0 * libm::log10(m))
}

fn gaussian_window() -> Vec<f64> {
    let c = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| libm::exp(-((i as f64 - c) * (i as f64 - c)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)))
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable 'valid' filtering of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over valid Gaussian windows, averaged over channels; dynamic range 1.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        bail!(Input, "SSIM needs images of at least {0}x{0}, got {1}x{2}", SSIM_WINDOW, w, h);
    }
    let k = gaussian_window();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for c in 0..a.channels() {
        let x = a.channel(c);
        let y = b.channel(c);
        let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).collect::<Vec<f64>>();
        let mx = filter_valid(&x, w, h, &k);
        let my = filter_valid(&y, w, h, &k);
        let sxx = filter_valid(&prod(&x, &x), w, h, &k);
        let syy = filter_valid(&prod(&y, &y), w, h, &k);
        let sxy = filter_valid(&prod(&x, &y), w, h, &k);
        let mut sum = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            sum += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += sum / mx.len() as f64;
    }
    Ok(total / a.channels() as f64)
}

fn log_magnitudes(plane: &[f64], w: usize, h: usize, p: usize) -> Vec<f64> {
    let (re, im) = fft2_padded(plane, w, h, p);
    re.iter()
        .zip(&im)
        .map(|(r, i)| libm::log10(libm::hypot(*r, *i).max(SPECTRAL_FLOOR)))
        .collect()
}

/// RMS difference of log10 2-D magnitude spectra, averaged over channels.
pub fn lsd(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let (w, h) = (a.width(), a.height());
    let p = padded_side(w, h);
    let mut total = 0.0;
    for c in 0..a.channels() {
        let la = log_magnitudes(&a.channel(c), w, h, p);
        let lb = log_magnitudes(&b.channel(c), w, h, p);
        let ms = la.iter().zip(&lb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / la.len() as f64;
        total += libm::sqrt(ms);
    }
    Ok(total / a.channels() as f64)
}

/// Radially averaged power spectrum of the channel-mean image.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    /// Integer radii `0..=Nyquist`, in cycles per padded canvas side.
    pub radii: Vec<f64>,
    /// Mean power per radius bin.
    pub power: Vec<f64>,
    /// Frequency samples per bin.
    pub counts: Vec<usize>,
    /// Sum of power over the whole plane; equals the image variance.
    pub total_power: f64,
    /// `alpha` fitted over the default range, `None` when undefined.
    pub fitted_alpha: Option<f64>,
}

impl RadialSpectrum {
    /// Two-column `radius power` text, one bin per line.
    pub fn to_text(&self) -> alloc::string::String {
        use core::fmt::Write;
        let mut s = alloc::string::String::new();
        for (r, p) in self.radii.iter().zip(&self.power) {
            let _ = writeln!(s, "{r} {p:e}");
        }
        s
    }
}

/// Power spectrum binned by rounded frequency radius.
///
/// The channel mean is taken, its spatial mean subtracted, and power is
/// `|F|^2 / (P^2 n_pixels)` so that the plane sums to the variance.
pub fn radial_psd(img: &Image) -> RadialSpectrum {
    let (w, h) = (img.width(), img.height());
    let mut plane = img.mean_channel().into_data();
    let mean = plane.iter().sum::<f64>() / plane.len() as f64;
    plane.iter_mut().for_each(|v| *v -= mean);
    let p = padded_side(w, h);
    let (re, im) = fft2_padded(&plane, w, h, p);
    let norm = (p * p) as f64 * (w * h) as f64;
    let nyq = p / 2;
    let mut sums = vec![0.0; nyq + 1];
    let mut counts = vec![0usize; nyq + 1];
    let mut total = 0.0;
    let signed = |k: usize| if k <= p / 2 { k as f64 } else { k as f64 - p as f64 };
    for ky in 0..p {
        for kx in 0..p {
            let i = ky * p + kx;
            let pw = (re[i] * re[i] + im[i] * im[i]) / norm;
            total += pw;
            let r = libm::round(libm::hypot(signed(kx), signed(ky))) as usize;
            if r <= nyq {
                sums[r] += pw;
                counts[r] += 1;
            }
        }
    }
    let power = sums.iter().zip(&counts).map(|(s, &c)| s / c.max(1) as f64).collect();
    let mut spec = RadialSpectrum {
        radii: (0..=nyq).map(|r| r as f64).collect(),
        power,
        counts,
        total_power: total,
        fitted_alpha: None,
    };
    spec.fitted_alpha = psd_slope(&spec, None).ok();
    spec
}

/// Default fit range: radii in `[1, 0.9 r_max]`.
pub fn default_fit_range(spec: &RadialSpectrum) -> (f64, f64) {
    let r_max = spec.radii.last().copied().unwrap_or(0.0);
    (1.0, 0.9 * r_max)
}

/// `alpha` of the `1/f^alpha` law fitted by least squares in log-log space.
pub fn psd_slope(spec: &RadialSpectrum, fit_range: Option<(f64, f64)>) -> Result<f64> {
    let (lo, hi) = fit_range.unwrap_or_else(|| default_fit_range(spec));
    let in_range: Vec<(f64, f64)> = spec
        .radii
        .iter()
        .zip(&spec.power)
        .filter(|(r, _)| **r >= lo && **r <= hi && **r > 0.0)
        .map(|(r, p)| (*r, *p))
        .collect();
    if in_range.len() < 2 {
        bail!(Input, "fit range [{}, {}] holds {} bins, need at least 2", lo, hi, in_range.len());
    }
    let pts: Vec<(f64, f64)> = in_range
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(r, p)| (libm::log10(*r), libm::log10(*p)))
        .collect();
    if pts.len() < 2 {
        bail!(Degenerate, "spectrum has no power in the fit range");
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(-sxy / sxx)
}

/// Mean absolute difference of log10 radial power over bins with radius >= 1.
pub fn lpsd(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let (sa, sb) = (radial_psd(a), radial_psd(b));
    let floor = SPECTRAL_FLOOR * SPECTRAL_FLOOR;
    let diffs: Vec<f64> = sa.power[1..]
        .iter()
        .zip(&sb.power[1..])
        .map(|(x, y)| (libm::log10(x.max(floor)) - libm::log10(y.max(floor))).abs())
        .collect();
    Ok(diffs.iter().sum::<f64>() / diffs.len().max(1) as f64)
}

/// Intersection over union of the negative (interior) voxels; 1 when both are empty.
pub fn sdf_iou(pred: &SdfVolume, gt: &SdfVolume) -> Result<f64> {
    if pred.resolution() != gt.resolution() {
        bail!(Input, "volume resolutions differ: {} vs {}", pred.resolution(), gt.resolution());
    }
    Ok(iou_of_signs(pred.values(), gt.values()))
}

/// IoU of `v < 0` masks of two equally long value lists.
pub fn iou_of_signs(pred: &[f64], gt: &[f64]) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (p, g) in pred.iter().zip(gt) {
        let (a, b) = (*p < 0.0, *g < 0.0);
        inter += usize::from(a && b);
        union += usize::from(a || b);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::procedural;

    fn img(w: usize, h: usize, f: impl Fn(usize) -> f64) -> Image {
        Image::new(w, h, 3, (0..w * h * 3).map(f).collect()).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = Image::filled(4, 4, 3, 0.0).unwrap();
        let b = Image::filled(4, 4, 3, 1.0).unwrap();
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &b, 1.0).unwrap().abs() < 1e-12);
        let c = Image::filled(4, 4, 3, 0.1).unwrap();
        assert!((psnr(&a, &c, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let d = Image::filled(4, 5, 3, 0.0).unwrap();
        assert!(matches!(psnr(&a, &d, 1.0), Err(crate::Error::Input(_))));
    }

    #[test]
    fn ssim_identity_and_inversion() {
        let a = procedural::white_noise(32, 1).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = a.map(|v| 1.0 - v);
        assert!(ssim(&a, &inv).unwrap() < 0.2);
        let small = Image::filled(8, 8, 3, 0.5).unwrap();
        assert!(ssim(&small, &small).is_err());
    }

    #[test]
    fn ssim_constant_shift_is_luminance_only() {
        // Variances vanish, so SSIM = (2 u v + c1) / (u^2 + v^2 + c1).
        let a = Image::filled(16, 16, 1, 0.2).unwrap();
        let b = Image::filled(16, 16, 1, 0.7).unwrap();
        let c1 = 1e-4;
        let want = (2.0 * 0.2 * 0.7 + c1) / (0.04 + 0.49 + c1);
        assert!((ssim(&a, &b).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn lsd_of_doubled_image() {
        let a = procedural::white_noise(16, 2).unwrap();
        let b = a.map(|v| 2.0 * v);
        assert_eq!(lsd(&a, &a).unwrap(), 0.0);
        assert!((lsd(&a, &b).unwrap() - 2f64.log10()).abs() < 1e-6);
    }

    #[test]
    fn parseval_holds() {
        let a = img(20, 12, |i| ((i * 31 % 17) as f64) / 17.0);
        let gray = a.mean_channel();
        let m = gray.data().iter().sum::<f64>() / gray.data().len() as f64;
        let var = gray.data().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / gray.data().len() as f64;
        let s = radial_psd(&a);
        assert!((s.total_power - var).abs() <= 1e-6 * var);
    }

    #[test]
    fn constant_image_is_degenerate() {
        let s = radial_psd(&Image::filled(16, 16, 3, 0.4).unwrap());
        assert!(s.fitted_alpha.is_none());
        assert!(matches!(psd_slope(&s, None), Err(crate::Error::Degenerate(_))));
        assert!(matches!(psd_slope(&s, Some((3.0, 2.0))), Err(crate::Error::Input(_))));
    }

    #[test]
    fn lpsd_of_doubled_image() {
        let a = procedural::white_noise(32, 3).unwrap();
        let b = a.map(|v| 2.0 * v);
        assert_eq!(lpsd(&a, &a).unwrap(), 0.0);
        assert!((lpsd(&a, &b).unwrap() - 2.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn iou_examples() {
        let n = 4;
        let mk = |f: &dyn Fn(usize) -> f64| SdfVolume::new(n, (0..64).map(f).collect()).unwrap();
        let a = mk(&|i| if i < 32 { -1.0 } else { 1.0 });
        let b = mk(&|i| if (16..48).contains(&i) { -1.0 } else { 1.0 });
        let c = mk(&|i| if i >= 32 { -1.0 } else { 1.0 });
        assert_eq!(sdf_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(sdf_iou(&a, &c).unwrap(), 0.0);
        assert!((sdf_iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let empty = mk(&|_| 1.0);
        assert_eq!(sdf_iou(&empty, &empty).unwrap(), 1.0);
    }
}
