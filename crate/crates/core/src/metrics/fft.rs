use alloc::vec;
use alloc::vec::Vec;

/// In-place iterative radix-2 FFT of interleaved `(re, im)` pairs.
///
/// `re.len()` must be a power of two.
pub(crate) fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * core::f64::consts::PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let (s, c) = libm::sincos(ang * k as f64);
                let (a, b) = (start + k, start + k + half);
                let tr = re[b] * c - im[b] * s;
                let ti = re[b] * s + im[b] * c;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
        len <<= 1;
    }
}

/// Side of the square power-of-two canvas used for a `w x h` plane.
pub(crate) fn padded_side(w: usize, h: usize) -> usize {
    w.max(h).next_power_of_two()
}

/// 2-D DFT of a row-major `w x h` plane zero-padded to `p x p`; returns `(re, im)`.
pub(crate) fn fft2_padded(plane: &[f64], w: usize, h: usize, p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; p * p];
    let mut im = vec![0.0; p * p];
    for y in 0..h {
        re[y * p..y * p + w].copy_from_slice(&plane[y * w..(y + 1) * w]);
    }
    for row in 0..h {
        fft_in_place(&mut re[row * p..(row + 1) * p], &mut im[row * p..(row + 1) * p]);
    }
    let mut cr = vec![0.0; p];
    let mut ci = vec![0.0; p];
    for x in 0..p {
        for y in 0..p {
            cr[y] = re[y * p + x];
            ci[y] = im[y * p + x];
        }
        fft_in_place(&mut cr, &mut ci);
        for y in 0..p {
            re[y * p + x] = cr[y];
            im[y * p + x] = ci[y];
        }
    }
    (re, im)
}
