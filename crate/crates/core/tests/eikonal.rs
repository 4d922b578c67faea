use peps_core::signals::{analytic_sdf, SdfShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 128;

/// Central-difference gradient norm at 1000 voxels accepted by `keep`.
fn worst_gradient_error(shape: SdfShape, keep: impl Fn([f64; 3]) -> bool) -> f64 {
    let vol = analytic_sdf(shape, N).unwrap();
    let h = 1.0 / N as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut accepted = 0;
    while accepted < 1000 {
        let [i, j, k] = [0; 3].map(|_| rng.gen_range(1..N - 1));
        let p = [i, j, k].map(|v| (v as f64 + 0.5) * h);
        if !keep(p) {
            continue;
        }
        accepted += 1;
        let gx = (vol.get(i + 1, j, k) - vol.get(i - 1, j, k)) / (2.0 * h);
        let gy = (vol.get(i, j + 1, k) - vol.get(i, j - 1, k)) / (2.0 * h);
        let gz = (vol.get(i, j, k + 1) - vol.get(i, j, k - 1)) / (2.0 * h);
        worst = worst.max(((gx * gx + gy * gy + gz * gz).sqrt() - 1.0).abs());
    }
    worst
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

const MARGIN: f64 = 4.0 / N as f64;

#[test]
fn sphere_gradient_has_unit_norm() {
    let c = [0.5, 0.5, 0.5];
    let e = worst_gradient_error(SdfShape::Sphere { center: c, radius: 0.25 }, |p| dist(p, c) > MARGIN);
    assert!(e < 5e-2, "{e}");
}

#[test]
fn torus_gradient_has_unit_norm() {
    let c = [0.5, 0.5, 0.5];
    let (major, minor) = (0.3, 0.1);
    // medial set: the core circle and the symmetry axis
    let keep = |p: [f64; 3]| {
        let radial = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        let to_core = ((radial - major).powi(2) + (p[2] - c[2]).powi(2)).sqrt();
        to_core > MARGIN && radial > MARGIN
    };
    let e = worst_gradient_error(SdfShape::Torus { center: c, major, minor }, keep);
    assert!(e < 5e-2, "{e}");
}

#[test]
fn box_gradient_has_unit_norm_outside() {
    let c = [0.5, 0.5, 0.5];
    let half = [0.2, 0.15, 0.25];
    let shape = SdfShape::Box { center: c, half_extents: half };
    let e = worst_gradient_error(shape, |p| shape.distance(p) > MARGIN);
    assert!(e < 5e-2, "{e}");
}
