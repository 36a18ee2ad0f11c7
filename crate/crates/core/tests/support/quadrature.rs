//! Brute-force Biot-Savart line integral.

use std::f64::consts::PI;

use nvscope::fieldcore::Vec3;
use nvscope::nearfield::MU0;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|k| {
            let mut x = (PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `(µ0/4π) ∫ dl × r / |r|³` by adaptive composite Gauss-Legendre.
pub fn brute_force(a: Vec3, b: Vec3, p: Vec3, rule: &[(f64, f64)]) -> Vec3 {
    let dl = b - a;
    let panel = |s0: f64, s1: f64| -> Vec3 {
        let (mid, half) = (0.5 * (s0 + s1), 0.5 * (s1 - s0));
        rule.iter().fold(Vec3::ZERO, |acc, &(x, w)| {
            let q = a + dl * (mid + half * x);
            let r = p - q;
            let n = r.norm();
            acc + dl.cross(r) * (w * half / (n * n * n))
        })
    };
    fn recurse(f: &dyn Fn(f64, f64) -> Vec3, s0: f64, s1: f64, whole: Vec3, depth: u32) -> Vec3 {
        let m = 0.5 * (s0 + s1);
        let (l, r) = (f(s0, m), f(m, s1));
        let split = l + r;
        if depth == 0 || (split - whole).norm() <= 1e-15 * split.norm() {
            return split;
        }
        recurse(f, s0, m, l, depth - 1) + recurse(f, m, s1, r, depth - 1)
    }
    recurse(&panel, 0.0, 1.0, panel(0.0, 1.0), 30) * (MU0 / (4.0 * PI))
}
