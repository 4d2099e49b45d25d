//! Gauss–Legendre rules and adaptive Gauss–Legendre integration.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn rule20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Fixed 20-point Gauss–Legendre on [lo, hi].
pub fn gl20(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (x, w) = rule20();
    let c = 0.5 * (hi + lo);
    let h = 0.5 * (hi - lo);
    x.iter().zip(w).map(|(&xi, &wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

/// Adaptive Gauss–Legendre: bisect until the 20-point rule on an interval
/// agrees with the sum over its halves to within `tol` (absolute, shared
/// across the subdivision).
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi == lo {
        return 0.0;
    }
    let whole = gl20(&f, lo, hi);
    adapt(&f, lo, hi, whole, tol, 0)
}

fn adapt(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let left = gl20(f, lo, mid);
    let right = gl20(f, mid, hi);
    let split = left + right;
    // Differences at the rounding level of the sum cannot be reduced further.
    if (split - whole).abs() <= tol.max(4.0 * f64::EPSILON * split.abs()) || depth >= 40 {
        return split;
    }
    adapt(f, lo, mid, left, 0.5 * tol, depth + 1) + adapt(f, mid, hi, right, 0.5 * tol, depth + 1)
}
