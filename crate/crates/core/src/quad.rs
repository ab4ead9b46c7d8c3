//! Gauss-Legendre and tanh-sinh quadrature.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (
        x.iter().map(|xi| c + h * xi).collect(),
        w.iter().map(|wi| h * wi).collect(),
    )
}

/// A node of the tanh-sinh rule on `[a, b]`.
#[derive(Clone, Copy, Debug)]
pub struct TanhSinhNode {
    pub x: f64,
    pub weight: f64,
    /// Distance from `x` to the nearer endpoint, computed without cancellation.
    pub gap: f64,
}

/// Tanh-sinh rule on `[a, b]` with step `h` in the auxiliary variable,
/// suited to integrands with endpoint singularities.
pub fn tanh_sinh_on(a: f64, b: f64, h: f64) -> Vec<TanhSinhNode> {
    let len = b - a;
    let n = (4.0 / h).ceil() as i64;
    let mut out = Vec::new();
    for j in -n..=n {
        let t = j as f64 * h;
        let u = 0.5 * PI * t.sinh();
        // distance to the endpoint in the direction of t
        let near = len / (1.0 + (2.0 * u.abs()).exp());
        let w = h * len * 0.5 * PI * t.cosh() / (2.0 * u.cosh().powi(2));
        if near <= 0.0 || w < 1e-300 {
            continue;
        }
        let x = if t < 0.0 { a + near } else { b - near };
        out.push(TanhSinhNode {
            x,
            weight: w,
            gap: near,
        });
    }
    out
}
