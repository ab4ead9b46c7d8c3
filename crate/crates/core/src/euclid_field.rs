//! Gaussian free field on the Euclidean sphere of radius `r`, realized through
//! real spherical-harmonic modes, together with Wick ordering, the
//! mode-truncated interacting measure and the reflection-positivity check.
//!
//! Points are `r (cos theta, sin theta sin phi, sin theta cos phi)` in the
//! coordinates `(X0, X1, X2)`; `X0` is Euclidean time, so the equator
//! `theta = pi/2` is the time-zero circle with `phi` its angle, and the time
//! reflection is `theta -> pi - theta`.
//!
//! Harmonics are orthonormal on the unit sphere and integrals carry the area
//! element `r^2 dOmega`. With `Var(b_lm) = 1/(l(l+1) + mu^2 r^2)` the field
//! `Phi(x) = sum b_lm Y_lm(x)` has covariance kernel
//! `(c_nu/2) P_s(-x.y/r^2)` with respect to that element.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};
use crate::one_particle::{smooth_bump, ModelParams};
use crate::quad::{gauss_legendre, gauss_legendre_on};
use crate::special_functions::{
    legendre_polynomials, log_gamma, normalized_legendre_table, LegendreSeries, DEFAULT_CUTOFF,
};
use crate::uir_circle::CircleFunction;

type C64 = Complex64;

/// Environment variable overriding the sampling thread count.
pub const THREADS_ENV: &str = "DSQFT_THREADS";

/// Effective sample sizes below this carry a reliability warning.
pub const MIN_RELIABLE_ESS: f64 = 10.0;

/// `1/(l(l+1) + mu^2 r^2)`.
pub fn mode_variance(params: &ModelParams, l: usize) -> f64 {
    let lf = l as f64;
    1.0 / (lf * (lf + 1.0) + params.zeta() * params.zeta())
}

/// Index of `(l, m)` in the real-harmonic coefficient vector.
pub fn harmonic_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

fn idx(l: usize, m: i64) -> usize {
    harmonic_index(l, m)
}

/// Number of real harmonics with `l <= l_max`.
pub fn harmonic_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// A point on the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl SpherePoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        require_finite("theta", theta)?;
        require_finite("phi", phi)?;
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!(
                "polar angle {theta} outside [0, pi]"
            )));
        }
        Ok(Self { theta, phi })
    }

    /// The point `x(psi)` of the equator.
    pub fn on_equator(psi: f64) -> Self {
        Self {
            theta: FRAC_PI_2,
            phi: psi,
        }
    }

    /// Unit vector `(X0, X1, X2) / r`.
    pub fn unit_vector(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(ct, st * sp, st * cp)
    }

    pub fn from_unit_vector(v: &Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Domain("zero or non-finite direction".into()));
        }
        let u = v / n;
        Self::new(u[0].clamp(-1.0, 1.0).acos(), u[1].atan2(u[2]))
    }

    /// Image under the time reflection `X0 -> -X0`.
    pub fn reflected(&self) -> Self {
        Self {
            theta: PI - self.theta,
            phi: self.phi,
        }
    }

    pub fn cos_angle(&self, other: &SpherePoint) -> f64 {
        self.unit_vector()
            .dot(&other.unit_vector())
            .clamp(-1.0, 1.0)
    }
}

/// Real orthonormal harmonics `Y_lm`, `l <= l_max`, at one point:
/// `sqrt(2) N_lm P_l^m cos(m phi)` for `m > 0`, `sqrt(2) N_lm P_l^|m| sin(|m| phi)`
/// for `m < 0`, without the Condon-Shortley phase.
pub fn real_harmonics(l_max: usize, point: &SpherePoint) -> Vec<f64> {
    let table = normalized_legendre_table(l_max, point.theta.cos());
    let mut out = vec![0.0; harmonic_count(l_max)];
    for l in 0..=l_max {
        out[idx(l, 0)] = table[l * (l + 1) / 2];
        for m in 1..=l {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let p = sign * std::f64::consts::SQRT_2 * table[l * (l + 1) / 2 + m];
            let (s, c) = (m as f64 * point.phi).sin_cos();
            out[idx(l, m as i64)] = p * c;
            out[idx(l, -(m as i64))] = p * s;
        }
    }
    out
}

/// Covariance kernel `(c_nu/2) P_s(-cos gamma)` between points of the sphere.
pub struct SphereCovariance {
    series: LegendreSeries,
    scale: f64,
}

impl SphereCovariance {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self {
            series: LegendreSeries::new(params.degree(), DEFAULT_CUTOFF)?,
            scale: (params.c_nu / 2.0).re,
        })
    }

    /// Kernel as a function of the geodesic angle `gamma` in `(0, pi]`.
    pub fn at_angle(&self, gamma: f64) -> Result<f64> {
        require_finite("gamma", gamma)?;
        if gamma <= 1e-12 {
            return Err(Error::Singular(
                "the covariance diverges logarithmically at coincident points".into(),
            ));
        }
        Ok(self.scale * self.series.eval(gamma.min(PI))?.re)
    }

    pub fn eval(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
        let v = x.unit_vector().cross(&y.unit_vector()).norm();
        let gamma = v.atan2(x.cos_angle(y));
        self.at_angle(gamma)
    }
}

/// `C(x, y)` of the free field.
pub fn sphere_covariance(params: &ModelParams, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    SphereCovariance::new(params)?.eval(x, y)
}

/// Truncated mode sum `sum_{l <= l_max} (2l+1)/(4 pi) var_l P_l(u)`.
pub fn covariance_mode_sum(params: &ModelParams, u: f64, l_max: usize) -> f64 {
    legendre_polynomials(l_max, u)
        .iter()
        .enumerate()
        .map(|(l, p)| (2 * l + 1) as f64 / (4.0 * PI) * mode_variance(params, l) * p)
        .sum()
}

/// Pointwise Wick constant `C^{(L)}(x, x) = sum_{l <= L} (2l+1)/(4 pi) var_l`.
pub fn wick_constant(params: &ModelParams, l_max: usize) -> f64 {
    covariance_mode_sum(params, 1.0, l_max)
}

/// A test function on the sphere given by real-harmonic coefficients
/// `f_lm = int f Y_lm dOmega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub l_max: usize,
    pub coeffs: Vec<f64>,
}

/// A bump `exp(-1/(1 - (gamma/width)^2))` in the geodesic angle from `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZonalBump {
    pub center: SpherePoint,
    pub width: f64,
}

impl ZonalBump {
    pub fn new(center: SpherePoint, width: f64) -> Result<Self> {
        require_finite("width", width)?;
        if width <= 0.0 || width >= PI {
            return Err(Error::Domain(format!("bump width {width} outside (0, pi)")));
        }
        Ok(Self { center, width })
    }

    pub fn value(&self, x: &SpherePoint) -> f64 {
        let gamma = x.cos_angle(&self.center).acos();
        smooth_bump(gamma, 0.0, self.width)
    }

    /// True if the support lies in the open upper hemisphere `X0 > 0`.
    pub fn in_upper_hemisphere(&self) -> bool {
        self.center.theta + self.width < FRAC_PI_2
    }

    pub fn reflected(&self) -> Self {
        Self {
            center: self.center.reflected(),
            width: self.width,
        }
    }
}

/// Funk-Hecke coefficients `beta_l = 2 pi int b(cos gamma) P_l(cos gamma) sin gamma dgamma`
/// of a zonal bump of angular width `width`, `l <= l_max`.
pub fn zonal_coefficients(width: f64, l_max: usize) -> Vec<f64> {
    let n = (2 * l_max + 64).max(128);
    let (g, w) = gauss_legendre_on(n, 0.0, width);
    let mut beta = vec![0.0; l_max + 1];
    for (gi, wi) in g.iter().zip(&w) {
        let weight = 2.0 * PI * wi * smooth_bump(*gi, 0.0, width) * gi.sin();
        if weight == 0.0 {
            continue;
        }
        for (b, p) in beta.iter_mut().zip(legendre_polynomials(l_max, gi.cos())) {
            *b += weight * p;
        }
    }
    beta
}

impl TestFunction {
    pub fn new(l_max: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != harmonic_count(l_max) {
            return Err(Error::Precondition(format!(
                "expected {} coefficients, got {}",
                harmonic_count(l_max),
                coeffs.len()
            )));
        }
        Ok(Self { l_max, coeffs })
    }

    /// The single harmonic `Y_lm`.
    pub fn harmonic(l_max: usize, l: usize, m: i64) -> Result<Self> {
        if l > l_max || m.unsigned_abs() as usize > l {
            return Err(Error::Domain(format!(
                "no harmonic ({l}, {m}) below {l_max}"
            )));
        }
        let mut c = vec![0.0; harmonic_count(l_max)];
        c[idx(l, m)] = 1.0;
        Self::new(l_max, c)
    }

    /// Band-limited projection of a zonal bump, `f_lm = beta_l Y_lm(center)`.
    pub fn from_bump(bump: &ZonalBump, l_max: usize) -> Self {
        let beta = zonal_coefficients(bump.width, l_max);
        let y = real_harmonics(l_max, &bump.center);
        let mut coeffs = vec![0.0; harmonic_count(l_max)];
        for l in 0..=l_max {
            for m in -(l as i64)..=l as i64 {
                coeffs[idx(l, m)] = beta[l] * y[idx(l, m)];
            }
        }
        Self { l_max, coeffs }
    }

    /// Projection of `f` onto the harmonics `l <= l_max` by exact quadrature
    /// for band-limited `f`.
    pub fn project(l_max: usize, band: usize, f: impl Fn(&SpherePoint) -> f64) -> Self {
        let grid = SphereGrid::new(band + l_max);
        let mut coeffs = vec![0.0; harmonic_count(l_max)];
        for (p, w) in grid.points() {
            let v = f(&p) * w;
            if v == 0.0 {
                continue;
            }
            for (c, y) in coeffs.iter_mut().zip(real_harmonics(l_max, &p)) {
                *c += v * y;
            }
        }
        Self { l_max, coeffs }
    }

    /// `f o Theta`: multiplies `f_lm` by `(-1)^(l+m)`.
    pub fn reflected(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for l in 0..=self.l_max {
            for m in -(l as i64)..=l as i64 {
                if (l as i64 + m) % 2 != 0 {
                    coeffs[idx(l, m)] = -coeffs[idx(l, m)];
                }
            }
        }
        Self {
            l_max: self.l_max,
            coeffs,
        }
    }

    pub fn value(&self, x: &SpherePoint) -> f64 {
        real_harmonics(self.l_max, x)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| y * c)
            .sum()
    }
}

/// `C(f, g) = r^4 sum_{l <= min} var_l f_lm g_lm`.
pub fn covariance(params: &ModelParams, f: &TestFunction, g: &TestFunction) -> f64 {
    let l_max = f.l_max.min(g.l_max);
    let r2 = params.r * params.r;
    let mut acc = 0.0;
    for l in 0..=l_max {
        let mut s = 0.0;
        for m in -(l as i64)..=l as i64 {
            s += f.coeffs[idx(l, m)] * g.coeffs[idx(l, m)];
        }
        acc += mode_variance(params, l) * s;
    }
    r2 * r2 * acc
}

/// Gauss-Legendre in `cos theta` times a uniform rule in `phi`, exact for
/// products of harmonics of total degree up to `band`.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub cos_theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub n_phi: usize,
}

impl SphereGrid {
    pub fn new(band: usize) -> Self {
        let (x, w) = gauss_legendre(band / 2 + 1);
        Self {
            cos_theta: x,
            weights: w,
            n_phi: band + 1,
        }
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    /// Points with their weights for `dOmega`.
    pub fn points(&self) -> impl Iterator<Item = (SpherePoint, f64)> + '_ {
        let dphi = 2.0 * PI / self.n_phi as f64;
        self.cos_theta
            .iter()
            .zip(&self.weights)
            .flat_map(move |(&x, &w)| {
                (0..self.n_phi).map(move |j| {
                    (
                        SpherePoint {
                            theta: x.acos(),
                            phi: self.phi(j),
                        },
                        w * dphi,
                    )
                })
            })
    }

    pub fn len(&self) -> usize {
        self.cos_theta.len() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A sampled field `Phi = sum b_lm Y_lm` with real coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicField {
    pub l_max: usize,
    pub r: f64,
    pub coeffs: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl HarmonicField {
    pub fn coefficient(&self, l: usize, m: i64) -> f64 {
        self.coeffs[idx(l, m)]
    }

    /// Coefficient `a_lm` in the complex harmonics with Condon-Shortley phase;
    /// satisfies `a_{l,-m} = (-1)^m conj(a_lm)`.
    pub fn complex_coefficient(&self, l: usize, m: i64) -> C64 {
        if m == 0 {
            return C64::new(self.coefficient(l, 0), 0.0);
        }
        let ma = m.abs();
        let (c, s) = (self.coefficient(l, ma), self.coefficient(l, -ma));
        let sign = if ma % 2 == 0 { 1.0 } else { -1.0 };
        if m > 0 {
            sign * C64::new(c, -s) / std::f64::consts::SQRT_2
        } else {
            C64::new(c, s) / std::f64::consts::SQRT_2
        }
    }

    pub fn evaluate(&self, points: &[SpherePoint]) -> Vec<f64> {
        points
            .iter()
            .map(|p| {
                real_harmonics(self.l_max, p)
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(y, c)| y * c)
                    .sum()
            })
            .collect()
    }

    /// `Phi(f) = int f Phi r^2 dOmega`.
    pub fn smeared(&self, f: &TestFunction) -> f64 {
        let l = self.l_max.min(f.l_max);
        let n = harmonic_count(l);
        self.r
            * self.r
            * self.coeffs[..n]
                .iter()
                .zip(&f.coeffs[..n])
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// The field `x -> Phi(R^{-1} x)` for the rotation `R` by `beta` about the
    /// `X0` axis.
    pub fn rotated_about_time_axis(&self, beta: f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.l_max {
            for m in 1..=l as i64 {
                let (s, c) = (m as f64 * beta).sin_cos();
                let (bc, bs) = (self.coeffs[idx(l, m)], self.coeffs[idx(l, -m)]);
                out.coeffs[idx(l, m)] = bc * c - bs * s;
                out.coeffs[idx(l, -m)] = bc * s + bs * c;
            }
        }
        out
    }

    /// Values on a grid, for `l <= l_cut`, in the order of `SphereGrid::points`.
    pub fn on_grid(&self, grid: &SphereGrid, l_cut: usize) -> Vec<f64> {
        let l_cut = l_cut.min(self.l_max);
        let mut out = Vec::with_capacity(grid.len());
        let mut cos_m = vec![0.0; l_cut + 1];
        let mut sin_m = vec![0.0; l_cut + 1];
        for &x in &grid.cos_theta {
            let table = normalized_legendre_table(l_cut, x);
            let mut a = vec![0.0; l_cut + 1];
            let mut b = vec![0.0; l_cut + 1];
            for l in 0..=l_cut {
                a[0] += self.coeffs[idx(l, 0)] * table[l * (l + 1) / 2];
                for m in 1..=l {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    let p = sign * std::f64::consts::SQRT_2 * table[l * (l + 1) / 2 + m];
                    a[m] += self.coeffs[idx(l, m as i64)] * p;
                    b[m] += self.coeffs[idx(l, -(m as i64))] * p;
                }
            }
            for j in 0..grid.n_phi {
                let phi = grid.phi(j);
                for m in 0..=l_cut {
                    let (s, c) = (m as f64 * phi).sin_cos();
                    cos_m[m] = c;
                    sin_m[m] = s;
                }
                let v: f64 = (0..=l_cut).map(|m| a[m] * cos_m[m] + b[m] * sin_m[m]).sum();
                out.push(v);
            }
        }
        out
    }
}

/// Random generator for sample `stream` of the run `seed`.
pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws the field with independent modes `b_lm ~ N(0, var_l)`.
pub fn sample_field(params: &ModelParams, l_max: usize, seed: u64) -> HarmonicField {
    sample_field_stream(params, l_max, seed, 0)
}

pub fn sample_field_stream(
    params: &ModelParams,
    l_max: usize,
    seed: u64,
    stream: u64,
) -> HarmonicField {
    let mut rng = sample_rng(seed, stream);
    let mut coeffs = Vec::with_capacity(harmonic_count(l_max));
    for l in 0..=l_max {
        let sd = mode_variance(params, l).sqrt();
        for _ in 0..(2 * l + 1) {
            let z: f64 = StandardNormal.sample(&mut rng);
            coeffs.push(sd * z);
        }
    }
    HarmonicField {
        l_max,
        r: params.r,
        coeffs,
        seed,
        stream,
    }
}

/// Thread pool honouring `DSQFT_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| {
            Error::Precondition(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        if n == 0 {
            return Err(Error::Precondition(format!(
                "{THREADS_ENV} must be positive"
            )));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))
}

/// Applies `observe` to `n` independent fields, sample `i` drawn from stream
/// `i`. The result does not depend on the number of threads.
pub fn sample_ensemble<T, F>(
    params: &ModelParams,
    l_max: usize,
    n: usize,
    seed: u64,
    observe: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&HarmonicField) -> T + Sync,
{
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| observe(&sample_field_stream(params, l_max, seed, i as u64)))
            .collect()
    }))
}

/// `:x^n:` relative to variance `c`:
/// `sum_m n!/(m!(n-2m)!) x^(n-2m) (-c/2)^m`.
pub fn wick_power(x: f64, n: u32, c: f64) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0;
    for m in 0..=(n / 2) {
        if m > 0 {
            let (nm, mm) = (n as f64, m as f64);
            coeff *= (nm - 2.0 * mm + 2.0) * (nm - 2.0 * mm + 1.0) / mm * (-c / 2.0);
        }
        total += coeff * x.powi((n - 2 * m) as i32);
    }
    total
}

/// `P(phi) = sum_n a_n :phi^n:`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WickPolynomial {
    pub coeffs: Vec<f64>,
}

impl WickPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        for c in &coeffs {
            require_finite("polynomial coefficient", *c)?;
        }
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// `lambda :phi^4:`.
    pub fn quartic(lambda: f64) -> Result<Self> {
        Self::new(vec![0.0, 0.0, 0.0, 0.0, lambda])
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Constant, or of even degree with positive leading coefficient.
    pub fn is_bounded_below(&self) -> bool {
        match self.coeffs.last() {
            None => true,
            Some(&a) => self.degree() == 0 || (self.degree().is_multiple_of(2) && a > 0.0),
        }
    }

    pub fn eval(&self, x: f64, c: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(n, a)| a * wick_power(x, n as u32, c))
            .sum()
    }
}

/// `V = int :P(Phi^{(L)}(x)): r^2 dOmega` for the field truncated at
/// `l_int`, Wick ordered with the truncated diagonal `C^{(L)}(x, x)`.
pub fn interaction_v(
    params: &ModelParams,
    field: &HarmonicField,
    poly: &WickPolynomial,
    l_int: usize,
) -> Result<f64> {
    if l_int > field.l_max {
        return Err(Error::Precondition(format!(
            "interaction cutoff {l_int} exceeds field cutoff {}",
            field.l_max
        )));
    }
    if poly.coeffs.is_empty() {
        return Ok(0.0);
    }
    let grid = SphereGrid::new(poly.degree().max(1) * l_int);
    Ok(interaction_on_grid(params, field, poly, l_int, &grid))
}

fn interaction_on_grid(
    params: &ModelParams,
    field: &HarmonicField,
    poly: &WickPolynomial,
    l_int: usize,
    grid: &SphereGrid,
) -> f64 {
    let c = wick_constant(params, l_int);
    let values = field.on_grid(grid, l_int);
    let dphi = 2.0 * PI / grid.n_phi as f64;
    let mut total = 0.0;
    for (i, w) in grid.weights.iter().enumerate() {
        let row = &values[i * grid.n_phi..(i + 1) * grid.n_phi];
        total += w * dphi * row.iter().map(|&v| poly.eval(v, c)).sum::<f64>();
    }
    params.r * params.r * total
}

/// Interaction values for an ensemble; rejects polynomials unbounded below.
pub fn interaction_ensemble(
    params: &ModelParams,
    poly: &WickPolynomial,
    l_int: usize,
    n: usize,
    seed: u64,
    observe: impl Fn(&HarmonicField) -> Vec<f64> + Sync,
) -> Result<Vec<(f64, Vec<f64>)>> {
    if !poly.is_bounded_below() {
        return Err(Error::ContractViolation(
            "the interacting measure needs a polynomial bounded from below".into(),
        ));
    }
    let grid = SphereGrid::new(poly.degree().max(1) * l_int);
    sample_ensemble(params, l_int, n, seed, |f| {
        (
            interaction_on_grid(params, f, poly, l_int, &grid),
            observe(f),
        )
    })
}

/// Self-normalized importance estimate under `e^{-V} dmu / Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reweighted {
    pub value: f64,
    pub stderr: f64,
    pub z_hat: f64,
    pub z_stderr: f64,
    pub ess: f64,
    pub warning: Option<String>,
}

pub fn reweighted_expectation(v: &[f64], observable: &[f64]) -> Result<Reweighted> {
    if v.len() != observable.len() {
        return Err(Error::Precondition("sample arrays differ in length".into()));
    }
    if v.len() < 1000 {
        return Err(Error::Precondition(format!(
            "at least 1000 samples are needed, got {}",
            v.len()
        )));
    }
    let n = v.len() as f64;
    let shift = v.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = v.iter().map(|x| (shift - x).exp()).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let value = w.iter().zip(observable).map(|(a, o)| a * o).sum::<f64>() / sw;
    let var = w
        .iter()
        .zip(observable)
        .map(|(a, o)| a * a * (o - value) * (o - value))
        .sum::<f64>();
    let scale = (-shift).exp();
    let mean_w = sw / n;
    let var_w = (sw2 / n - mean_w * mean_w).max(0.0) * n / (n - 1.0);
    let ess = sw * sw / sw2;
    let warning = (ess < MIN_RELIABLE_ESS)
        .then(|| format!("effective sample size {ess:.2} is below {MIN_RELIABLE_ESS}"));
    Ok(Reweighted {
        value,
        stderr: var.sqrt() / sw,
        z_hat: mean_w * scale,
        z_stderr: (var_w / n).sqrt() * scale,
        ess,
        warning,
    })
}

/// Exact variance of `lambda int :Phi^4: r^2 dOmega` for the field truncated
/// at `l_max`: `24 lambda^2 int int C_L(x, y)^4`.
pub fn quartic_interaction_variance(params: &ModelParams, lambda: f64, l_max: usize) -> f64 {
    let (x, w) = gauss_legendre(2 * l_max + 2);
    let integral: f64 = x
        .iter()
        .zip(&w)
        .map(|(u, wi)| wi * covariance_mode_sum(params, *u, l_max).powi(4))
        .sum();
    let r4 = params.r.powi(4);
    24.0 * lambda * lambda * r4 * 4.0 * PI * 2.0 * PI * integral
}

/// Outcome of the reflection-positivity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpReport {
    pub lambda_min: f64,
    pub gram_norm: f64,
}

/// Map applied to the first argument of the Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Twist {
    /// The time reflection `X0 -> -X0`.
    Reflection,
    /// The rotation by `pi` about the `X2` axis, which also exchanges the
    /// hemispheres.
    HalfTurn,
}

/// `M_ij = C(T f_i, f_j)` for zonal bumps, truncated at `l_max`:
/// `r^4 sum_l var_l beta_l^i beta_l^j (2l+1)/(4 pi) P_l(T c_i . c_j)`.
pub fn twisted_gram(
    params: &ModelParams,
    bumps: &[ZonalBump],
    l_max: usize,
    twist: Twist,
) -> DMatrix<f64> {
    let n = bumps.len();
    let betas: Vec<Vec<f64>> = bumps
        .iter()
        .map(|b| zonal_coefficients(b.width, l_max))
        .collect();
    let r4 = params.r.powi(4);
    let var: Vec<f64> = (0..=l_max)
        .map(|l| (2 * l + 1) as f64 / (4.0 * PI) * mode_variance(params, l))
        .collect();
    let twisted = |p: &SpherePoint| {
        let v = p.unit_vector();
        match twist {
            Twist::Reflection => Vector3::new(-v[0], v[1], v[2]),
            Twist::HalfTurn => Vector3::new(-v[0], -v[1], v[2]),
        }
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let ti = twisted(&bumps[i].center);
        for j in 0..n {
            let u = ti.dot(&bumps[j].center.unit_vector()).clamp(-1.0, 1.0);
            let p = legendre_polynomials(l_max, u);
            m[(i, j)] = r4
                * (0..=l_max)
                    .map(|l| var[l] * betas[i][l] * betas[j][l] * p[l])
                    .sum::<f64>();
        }
    }
    m
}

/// Smallest eigenvalue and norm of the reflection-twisted Gram matrix of bumps
/// supported in the upper hemisphere.
pub fn reflection_positivity_gram(
    params: &ModelParams,
    bumps: &[ZonalBump],
    l_max: usize,
) -> Result<RpReport> {
    if let Some(b) = bumps.iter().find(|b| !b.in_upper_hemisphere()) {
        return Err(Error::Precondition(format!(
            "bump at polar angle {} with width {} reaches the lower hemisphere",
            b.center.theta, b.width
        )));
    }
    let m = twisted_gram(params, bumps, l_max, Twist::Reflection);
    Ok(gram_report(&m))
}

pub fn gram_report(m: &DMatrix<f64>) -> RpReport {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let gram_norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    RpReport {
        lambda_min: eig.eigenvalues.min(),
        gram_norm,
    }
}

/// `N_lk^2 P_l^k(0)^2` for `l + k` even, continued to real `l`:
/// `(2l+1)/(4 pi^2) Gamma((l-k+1)/2) Gamma((l+k+1)/2) / (Gamma((l-k)/2+1) Gamma((l+k)/2+1))`.
pub fn equatorial_harmonic_square(l: f64, k: f64) -> Result<f64> {
    let lg = |x: f64| -> Result<f64> { Ok(log_gamma(C64::new(x, 0.0))?.re) };
    let v = lg((l - k + 1.0) / 2.0)? + lg((l + k + 1.0) / 2.0)?
        - lg((l - k) / 2.0 + 1.0)?
        - lg((l + k) / 2.0 + 1.0)?;
    Ok((2.0 * l + 1.0) / (4.0 * PI * PI) * v.exp())
}

/// `S_k = sum_{l >= |k|} var_l N_lk^2 P_l^k(0)^2`: terms `l <= l_max` from the
/// recurrence table, the tail by Euler-Maclaurin over `l = l0, l0 + 2, ...`.
pub fn equatorial_weight(
    params: &ModelParams,
    k: usize,
    l_max: usize,
    table: &[Vec<f64>],
) -> Result<f64> {
    let mut s = 0.0;
    for (l, row) in table.iter().enumerate().take(l_max + 1).skip(k) {
        let t = row[k];
        s += mode_variance(params, l) * t * t;
    }
    let l0 = if (l_max + 1 + k).is_multiple_of(2) {
        l_max + 1
    } else {
        l_max + 2
    };
    let z2 = params.zeta() * params.zeta();
    let kf = k as f64;
    let g =
        |l: f64| -> Result<f64> { Ok(equatorial_harmonic_square(l, kf)? / (l * (l + 1.0) + z2)) };
    let a = l0 as f64;
    let (u, w) = gauss_legendre_on(48, 0.0, 1.0);
    let mut integral = 0.0;
    for (ui, wi) in u.iter().zip(&w) {
        if *ui <= 0.0 {
            continue;
        }
        integral += wi * g(a / ui)? * a / (ui * ui);
    }
    let d = 0.5;
    let g1 = (g(a + d)? - g(a - d)?) / (2.0 * d);
    s += 0.5 * integral + 0.5 * g(a)? - 2.0 * g1 / 12.0;
    Ok(s)
}

/// Table `t[l][k] = |N_lk P_l^k(0)|`, `k <= l <= l_max`.
pub fn equator_table(l_max: usize) -> Vec<Vec<f64>> {
    let flat = normalized_legendre_table(l_max, 0.0);
    (0..=l_max)
        .map(|l| (0..=l).map(|k| flat[l * (l + 1) / 2 + k].abs()).collect())
        .collect()
}

/// `C(delta (x) h1, delta (x) h2)`, the covariance of sharp-time data on the
/// equator paired against `r dpsi`:
/// `r^2 (2 pi)^2 sum_k conj(h1_k) h2_k S_|k|`, `|k| <= l_max`.
pub fn time_zero_covariance_from_sphere(
    params: &ModelParams,
    h1: &CircleFunction,
    h2: &CircleFunction,
    l_max: usize,
) -> Result<C64> {
    if h1.len() != h2.len() {
        return Err(Error::Precondition("grids of different size".into()));
    }
    let n = h1.len();
    let k_max = l_max.min(n / 2 - 1);
    let table = equator_table(l_max);
    let (c1, c2) = (h1.coefficients(), h2.coefficients());
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..=k_max {
        let s = equatorial_weight(params, k, l_max, &table)?;
        let mut pair = c1[k].conj() * c2[k];
        if k > 0 {
            pair += c1[n - k].conj() * c2[n - k];
        }
        acc += s * pair;
    }
    Ok(params.r * params.r * 4.0 * PI * PI * acc)
}

/// One scale `C_l = (-Delta + mu^2 g^{2l})^{-1} - (-Delta + mu^2 g^{2l+2})^{-1}`
/// of the multiscale decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleCovariance {
    pub gamma: f64,
    pub scale: u32,
}

impl MultiscaleCovariance {
    pub fn new(gamma: f64, scale: u32) -> Result<Self> {
        require_finite("gamma", gamma)?;
        if gamma <= 1.0 {
            return Err(Error::Domain(format!("scale ratio {gamma} must exceed 1")));
        }
        Ok(Self { gamma, scale })
    }

    /// Mode weight of `C_l` at harmonic degree `l`.
    pub fn weight(&self, params: &ModelParams, l: usize) -> f64 {
        let lf = l as f64;
        let z2 = params.zeta() * params.zeta();
        let a = self.gamma.powi(2 * self.scale as i32);
        1.0 / (lf * (lf + 1.0) + z2 * a)
            - 1.0 / (lf * (lf + 1.0) + z2 * a * self.gamma * self.gamma)
    }
}

/// Mode weight of `(-Delta + mu^2 k^2)^{-1}`, the part removed by the
/// regularization at scale `k`.
pub fn regulator_remainder(params: &ModelParams, k: f64, l: usize) -> f64 {
    let lf = l as f64;
    1.0 / (lf * (lf + 1.0) + params.zeta() * params.zeta() * k * k)
}

/// `||(C^{(k)} - C)(x, .)||_{L^2(r^2 dOmega)}`, summed to `l_max`.
pub fn regularization_error_l2(params: &ModelParams, k: f64, l_max: usize) -> f64 {
    let s: f64 = (0..=l_max)
        .map(|l| (2 * l + 1) as f64 / (4.0 * PI) * regulator_remainder(params, k, l).powi(2))
        .sum();
    s.sqrt() / params.r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_contiguous() {
        let mut seen = vec![false; harmonic_count(5)];
        for l in 0..=5 {
            for m in -(l as i64)..=l as i64 {
                seen[idx(l, m)] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        assert_eq!(harmonic_index(3, -2), 10);
    }

    #[test]
    fn wick_low_orders() {
        assert_eq!(wick_power(1.7, 1, 0.3), 1.7);
        assert!((wick_power(1.7, 2, 0.3) - (1.7 * 1.7 - 0.3)).abs() < 1e-15);
        let x: f64 = 0.9;
        let c = 0.4;
        let h4 = x.powi(4) - 6.0 * c * x * x + 3.0 * c * c;
        assert!((wick_power(x, 4, c) - h4).abs() < 1e-14);
    }

    #[test]
    fn bounded_below() {
        assert!(WickPolynomial::quartic(0.1).unwrap().is_bounded_below());
        assert!(!WickPolynomial::new(vec![0.0, 0.0, 0.0, 1.0])
            .unwrap()
            .is_bounded_below());
        assert!(!WickPolynomial::quartic(-0.1).unwrap().is_bounded_below());
        assert!(WickPolynomial::zero().is_bounded_below());
    }
}
