//! Principal and complementary series of `SO0(1,2)` acting on functions on the
//! circle `Gamma_0` of light rays, sampled on a uniform grid.
//!
//! A function `h` on the circle is the restriction to `p0 = 1` of the
//! homogeneous function `p0^s h(alpha)`, `s = -1/2 - i nu`, on the forward
//! light cone `p0 (1, sin alpha, -cos alpha)`. The group acts by pullback:
//! `(u(g) h)(alpha') = p0^s h(alpha)` where `(alpha, p0)` is the image of
//! `(alpha', 1)` under `g^{-1}`.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};
use crate::so12_group::{act_on_lightcone, k0, l1, l2, GroupElement, Mat3};
use crate::special_functions::log_gamma;

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Sign `+` or `-` of the representation of the two-fold cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

/// Label `(nu, parity)` of a representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesLabel {
    pub nu: C64,
    pub parity: Parity,
}

impl SeriesLabel {
    /// Real `nu` labels the principal series, `nu = i zeta` with
    /// `0 < zeta < 1/2` the complementary series.
    pub fn new(nu: C64, parity: Parity) -> Result<Self> {
        require_finite("nu.re", nu.re)?;
        require_finite("nu.im", nu.im)?;
        let ok = nu.im == 0.0 || (nu.re == 0.0 && nu.im > 0.0 && nu.im < 0.5);
        if !ok {
            return Err(Error::Domain(format!(
                "nu = {nu} is neither real nor in i(0, 1/2)"
            )));
        }
        Ok(Self { nu, parity })
    }

    pub fn principal(nu: f64) -> Result<Self> {
        Self::new(C64::new(nu, 0.0), Parity::Plus)
    }

    pub fn complementary(zeta: f64) -> Result<Self> {
        Self::new(C64::new(0.0, zeta), Parity::Plus)
    }

    pub fn is_principal(&self) -> bool {
        self.nu.im == 0.0
    }

    pub fn is_complementary(&self) -> bool {
        self.nu.re == 0.0 && self.nu.im > 0.0 && self.nu.im < 0.5
    }

    /// Homogeneity degree `s = -1/2 - i nu`.
    pub fn s(&self) -> C64 {
        C64::new(-0.5, 0.0) - I * self.nu
    }

    /// The label with `nu -> -nu`; not validated, since it is only used as
    /// the source side of the intertwiner.
    pub fn negated(&self) -> Self {
        Self {
            nu: -self.nu,
            parity: self.parity,
        }
    }

    /// Casimir eigenvalue `1/4 + nu^2`.
    pub fn casimir(&self) -> C64 {
        0.25 + self.nu * self.nu
    }
}

/// One of the three basis generators of `so(1,2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    K0,
    L1,
    L2,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::K0, Generator::L1, Generator::L2];

    pub fn matrix(&self) -> Mat3 {
        match self {
            Generator::K0 => k0(),
            Generator::L1 => l1(),
            Generator::L2 => l2(),
        }
    }

    /// `exp(t X)` in closed form.
    pub fn exp(&self, t: f64) -> GroupElement {
        match self {
            Generator::K0 => crate::so12_group::rotate0(t),
            Generator::L1 => crate::so12_group::boost1(t),
            Generator::L2 => crate::so12_group::boost2(t),
        }
        .expect("finite parameter")
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "K0" => Ok(Generator::K0),
            "L1" => Ok(Generator::L1),
            "L2" => Ok(Generator::L2),
            _ => Err(Error::ContractViolation(format!("unknown generator {s}"))),
        }
    }
}

/// Complex samples on the grid `alpha_j = 2 pi j / N`, `N` a power of two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleFunction {
    values: Vec<C64>,
}

fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Position of mode `k` in FFT ordering, or `None` if `|k| >= N/2`.
pub fn mode_index(k: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if k.abs() >= half {
        None
    } else if k >= 0 {
        Some(k as usize)
    } else {
        Some((n as i64 + k) as usize)
    }
}

impl CircleFunction {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        let n = values.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::ContractViolation(format!(
                "grid size {n} is not a power of two >= 4"
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Domain("non-finite sample".into()));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::new((0..n).map(|j| f(Self::grid_angle(j, n))).collect())
    }

    /// Trigonometric polynomial `sum_k c_k e^{i k alpha}` sampled on `n` points.
    pub fn from_modes(n: usize, modes: &[(i64, C64)]) -> Result<Self> {
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for &(k, c) in modes {
            let idx = mode_index(k, n).ok_or_else(|| {
                Error::Resolution(format!("mode {k} is not resolved on {n} points"))
            })?;
            coeffs[idx] += c;
        }
        Self::from_coefficients(coeffs)
    }

    /// Inverse of [`CircleFunction::coefficients`].
    pub fn from_coefficients(mut coeffs: Vec<C64>) -> Result<Self> {
        let n = coeffs.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::ContractViolation(format!(
                "grid size {n} is not a power of two >= 4"
            )));
        }
        fft_plan(n, true).process(&mut coeffs);
        Self::new(coeffs)
    }

    pub fn grid_angle(j: usize, n: usize) -> f64 {
        2.0 * PI * j as f64 / n as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Fourier coefficients `h_k = (1/N) sum_j h(alpha_j) e^{-i k alpha_j}` in
    /// FFT ordering.
    pub fn coefficients(&self) -> Vec<C64> {
        let n = self.len();
        let mut c = self.values.clone();
        fft_plan(n, false).process(&mut c);
        let scale = 1.0 / n as f64;
        c.iter_mut().for_each(|v| *v *= scale);
        c
    }

    /// Coefficient of `e^{i k alpha}`, zero if unresolved.
    pub fn mode(&self, k: i64) -> C64 {
        mode_index(k, self.len())
            .map(|i| self.coefficients()[i])
            .unwrap_or_default()
    }

    /// Band-limited interpolant evaluated at arbitrary angles. The Nyquist
    /// mode is split evenly between `+-N/2`.
    pub fn interpolate(&self, angles: &[f64]) -> Vec<C64> {
        let c = self.coefficients();
        let n = self.len();
        let half = n / 2;
        angles
            .par_iter()
            .map(|&a| {
                let z = C64::from_polar(1.0, a);
                let zc = z.conj();
                let mut pos = C64::new(0.0, 0.0);
                for k in (0..half).rev() {
                    pos = pos * z + c[k];
                }
                let mut neg = C64::new(0.0, 0.0);
                for k in (1..half).rev() {
                    neg = neg * zc + c[n - k];
                }
                pos + neg * zc + c[half] * (half as f64 * a).cos()
            })
            .collect()
    }

    /// Spectral derivative.
    pub fn derivative(&self) -> Self {
        let n = self.len();
        let mut c = self.coefficients();
        for (i, v) in c.iter_mut().enumerate() {
            let k = if i < n / 2 {
                i as f64
            } else if i == n / 2 {
                0.0
            } else {
                i as f64 - n as f64
            };
            *v *= I * k;
        }
        Self::from_coefficients(c).expect("size preserved")
    }

    pub fn sup_distance(&self, other: &CircleFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn map_coefficients(&self, f: impl Fn(i64, C64) -> C64) -> Self {
        let n = self.len();
        let c: Vec<C64> = self
            .coefficients()
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let k = if i <= n / 2 {
                    i as i64
                } else {
                    i as i64 - n as i64
                };
                f(k, v)
            })
            .collect();
        Self::from_coefficients(c).expect("size preserved")
    }

    /// `alpha -> h(alpha + beta)`, exact for band-limited `h`.
    pub fn shift(&self, beta: f64) -> Self {
        self.map_coefficients(|k, v| v * C64::from_polar(1.0, k as f64 * beta))
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }
}

/// Action `u(g) h` on the grid, using band-limited interpolation of `h`.
pub fn act(label: &SeriesLabel, g: &GroupElement, h: &CircleFunction) -> Result<CircleFunction> {
    g.require_proper_orthochronous()?;
    let n = h.len();
    let s = label.s();
    let mut angles = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let (alpha, p0) = act_on_lightcone(g, (CircleFunction::grid_angle(j, n), 1.0))?;
        angles.push(alpha);
        weights.push((s * p0.ln()).exp());
    }
    let vals = h.interpolate(&angles);
    CircleFunction::new(vals.iter().zip(&weights).map(|(v, w)| v * w).collect())
}

/// Squared principal-series norm `(1/2 pi) int |h|^2`.
pub fn principal_norm(h: &CircleFunction) -> f64 {
    h.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len() as f64
}

/// True if `i nu` is one of the poles `0, 1/2, 1, 3/2, ...`.
fn at_pole(nu: C64) -> bool {
    let inu = I * nu;
    let twice = 2.0 * inu.re;
    inu.im.abs() < 1e-12 && twice > -1e-12 && (twice - twice.round()).abs() < 1e-12
}

/// Multiplier of the intertwiner `A_nu` on `e^{i k alpha}`:
/// `Gamma(|k|+1/2+i nu) Gamma(1/2-i nu) / (Gamma(|k|+1/2-i nu) Gamma(1/2+i nu))`.
/// The coefficient with respect to normalized eigenfunctions is
/// `sqrt(2 pi)` times this.
pub fn intertwiner_multiplier(nu: C64, k: i64) -> Result<C64> {
    if at_pole(nu) {
        return Err(Error::Pole(format!(
            "i nu = {} is a pole of the intertwiner",
            I * nu
        )));
    }
    let kk = k.unsigned_abs() as f64 + 0.5;
    let inu = I * nu;
    let ln =
        log_gamma(kk + inu)? - log_gamma(kk - inu)? + log_gamma(0.5 - inu)? - log_gamma(0.5 + inu)?;
    Ok(ln.exp())
}

/// Coefficients `sqrt(2 pi) c_k` of the intertwining kernel.
pub fn rho_tilde(nu: C64, k: i64) -> Result<C64> {
    Ok((2.0 * PI).sqrt() * intertwiner_multiplier(nu, k)?)
}

/// Intertwiner `A_nu` as a Fourier multiplier.
pub fn intertwine(label: &SeriesLabel, h: &CircleFunction) -> Result<CircleFunction> {
    let n = h.len() as i64;
    let table: Vec<C64> = (0..=n / 2)
        .map(|k| intertwiner_multiplier(label.nu, k))
        .collect::<Result<_>>()?;
    Ok(h.map_coefficients(|k, v| v * table[k.unsigned_abs() as usize]))
}

/// Squared complementary-series norm `<h, A_nu h> = sum_k c_k |h_k|^2` with the
/// integrable kernel `(sin^2(alpha/2))^{-1/2 - i nu}`, normalized so that the
/// constant function has norm one. It is invariant under `act` with the
/// negated label, the realization of homogeneity `-1/2 + i nu` that `A_nu`
/// maps onto the label's own.
pub fn complementary_norm(label: &SeriesLabel, h: &CircleFunction) -> Result<f64> {
    if !label.is_complementary() {
        return Err(Error::Domain(format!(
            "nu = {} does not label a complementary series",
            label.nu
        )));
    }
    weighted_mode_norm(label.nu, h)
}

fn weighted_mode_norm(nu: C64, h: &CircleFunction) -> Result<f64> {
    let n = h.len() as i64;
    let c = h.coefficients();
    let mut total = 0.0;
    for (i, v) in c.iter().enumerate() {
        let k = if (i as i64) <= n / 2 {
            i as i64
        } else {
            i as i64 - n
        };
        total += intertwiner_multiplier(nu, k)?.re * v.norm_sqr();
    }
    Ok(total)
}

/// Squared norm preserved by `act(label, g, .)`: the `L^2` norm on the
/// principal series, `<h, A_{-nu} h>` (growing weights `c_k(-nu)`, evaluated
/// in Fourier space) on the complementary series.
pub fn invariant_norm(label: &SeriesLabel, h: &CircleFunction) -> Result<f64> {
    if label.is_complementary() {
        weighted_mode_norm(-label.nu, h)
    } else {
        Ok(principal_norm(h))
    }
}

/// Anti-unitary representer of the time reflection: `conj((A_nu h)(alpha - pi))`
/// on the principal series, `conj(h(alpha - pi))` on the complementary series.
pub fn time_reflect(label: &SeriesLabel, h: &CircleFunction) -> Result<CircleFunction> {
    let shifted = if label.is_complementary() {
        h.clone()
    } else {
        intertwine(label, h)?
    };
    Ok(shifted.shift(-PI).conj())
}

/// Representer of the space reflection `P`: `h(alpha - pi)`.
pub fn space_reflect(h: &CircleFunction) -> CircleFunction {
    h.shift(-PI)
}

/// Infinitesimal generator `d/dt u(exp(t X)) h` at `t = 0`, computed exactly
/// for band-limited `h`:
/// `K0 -> -h'`, `L1 -> -sin h' + s cos h`, `L2 -> -cos h' - s sin h`.
pub fn apply_generator(
    label: &SeriesLabel,
    which: Generator,
    h: &CircleFunction,
) -> CircleFunction {
    let s = label.s();
    let dh = h.derivative();
    let vals = h
        .values()
        .iter()
        .zip(dh.values())
        .enumerate()
        .map(|(j, (v, d))| {
            let (sn, cs) = CircleFunction::grid_angle(j, h.len()).sin_cos();
            match which {
                Generator::K0 => -d,
                Generator::L1 => -sn * d + s * cs * v,
                Generator::L2 => -cs * d - s * sn * v,
            }
        })
        .collect();
    CircleFunction::new(vals).expect("finite")
}

/// Sup-norm difference between the central difference
/// `(u(exp(eps X)) h - u(exp(-eps X)) h) / 2 eps` and [`apply_generator`].
pub fn generator_residual(
    label: &SeriesLabel,
    which: Generator,
    h: &CircleFunction,
    step: f64,
) -> Result<f64> {
    let plus = act(label, &which.exp(step), h)?;
    let minus = act(label, &which.exp(-step), h)?;
    let exact = apply_generator(label, which, h);
    Ok(plus
        .values()
        .iter()
        .zip(minus.values())
        .zip(exact.values())
        .map(|((p, m), e)| ((p - m) / (2.0 * step) - e).norm())
        .fold(0.0, f64::max))
}

/// Sup-norm of `C h - (1/4 + nu^2) h` with `C = K0^2 - L1^2 - L2^2` built from
/// the anti-hermitian generators, that is `-K0^2 + L1^2 + L2^2` for the
/// hermitian ones.
pub fn casimir_residual(label: &SeriesLabel, h: &CircleFunction) -> f64 {
    let sq = |x: Generator| apply_generator(label, x, &apply_generator(label, x, h));
    let (k, a, b) = (sq(Generator::K0), sq(Generator::L1), sq(Generator::L2));
    let c = label.casimir();
    (0..h.len())
        .map(|j| (k.values()[j] - a.values()[j] - b.values()[j] - c * h.values()[j]).norm())
        .fold(0.0, f64::max)
}

/// Matrices of the three generators on the modes `-kmax..=kmax`, truncated.
pub fn mode_generators(label: &SeriesLabel, kmax: usize) -> [DMatrix<C64>; 3] {
    let n = 2 * kmax + 1;
    let s = label.s();
    let mut k0m = DMatrix::zeros(n, n);
    let mut l1m = DMatrix::zeros(n, n);
    let mut l2m = DMatrix::zeros(n, n);
    let km = kmax as i64;
    for row in 0..n {
        let k = row as i64 - km;
        let kf = k as f64;
        k0m[(row, row)] = -I * kf;
        if row > 0 {
            l1m[(row, row - 1)] = (s - (kf - 1.0)) / 2.0;
            l2m[(row, row - 1)] = I * (s - (kf - 1.0)) / 2.0;
        }
        if row + 1 < n {
            l1m[(row, row + 1)] = (s + (kf + 1.0)) / 2.0;
            l2m[(row, row + 1)] = -I * (s + (kf + 1.0)) / 2.0;
        }
    }
    [k0m, l1m, l2m]
}

/// Largest deviation of `[K0,L1] = -L2`, `[K0,L2] = L1`, `[L1,L2] = K0` in the
/// truncated mode representation, over rows with `|k| <= kmax - 2`.
pub fn bracket_residual(label: &SeriesLabel, kmax: usize) -> f64 {
    let [k, a, b] = mode_generators(label, kmax);
    let comm = |x: &DMatrix<C64>, y: &DMatrix<C64>| x * y - y * x;
    let checks = [comm(&k, &a) + &b, comm(&k, &b) - &a, comm(&a, &b) - &k];
    let n = 2 * kmax + 1;
    let mut worst = 0.0f64;
    for m in &checks {
        for row in 2..n.saturating_sub(2) {
            for col in 0..n {
                worst = worst.max(m[(row, col)].norm());
            }
        }
    }
    worst
}

/// Deviation of the de Sitter plane wave `(x(t,q)/r . p/m)^{-1/2 - i m r}`
/// from the flat plane wave `e^{i (t sqrt(p1^2 + m^2) - q p1)}`, with
/// `x(t,q) = Lambda1(-t/r) D(q/r) (0,0,r)` and `p = (sqrt(p1^2+m^2), -p1, -m)`.
pub fn flat_contraction_error(mu: f64, r: f64, t: f64, q: f64, p1: f64) -> Result<f64> {
    for (name, v) in [("mu", mu), ("r", r), ("t", t), ("q", q), ("p1", p1)] {
        require_finite(name, v)?;
    }
    if mu <= 0.0 || r <= 0.0 {
        return Err(Error::Domain("mass and radius must be positive".into()));
    }
    let m = mu;
    let omega = (p1 * p1 + m * m).sqrt();
    let (tau, a) = (t / r, q / r);
    // D(a) o / r and then Lambda1(-tau).
    let d0 = a * a / 2.0;
    let d1 = a;
    let d2 = 1.0 - a * a / 2.0;
    let x0 = tau.cosh() * d0 - tau.sinh() * d2;
    let x1 = d1;
    let x2 = -tau.sinh() * d0 + tau.cosh() * d2;
    let dot = (x0 * omega + x1 * p1 + x2 * m) / m;
    if dot <= 0.0 {
        return Err(Error::OutsideChart(format!(
            "x . p = {dot:.3e} is not positive"
        )));
    }
    let expo = C64::new(-0.5, -m * r);
    let lhs = (expo * dot.ln()).exp();
    let rhs = C64::from_polar(1.0, t * omega - q * p1);
    Ok((lhs - rhs).norm())
}

/// Spectrum of the light-cone Casimir `-d/dp0 p0^2 d/dp0` on `L^2(dp0)`,
/// discretized on `n` log-spaced interior nodes of `[e^{u_min}, e^{u_max}]`
/// with Dirichlet ends. The Casimir does not act on `alpha`, so the spectrum
/// on a `(p0, alpha)` grid is this one repeated. Returned in increasing order.
pub fn lightcone_casimir_spectrum(n: usize, u_min: f64, u_max: f64) -> Result<Vec<f64>> {
    if n < 2 || u_max <= u_min {
        return Err(Error::Resolution("need n >= 2 and u_max > u_min".into()));
    }
    let h = (u_max - u_min) / (n + 1) as f64;
    let p: Vec<f64> = (0..n + 2).map(|j| (u_min + j as f64 * h).exp()).collect();
    let mut stiff = DMatrix::<f64>::zeros(n, n);
    for j in 0..=n {
        let mid = 0.5 * (p[j] + p[j + 1]);
        let w = mid * mid / (p[j + 1] - p[j]);
        // Edge between nodes j and j+1; node i of the matrix is grid node i+1.
        if j >= 1 {
            stiff[(j - 1, j - 1)] += w;
        }
        if j < n {
            stiff[(j, j)] += w;
        }
        if j >= 1 && j < n {
            stiff[(j - 1, j)] -= w;
            stiff[(j, j - 1)] -= w;
        }
    }
    let inv_sqrt_mass =
        DVector::from_iterator(n, (1..=n).map(|i| (0.5 * (p[i + 1] - p[i - 1])).powf(-0.5)));
    let a = DMatrix::from_fn(n, n, |i, j| {
        stiff[(i, j)] * inv_sqrt_mass[i] * inv_sqrt_mass[j]
    });
    let mut ev: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_validation() {
        assert!(SeriesLabel::complementary(0.6).is_err());
        assert!(SeriesLabel::new(C64::new(0.3, 0.2), Parity::Plus).is_err());
        assert!(SeriesLabel::principal(0.7).unwrap().is_principal());
    }

    #[test]
    fn poles() {
        assert!(matches!(
            intertwiner_multiplier(C64::new(0.0, 0.0), 1),
            Err(Error::Pole(_))
        ));
        assert!(matches!(
            intertwiner_multiplier(C64::new(0.0, -0.5), 1),
            Err(Error::Pole(_))
        ));
        assert!(intertwiner_multiplier(C64::new(0.0, 0.3), 1).is_ok());
    }

    #[test]
    fn grid_size_checked() {
        assert!(CircleFunction::new(vec![C64::new(1.0, 0.0); 12]).is_err());
    }

    #[test]
    fn generator_parse() {
        assert_eq!("l2".parse::<Generator>().unwrap(), Generator::L2);
        assert!("x".parse::<Generator>().is_err());
    }
}
