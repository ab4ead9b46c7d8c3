//! Complex Gamma function, conical Legendre functions through their Fourier
//! series on the circle, Ferrers functions, and spherical harmonics.
//!
//! The Fourier coefficients `p(k)` of `P_s(-cos psi)` decay like `1/k`, so the
//! series is summed after subtracting the asymptotic terms `1/k`, `1/k^3` and
//! `1/k^5`, whose sums are known in closed form.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};

type C64 = Complex64;

const LANCZOS_G_HALF: f64 = 5.242_187_5;
const LANCZOS_COEFFS: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_048_8e-4,
    2.174_396_181_152_126_5e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_140_8e-5,
    3.689_918_265_953_162_5e-6,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Gamma(z)` for complex `z`.
///
/// For `Re z >= 1/2` the result is the branch continuous from the positive
/// real axis; below that the reflection formula is used and the imaginary
/// part is fixed only modulo `2 pi`, which is irrelevant for ratios.
pub fn log_gamma(z: C64) -> Result<C64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("log_gamma of non-finite {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole(format!("Gamma has a pole at {}", z.re)));
    }
    if z.re < 0.5 {
        let one_minus = log_gamma(C64::new(1.0, 0.0) - z)?;
        return Ok(C64::new(PI.ln(), 0.0) - ln_sin_pi(z) - one_minus);
    }
    Ok(lanczos(z))
}

fn lanczos(z: C64) -> C64 {
    let tmp = z + LANCZOS_G_HALF;
    let head = (z + 0.5) * tmp.ln() - tmp;
    let mut ser = C64::new(0.999_999_999_999_997_1, 0.0);
    for (j, c) in LANCZOS_COEFFS.iter().enumerate() {
        ser += *c / (z + (j + 1) as f64);
    }
    head + LN_SQRT_2PI + (ser / z).ln()
}

/// `ln sin(pi z)` without overflow for large `|Im z|`.
fn ln_sin_pi(z: C64) -> C64 {
    if z.im.abs() < 5.0 {
        return (z * PI).sin().ln();
    }
    let i = C64::i();
    if z.im > 0.0 {
        // sin(pi z) = e^{-i pi z} (1 - e^{2 i pi z}) / (-2i)
        -i * PI * z + (1.0 - (2.0 * i * PI * z).exp()).ln() - (-2.0 * i).ln()
    } else {
        // sin(pi z) = e^{i pi z} (1 - e^{-2 i pi z}) / (2i)
        i * PI * z + (1.0 - (-2.0 * i * PI * z).exp()).ln() - (2.0 * i).ln()
    }
}

/// `Gamma(z)`.
pub fn gamma(z: C64) -> Result<C64> {
    Ok(log_gamma(z)?.exp())
}

const BERNOULLI: [f64; 21] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
];

fn bernoulli_poly(n: usize, x: C64) -> C64 {
    let mut binom = 1.0;
    let mut acc = C64::new(0.0, 0.0);
    for (j, b) in BERNOULLI.iter().enumerate().take(n + 1) {
        acc += binom * b * x.powu((n - j) as u32);
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// `prod Gamma(z + a_i) / prod Gamma(z + b_i)`.
///
/// The argument is shifted to `Re z >= 20 + 2 max |a_i|, |b_i|` by the
/// functional equation, where the difference of the Stirling series
/// `ln Gamma(z + a) ~ (z + a - 1/2) ln z - z + ln sqrt(2 pi)
/// + sum_n (-1)^n B_n(a) / (n (n - 1) z^(n-1))` is summed directly. Unlike a
/// difference of `log_gamma` values, the result keeps full relative precision
/// for large `|z|`.
pub fn gamma_ratio(z: C64, a: &[C64], b: &[C64]) -> Result<C64> {
    let (prefix, log) = gamma_ratio_parts(z, a, b)?;
    Ok(prefix * log.exp())
}

/// `gamma_ratio(z, a, b) - 1`, accurate when the ratio is close to one.
pub fn gamma_ratio_minus_one(z: C64, a: &[C64], b: &[C64]) -> Result<C64> {
    let (prefix, log) = gamma_ratio_parts(z, a, b)?;
    Ok(prefix * expm1(log) + (prefix - 1.0))
}

fn expm1(z: C64) -> C64 {
    let half = (z.im / 2.0).sin();
    C64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half * half,
        z.re.exp() * z.im.sin(),
    )
}

fn gamma_ratio_parts(z: C64, a: &[C64], b: &[C64]) -> Result<(C64, C64)> {
    if a.len() != b.len() {
        return Err(Error::Domain(
            "gamma_ratio needs as many numerator as denominator shifts".into(),
        ));
    }
    require_finite("z.re", z.re)?;
    require_finite("z.im", z.im)?;
    let size = a.iter().chain(b).map(|x| x.norm()).fold(0.0, f64::max);
    let target = 20.0 + 2.0 * size;
    let steps = (target - z.re).ceil().max(0.0) as usize;
    let mut prefix = C64::new(1.0, 0.0);
    for j in 0..steps {
        let zj = z + j as f64;
        for (ai, bi) in a.iter().zip(b) {
            let den = zj + ai;
            if den.norm() == 0.0 {
                return Err(Error::Pole(format!("Gamma has a pole at {}", zj + ai)));
            }
            prefix *= (zj + bi) / den;
        }
    }
    let w = z + steps as f64;
    let sum_a: C64 = a.iter().sum();
    let sum_b: C64 = b.iter().sum();
    let mut log = (sum_a - sum_b) * w.ln();
    let inv = 1.0 / w;
    let mut power = C64::new(1.0, 0.0);
    for n in 2..BERNOULLI.len() {
        power *= inv;
        let diff: C64 = a.iter().map(|x| bernoulli_poly(n, *x)).sum::<C64>()
            - b.iter().map(|x| bernoulli_poly(n, *x)).sum::<C64>();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        log += sign * diff * power / (n * (n - 1)) as f64;
    }
    Ok((prefix, log))
}

/// Degree `s = -1/2 - i nu` of a conical Legendre function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexDegree {
    pub s: C64,
    pub nu: C64,
}

impl ComplexDegree {
    pub fn from_nu(nu: C64) -> Self {
        Self {
            s: C64::new(-0.5, 0.0) - C64::i() * nu,
            nu,
        }
    }

    pub fn from_s(s: C64) -> Self {
        Self {
            s,
            nu: (s + 0.5) * C64::i(),
        }
    }

    /// Principal-series degree with real `nu`.
    pub fn principal(nu: f64) -> Self {
        Self::from_nu(C64::new(nu, 0.0))
    }

    /// Complementary-series degree `nu = i zeta`, `0 < zeta < 1/2`.
    pub fn complementary(zeta: f64) -> Self {
        Self::from_nu(C64::new(0.0, zeta))
    }

    pub fn is_principal(&self) -> bool {
        self.nu.im.abs() <= 1e-14 * self.nu.norm().max(1.0)
    }

    pub fn is_complementary(&self) -> bool {
        self.nu.re.abs() <= 1e-14 && self.nu.im > 0.0 && self.nu.im < 0.5
    }

    /// The degree `s - 1`.
    pub fn lowered(&self) -> Self {
        Self::from_s(self.s - 1.0)
    }

    fn require_non_integer(&self) -> Result<()> {
        if self.s.im == 0.0 && self.s.re == self.s.re.round() {
            Err(Error::UnsupportedDegree(format!(
                "integer degree {} is not supported",
                self.s.re
            )))
        } else if !self.s.re.is_finite() || !self.s.im.is_finite() {
            Err(Error::Domain("non-finite degree".into()))
        } else {
            Ok(())
        }
    }
}

/// `-sin(pi s) / pi`, the leading asymptotic coefficient of `p(k) k`.
fn leading_constant(s: C64) -> C64 {
    -(s * PI).sin() / PI
}

/// Fourier coefficient `p(k)` of `P_s(-cos psi) = sum_k p(k) e^{i k psi}`.
pub fn legendre_coeff(degree: &ComplexDegree, k: i64) -> Result<C64> {
    degree.require_non_integer()?;
    let s = degree.s;
    let kc = C64::new(k as f64, 0.0);
    let lg = log_gamma((kc - s) / 2.0)? - log_gamma((kc + s) / 2.0)?
        + log_gamma((kc + s + 1.0) / 2.0)?
        - log_gamma((kc - s + 1.0) / 2.0)?;
    Ok(leading_constant(s) / (kc + s) * lg.exp())
}

/// `p(k)` through the product of Gamma values at `s +- k + 1`, an independent
/// route to the same number (valid for `k >= 0`).
pub fn legendre_coeff_product_form(degree: &ComplexDegree, k: u32) -> Result<C64> {
    degree.require_non_integer()?;
    let s = degree.s;
    let kf = k as f64;
    let lg = log_gamma(s + kf + 1.0)?
        - log_gamma(s - kf + 1.0)?
        - 2.0 * log_gamma((kf - s + 1.0) / 2.0)?
        - 2.0 * log_gamma((kf + s) / 2.0 + 1.0)?
        - kf * 4f64.ln();
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * PI * lg.exp())
}

/// Fourier coefficient `p^1(k) = (s + k)(s - k) p_{s-1}(k)` of `P_s'(-cos psi)`.
pub fn legendre_prime_coeff(degree: &ComplexDegree, k: i64) -> Result<C64> {
    let s = degree.s;
    let kf = k as f64;
    Ok((s + kf) * (s - kf) * legendre_coeff(&degree.lowered(), k)?)
}

/// `P_s(0)` in closed form.
pub fn legendre_p_at_zero(degree: &ComplexDegree) -> Result<C64> {
    let s = degree.s;
    let lg = log_gamma(0.5 - s / 2.0)? + log_gamma(s / 2.0 + 1.0)?;
    Ok(PI.sqrt() * (-lg).exp())
}

/// Coefficients `a_1 .. a_7` of the expansion `p(k) = c sum_j a_j k^{-j}`,
/// `c = -sin(pi s)/pi`, from the Bernoulli-polynomial expansion of Gamma
/// ratios. Even-index entries vanish.
pub fn legendre_coeff_asymptotics(s: C64) -> [C64; 8] {
    const N: usize = 8;
    let mut d = [C64::new(0.0, 0.0); N];
    for (n, dn) in d.iter_mut().enumerate().skip(1) {
        let m = n + 1;
        let b = bernoulli_poly(m, -s / 2.0) - bernoulli_poly(m, (1.0 - s) / 2.0)
            + bernoulli_poly(m, (s + 1.0) / 2.0)
            - bernoulli_poly(m, s / 2.0);
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        *dn = sign * 2f64.powi(n as i32) / (n * (n + 1)) as f64 * b;
    }
    let mut e = [C64::new(0.0, 0.0); N];
    e[0] = C64::new(1.0, 0.0);
    for m in 1..N {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=m {
            acc += j as f64 * d[j] * e[m - j];
        }
        e[m] = acc / m as f64;
    }
    let mut a = [C64::new(0.0, 0.0); N];
    for (j, aj) in a.iter_mut().enumerate().skip(1) {
        let mut acc = C64::new(0.0, 0.0);
        let mut pow = C64::new(1.0, 0.0);
        for i in 0..j {
            acc += pow * e[j - 1 - i];
            pow *= -s;
        }
        *aj = acc;
    }
    a
}

const ZETA3: f64 = 1.202_056_903_159_594_2;
const ZETA5: f64 = 1.036_927_755_143_37;

fn zeta_even(n: usize) -> f64 {
    match n {
        1 => PI * PI / 6.0,
        2 => PI.powi(4) / 90.0,
        _ => {
            let p = (2 * n) as i32;
            let m = 1000;
            let mut s: f64 = (1..=m).rev().map(|k| (k as f64).powi(-p)).sum();
            s += (m as f64).powi(1 - p) / (p - 1) as f64 - 0.5 * (m as f64).powi(-p);
            s
        }
    }
}

/// Values and first two derivatives of `S_j(psi) = sum_{k>=1} cos(k psi)/k^j`
/// for `j = 1, 3, 5`; rows indexed by `j`, columns by derivative order.
pub fn cosine_power_sums(psi: f64) -> Result<[[f64; 3]; 3]> {
    require_finite("psi", psi)?;
    let mut phi = psi.rem_euclid(TAU);
    let mut odd_sign = 1.0;
    if phi > PI {
        phi = TAU - phi;
        odd_sign = -1.0;
    }
    if phi == 0.0 {
        return Err(Error::Singular(
            "cosine power sums diverge at psi = 0".into(),
        ));
    }
    let half = 0.5 * phi;
    let s1 = -(2.0 * half.sin()).ln();
    let s1p = -0.5 / half.tan();
    let s1pp = 0.25 / (half.sin() * half.sin());

    let lnp = phi.ln();
    let x2 = (phi / TAU) * (phi / TAU);
    let (mut t3, mut t3p, mut t5, mut t5p) = (0.0, 0.0, 0.0, 0.0);
    let mut pw = 1.0;
    for n in 1..200 {
        pw *= x2;
        let zn = zeta_even(n) * pw / n as f64;
        let nf = n as f64;
        let (a, b, c, d) = (
            2.0 * nf + 1.0,
            2.0 * nf + 2.0,
            2.0 * nf + 3.0,
            2.0 * nf + 4.0,
        );
        let d3 = zn * phi * phi / (a * b);
        let d3p = zn * phi / a;
        let d5 = zn * phi.powi(4) / (a * b * c * d);
        let d5p = zn * phi.powi(3) / (a * b * c);
        t3 += d3;
        t3p += d3p;
        t5 += d5;
        t5p += d5p;
        if zn < 1e-20 {
            break;
        }
    }
    let p2 = phi * phi;
    let p3 = p2 * phi;
    let p4 = p2 * p2;
    let s3 = ZETA3 - 0.75 * p2 + 0.5 * p2 * lnp - t3;
    let s3p = -phi + phi * lnp - t3p;
    let s5 = ZETA5 - 0.5 * ZETA3 * p2 + 25.0 / 288.0 * p4 - p4 / 24.0 * lnp + t5;
    let s5p = -ZETA3 * phi + 11.0 / 36.0 * p3 - p3 / 6.0 * lnp + t5p;
    Ok([
        [s1, odd_sign * s1p, s1pp],
        [s3, odd_sign * s3p, -s1],
        [s5, odd_sign * s5p, -s3],
    ])
}

/// Truncated Fourier table of `P_s(-cos psi)` with analytic tail summation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LegendreSeries {
    pub degree: ComplexDegree,
    pub k_max: usize,
    /// `p(k)` for `k = 0..=k_max`; `p(-k) = p(k)`.
    pub p: Vec<C64>,
    c: C64,
    a3: C64,
    a5: C64,
}

/// Default series cutoff.
pub const DEFAULT_CUTOFF: usize = 256;

impl LegendreSeries {
    pub fn new(degree: ComplexDegree, k_max: usize) -> Result<Self> {
        degree.require_non_integer()?;
        if k_max < 8 {
            return Err(Error::Resolution(format!(
                "series cutoff {k_max} is below the minimum of 8"
            )));
        }
        let p = (0..=k_max)
            .map(|k| legendre_coeff(&degree, k as i64))
            .collect::<Result<Vec<_>>>()?;
        let a = legendre_coeff_asymptotics(degree.s);
        Ok(Self {
            degree,
            k_max,
            p,
            c: leading_constant(degree.s),
            a3: a[3],
            a5: a[5],
        })
    }

    /// Bound on the neglected tail after subtraction of the asymptotic terms.
    pub fn tail_estimate(&self) -> f64 {
        let k = self.k_max as f64;
        let a = legendre_coeff_asymptotics(self.degree.s);
        2.0 * (self.c * a[7]).norm() / (6.0 * k.powi(6))
    }

    /// Plain truncated sum `p(0) + 2 sum_{k<=K} p(k) cos(k psi)`, without tail
    /// summation.
    pub fn eval_truncated(&self, psi: f64) -> C64 {
        let mut acc = self.p[0];
        for (k, pk) in self.p.iter().enumerate().skip(1) {
            acc += 2.0 * pk * (k as f64 * psi).cos();
        }
        acc
    }

    /// `P_s(-cos psi)` and its first two `psi`-derivatives.
    pub fn eval_with_derivatives(&self, psi: f64) -> Result<[C64; 3]> {
        let sums = cosine_power_sums(psi)?;
        let mut out = [self.p[0], C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        for (k, pk) in self.p.iter().enumerate().skip(1) {
            let kf = k as f64;
            let k2 = kf * kf;
            let rem = pk - self.c * (1.0 / kf + self.a3 / (k2 * kf) + self.a5 / (k2 * k2 * kf));
            let (sn, cs) = (kf * psi).sin_cos();
            out[0] += 2.0 * rem * cs;
            out[1] -= 2.0 * kf * rem * sn;
            out[2] -= 2.0 * k2 * rem * cs;
        }
        for (d, o) in out.iter_mut().enumerate() {
            *o += 2.0 * self.c * (sums[0][d] + self.a3 * sums[1][d] + self.a5 * sums[2][d]);
        }
        Ok(out)
    }

    /// `P_s(-cos psi)`.
    pub fn eval(&self, psi: f64) -> Result<C64> {
        Ok(self.eval_with_derivatives(psi)?[0])
    }

    /// `P_s(x)` for `x` in `(-1, 1]`.
    pub fn eval_x(&self, x: f64) -> Result<C64> {
        Ok(self.eval_x_with_derivatives(x)?[0])
    }

    /// `P_s(x)`, `P_s'(x)`, `P_s''(x)` for `x` in `(-1, 1)`; at `x = 1` only the
    /// value is meaningful.
    pub fn eval_x_with_derivatives(&self, x: f64) -> Result<[C64; 3]> {
        require_finite("x", x)?;
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
        }
        if x == -1.0 {
            return Err(Error::Singular(
                "P_s has a logarithmic singularity at x = -1".into(),
            ));
        }
        let psi = (-x).acos();
        let [f, fp, fpp] = self.eval_with_derivatives(psi)?;
        let (sn, cs) = psi.sin_cos();
        if sn == 0.0 {
            return Ok([f, C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0)]);
        }
        let d1 = fp / sn;
        let d2 = (fpp * sn - fp * cs) / (sn * sn * sn);
        Ok([f, d1, d2])
    }
}

/// `P_s(x)` from the Fourier series with cutoff `k_max`.
pub fn legendre_p(degree: &ComplexDegree, x: f64, k_max: usize) -> Result<C64> {
    LegendreSeries::new(*degree, k_max)?.eval_x(x)
}

/// `P_s'(x)` as the series `sum_k p^1(k) e^{i k psi}`, evaluated as
/// `(s^2 + d^2/dpsi^2) P_{s-1}(-cos psi)`.
pub fn legendre_p_prime_series(degree: &ComplexDegree, x: f64, k_max: usize) -> Result<C64> {
    require_finite("x", x)?;
    if x <= -1.0 || x >= 1.0 {
        return Err(Error::Domain(format!("x = {x} outside (-1, 1)")));
    }
    let lower = LegendreSeries::new(degree.lowered(), k_max)?;
    let psi = (-x).acos();
    let [f, _, fpp] = lower.eval_with_derivatives(psi)?;
    Ok(degree.s * degree.s * f + fpp)
}

/// Gauss hypergeometric series `2F1(a, b; c; z)` for `|z| < 1`.
fn hyp2f1_series(a: C64, b: C64, c: C64, z: f64) -> Result<C64> {
    if z.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "hypergeometric series needs |z| < 1, got {z}"
        )));
    }
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..200_000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && n > 4 {
            return Ok(sum);
        }
    }
    Err(Error::Resolution(
        "hypergeometric series did not converge".into(),
    ))
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Complex logarithm of the Ferrers function `P_s^k(x)` on `(-1, 1)`.
pub fn ferrers_p_ln(degree: &ComplexDegree, k: u32, x: f64) -> Result<C64> {
    require_finite("x", x)?;
    if x <= -1.0 || x >= 1.0 {
        return Err(Error::Domain(format!("x = {x} outside (-1, 1)")));
    }
    let s = degree.s;
    let kf = k as f64;
    let pref =
        log_gamma(s + kf + 1.0)? - log_gamma(s - kf + 1.0)? - kf * 2f64.ln() - ln_factorial(k)
            + 0.5 * kf * (1.0 - x * x).ln();
    let f = hyp2f1_series(
        kf - s,
        kf + s + 1.0,
        C64::new(kf + 1.0, 0.0),
        0.5 * (1.0 - x),
    )?;
    let sign = if k % 2 == 1 {
        C64::new(0.0, PI)
    } else {
        C64::new(0.0, 0.0)
    };
    Ok(pref + f.ln() + sign)
}

/// Ferrers function `P_s^k(x)` on `(-1, 1)`.
pub fn ferrers_p(degree: &ComplexDegree, k: u32, x: f64) -> Result<C64> {
    Ok(ferrers_p_ln(degree, k, x)?.exp())
}

/// Complex logarithm of `P_s^k(0)` in closed form.
pub fn ferrers_p_at_zero_ln(degree: &ComplexDegree, k: u32) -> Result<C64> {
    let s = degree.s;
    let kf = k as f64;
    Ok(kf * 2f64.ln() + 0.5 * PI.ln()
        - log_gamma((s - kf) / 2.0 + 1.0)?
        - log_gamma((1.0 - s - kf) / 2.0)?)
}

/// Residual of the addition formula
/// `P_s(-cos dpsi cos theta') = P_s(0) P_s(sin dpsi)
///   + 2 sum_{k>=1} (-1)^k Gamma(s-k+1)/Gamma(s+k+1) P_s^k(0) P_s^k(sin dpsi) cos(k theta')`
/// with the sum cut at `k_terms`; the left side uses the Fourier series with
/// cutoff `series_cutoff`.
pub fn addition_formula_check(
    degree: &ComplexDegree,
    theta_prime: f64,
    dpsi: f64,
    k_terms: u32,
    series_cutoff: usize,
) -> Result<f64> {
    let lhs = legendre_p(degree, -dpsi.cos() * theta_prime.cos(), series_cutoff)?;
    let rhs = addition_formula_terms(degree, dpsi, k_terms)?
        .iter()
        .enumerate()
        .map(|(k, t)| t * (k as f64 * theta_prime).cos())
        .sum::<C64>();
    Ok((lhs - rhs).norm())
}

/// The `theta'`-independent coefficients of the addition formula: entry `k`
/// multiplies `cos(k theta')`.
pub fn addition_formula_terms(degree: &ComplexDegree, dpsi: f64, k_terms: u32) -> Result<Vec<C64>> {
    let s = degree.s;
    let x = dpsi.sin();
    let mut out = Vec::with_capacity(k_terms as usize + 1);
    out.push(legendre_p_at_zero(degree)? * ferrers_p(degree, 0, x)?);
    for k in 1..=k_terms {
        let kf = k as f64;
        let ln = log_gamma(s - kf + 1.0)? - log_gamma(s + kf + 1.0)?
            + ferrers_p_at_zero_ln(degree, k)?
            + ferrers_p_ln(degree, k, x)?;
        let sign = if k % 2 == 0 { 2.0 } else { -2.0 };
        out.push(sign * ln.exp());
    }
    Ok(out)
}

/// Orthonormal associated Legendre values `N_lm P_l^m(x)` for `0 <= m <= l <= lmax`,
/// including the Condon-Shortley phase, stored at index `l (l + 1) / 2 + m`.
pub fn normalized_legendre_table(lmax: usize, x: f64) -> Vec<f64> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut out = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
    let sx = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sx;
        }
        out[idx(m, m)] = pmm;
        if m < lmax {
            let mut p_prev = pmm;
            let mut p_cur = ((2 * m + 3) as f64).sqrt() * x * pmm;
            out[idx(m + 1, m)] = p_cur;
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let p_next = a * (x * p_cur - b * p_prev);
                out[idx(l, m)] = p_next;
                p_prev = p_cur;
                p_cur = p_next;
            }
        }
    }
    out
}

/// Spherical harmonic `Y_lm(theta, psi)`, orthonormal on the unit sphere with
/// the Condon-Shortley phase, `theta` the polar and `psi` the azimuthal angle.
pub fn sph_harm(l: usize, m: i64, theta: f64, psi: f64) -> Result<C64> {
    require_finite("theta", theta)?;
    require_finite("psi", psi)?;
    if m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    let ma = m.unsigned_abs() as usize;
    let table = normalized_legendre_table(l, theta.cos());
    let v = table[l * (l + 1) / 2 + ma];
    let y = C64::from_polar(v, ma as f64 * psi);
    if m >= 0 {
        Ok(y)
    } else {
        let sign = if ma.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * y.conj())
    }
}

/// Legendre polynomials `P_0(x) .. P_lmax(x)`.
pub fn legendre_polynomials(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(1.0);
    if lmax >= 1 {
        out.push(x);
    }
    for l in 2..=lmax {
        let lf = l as f64;
        let next = ((2.0 * lf - 1.0) * x * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
        out.push(next);
    }
    out
}
