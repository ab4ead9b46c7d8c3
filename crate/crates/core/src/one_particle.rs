//! One-particle structure of the free scalar field of mass `mu` on the de Sitter
//! space of radius `r`, with Cauchy data on the time-zero circle.
//!
//! Two routes to the time-zero covariance are provided: the mode multiplier
//! `1/(2 omega(k))` with the Legendre kernel as its position-space form, and the
//! spectral calculus of the operator `epsilon` on the right half circle `I_+`.
//!
//! Functions on `I_+` are sampled at `M` cell-centred nodes
//! `psi_i = -pi/2 + (i + 1/2) pi/M`. Vectors in the weighted space
//! `L^2(|cos psi|^{-1} r dpsi)` are represented by the orthonormal coordinates
//! `v_i = f(psi_i) sqrt(r h / cos psi_i)`, `h = pi/M`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};
use crate::special_functions::{
    gamma_ratio_minus_one, legendre_prime_coeff, log_gamma, ComplexDegree, LegendreSeries,
    DEFAULT_CUTOFF,
};
use crate::uir_circle::CircleFunction;

type C64 = Complex64;

/// Eigenvalues of `epsilon^2` below this value are floored.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Default mode cutoff.
pub const DEFAULT_MODE_CUTOFF: usize = 128;

/// Mass, radius and the derived representation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub r: f64,
    pub mu: f64,
    pub nu: C64,
    pub s_plus: C64,
    pub s_minus: C64,
    pub c_nu: C64,
}

impl ModelParams {
    pub fn new(mu: f64, r: f64) -> Result<Self> {
        require_finite("mu", mu)?;
        require_finite("r", r)?;
        if mu <= 0.0 || r <= 0.0 {
            return Err(Error::Domain(format!(
                "mass and radius must be positive, got mu = {mu}, r = {r}"
            )));
        }
        let z2 = mu * mu * r * r;
        let nu = if z2 >= 0.25 {
            C64::new((z2 - 0.25).sqrt(), 0.0)
        } else {
            C64::new(0.0, (0.25 - z2).sqrt())
        };
        let i = C64::i();
        let s_plus = -0.5 - i * nu;
        let s_minus = -0.5 + i * nu;
        let c_nu = 1.0 / (2.0 * (i * nu * PI).cos());
        Ok(Self {
            r,
            mu,
            nu,
            s_plus,
            s_minus,
            c_nu,
        })
    }

    /// `mu r`, the only dimensionless parameter.
    pub fn zeta(&self) -> f64 {
        self.mu * self.r
    }

    pub fn is_principal(&self) -> bool {
        self.nu.im == 0.0
    }

    pub fn degree(&self) -> ComplexDegree {
        ComplexDegree::from_nu(self.nu)
    }
}

/// The mode energies `omega(k)`, in units of inverse length:
/// `(k + s)/r Gamma((k+s)/2) Gamma((k+1-s)/2) / (Gamma((k-s)/2) Gamma((k+1+s)/2))`.
/// The function is even in `k` and is evaluated at `|k|` as
/// `(|k| + c)/r` with the correction `c` computed to full precision.
pub fn dispersion(params: &ModelParams, k: i64) -> Result<f64> {
    let s = params.s_plus;
    let k = k.abs();
    let z = C64::new(k as f64 / 2.0, 0.0);
    let rho = gamma_ratio_minus_one(z, &[s / 2.0, (1.0 - s) / 2.0], &[-s / 2.0, (1.0 + s) / 2.0])?;
    let kf = k as f64;
    let corr = s + (kf + s) * rho;
    real_energy(k, C64::new(kf + corr.re, corr.im)).map(|_| (kf + corr.re) / params.r)
}

/// [`dispersion`] through differences of `log_gamma`; accurate to about
/// `1e-13` relative.
pub fn dispersion_log_gamma(params: &ModelParams, k: i64) -> Result<f64> {
    let s = params.s_plus;
    let kc = C64::new(k as f64, 0.0);
    let lg = log_gamma((kc + s) / 2.0)? - log_gamma((kc - s) / 2.0)?
        + log_gamma((kc + 1.0 - s) / 2.0)?
        - log_gamma((kc + 1.0 + s) / 2.0)?;
    real_energy(k, (kc + s) * lg.exp() / params.r)
}

fn real_energy(k: i64, w: C64) -> Result<f64> {
    if !w.re.is_finite() || w.im.abs() > 1e-9 * w.re.abs() {
        return Err(Error::Pole(format!(
            "dispersion at k = {k} is not a finite real number: {w}"
        )));
    }
    Ok(w.re)
}

/// `omega(k)` for the principal series through
/// `((k - 1/2)^2 + nu^2)/2 |Gamma((k - 1/2 + i nu)/2)|^2 / |Gamma((k + 1/2 + i nu)/2)|^2 / r`.
pub fn dispersion_principal_closed_form(params: &ModelParams, k: i64) -> Result<f64> {
    if !params.is_principal() {
        return Err(Error::Precondition(
            "closed form requires the principal series (mu r >= 1/2)".into(),
        ));
    }
    let nu = params.nu.re;
    let kf = k as f64;
    let a = log_gamma(C64::new((kf - 0.5) / 2.0, nu / 2.0))?.re;
    let b = log_gamma(C64::new((kf + 0.5) / 2.0, nu / 2.0))?.re;
    Ok(((kf - 0.5).powi(2) + nu * nu) / 2.0 * (2.0 * (a - b)).exp() / params.r)
}

/// Flat-space energy `sqrt(k^2/r^2 + mu^2)`.
pub fn flat_dispersion(params: &ModelParams, k: i64) -> f64 {
    let kr = k as f64 / params.r;
    (kr * kr + params.mu * params.mu).sqrt()
}

/// Table of `omega(k)` for `|k| <= k_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub params: ModelParams,
    pub k_max: usize,
    pub omega: Vec<f64>,
}

impl ModeSpectrum {
    pub fn new(params: ModelParams, k_max: usize) -> Result<Self> {
        let omega = (-(k_max as i64)..=k_max as i64)
            .map(|k| dispersion(&params, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            k_max,
            omega,
        })
    }

    pub fn omega(&self, k: i64) -> Option<f64> {
        let idx = k + self.k_max as i64;
        if idx < 0 {
            return None;
        }
        self.omega.get(idx as usize).copied()
    }

    pub fn max_omega(&self) -> f64 {
        self.omega.iter().copied().fold(0.0, f64::max)
    }
}

fn mode_cutoff_check(h: &CircleFunction, k_max: usize) -> Result<()> {
    if 2 * k_max >= h.len() {
        return Err(Error::Resolution(format!(
            "mode cutoff {k_max} needs more than {} samples",
            h.len()
        )));
    }
    Ok(())
}

fn mode_pairing(
    h1: &CircleFunction,
    h2: &CircleFunction,
    k_max: usize,
    weight: impl Fn(i64) -> Result<f64>,
) -> Result<C64> {
    if h1.len() != h2.len() {
        return Err(Error::Precondition("grids of different size".into()));
    }
    mode_cutoff_check(h1, k_max)?;
    let (c1, c2) = (h1.coefficients(), h2.coefficients());
    let n = h1.len();
    let mut acc = C64::new(0.0, 0.0);
    for k in -(k_max as i64)..=k_max as i64 {
        let j = k.rem_euclid(n as i64) as usize;
        acc += c1[j].conj() * c2[j] * weight(k)?;
    }
    Ok(acc)
}

/// `<h1, h2>` of the one-particle space on the circle:
/// `2 pi r sum_k conj(h1_k) h2_k / (2 omega(k))`, `h_k` the Fourier coefficients.
pub fn hhat_inner(
    params: &ModelParams,
    h1: &CircleFunction,
    h2: &CircleFunction,
    k_max: usize,
) -> Result<C64> {
    let s = mode_pairing(h1, h2, k_max, |k| Ok(1.0 / (2.0 * dispersion(params, k)?)))?;
    Ok(2.0 * PI * params.r * s)
}

/// Position-space kernel of `hhat_inner` with respect to `r dpsi r dpsi'`:
/// `(c_nu / 2) P_s(-cos(psi' - psi))`.
pub struct HhatKernel {
    series: LegendreSeries,
    scale: C64,
}

impl HhatKernel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self {
            series: LegendreSeries::new(params.degree(), DEFAULT_CUTOFF)?,
            scale: params.c_nu / 2.0,
        })
    }

    pub fn eval(&self, dpsi: f64) -> Result<C64> {
        Ok(self.scale * self.series.eval(dpsi)?)
    }
}

/// `<omega r h1, omega r h2>` of the one-particle space by the mode formula
/// `r^2 <h1, (omega/2) h2>_{L^2(r dpsi)}`.
pub fn hhat_derivative_inner(
    params: &ModelParams,
    h1: &CircleFunction,
    h2: &CircleFunction,
    k_max: usize,
) -> Result<C64> {
    let s = mode_pairing(h1, h2, k_max, |k| Ok(dispersion(params, k)? / 2.0))?;
    let r = params.r;
    Ok(2.0 * PI * r * r * r * s)
}

/// The same quantity through the kernel `(c_nu/2) P_s'(-cos(psi' - psi))`,
/// paired against `r dpsi r dpsi'` coefficient by coefficient.
pub fn hhat_derivative_inner_kernel(
    params: &ModelParams,
    h1: &CircleFunction,
    h2: &CircleFunction,
    k_max: usize,
) -> Result<C64> {
    let degree = params.degree();
    let s = mode_pairing(h1, h2, k_max, |k| {
        let p1 = legendre_prime_coeff(&degree, k)?;
        Ok((params.c_nu / 2.0 * p1).re)
    })?;
    let r = params.r;
    Ok(4.0 * PI * PI * r * r * s)
}

/// `omega(k)` expected from the kernel coefficients:
/// `(c_nu/2) (2 pi)^2 p^1(k) r^2 = pi r^3 omega(k)`.
pub fn omega_from_prime_coeff(params: &ModelParams, k: i64) -> Result<f64> {
    let p1 = legendre_prime_coeff(&params.degree(), k)?;
    Ok((params.c_nu / 2.0 * p1 * 4.0 * PI / params.r).re)
}

/// Discretization of `epsilon^2 = -(cos psi d/dpsi)^2 + mu^2 r^2 cos^2 psi` on
/// `I_+`, with Dirichlet truncation at the half nodes `+-pi/2`.
#[derive(Clone, Debug)]
pub struct EpsilonOperator {
    pub params: ModelParams,
    pub m: usize,
    /// Nodes `psi_i`.
    pub psi: Vec<f64>,
    /// `cos psi_i`.
    pub cos: Vec<f64>,
    /// `epsilon^2` in orthonormal weighted coordinates.
    pub matrix: DMatrix<f64>,
    /// Eigenvalues of `matrix` after flooring.
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Number of eigenvalues raised to `EIGENVALUE_FLOOR`.
    pub floored: usize,
}

/// Builds the operator `epsilon` on `m` nodes.
pub fn build_epsilon(params: &ModelParams, m: usize) -> Result<EpsilonOperator> {
    if m < 16 {
        return Err(Error::Resolution(format!(
            "grid of {m} nodes is below the minimum of 16"
        )));
    }
    let h = PI / m as f64;
    let psi: Vec<f64> = (0..m).map(|i| -PI / 2.0 + (i as f64 + 0.5) * h).collect();
    let cos: Vec<f64> = psi.iter().map(|p| p.cos()).collect();
    let half: Vec<f64> = (0..=m)
        .map(|i| {
            if i == 0 || i == m {
                0.0
            } else {
                (-PI / 2.0 + i as f64 * h).cos()
            }
        })
        .collect();
    let z2 = params.zeta() * params.zeta();
    let h2 = h * h;
    let mut b = DMatrix::zeros(m, m);
    for i in 0..m {
        b[(i, i)] = cos[i] * (half[i] + half[i + 1]) / h2 + z2 * cos[i] * cos[i];
        if i + 1 < m {
            let off = -(cos[i] * cos[i + 1]).sqrt() * half[i + 1] / h2;
            b[(i, i + 1)] = off;
            b[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(b.clone());
    let mut floored = 0;
    let eigenvalues = eig.eigenvalues.map(|l| {
        if l < EIGENVALUE_FLOOR {
            floored += 1;
            EIGENVALUE_FLOOR
        } else {
            l
        }
    });
    Ok(EpsilonOperator {
        params: *params,
        m,
        psi,
        cos,
        matrix: b,
        eigenvalues,
        eigenvectors: eig.eigenvectors,
        floored,
    })
}

impl EpsilonOperator {
    pub fn spacing(&self) -> f64 {
        PI / self.m as f64
    }

    /// Spectrum of `epsilon`, ascending as returned by the eigensolver.
    pub fn epsilon_values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.sqrt()).collect()
    }

    /// Smallest unfloored eigenvalue of `epsilon^2`.
    pub fn lowest_eigenvalue(&self) -> f64 {
        self.eigenvalues.min()
    }

    /// Weighted coordinates of the node values `f`.
    pub fn coordinates(&self, f: &[f64]) -> Result<DVector<f64>> {
        self.check_len(f)?;
        let w = self.params.r * self.spacing();
        Ok(DVector::from_iterator(
            self.m,
            f.iter().zip(&self.cos).map(|(v, c)| v * (w / c).sqrt()),
        ))
    }

    /// Node values from weighted coordinates.
    pub fn values(&self, v: &DVector<f64>) -> Vec<f64> {
        let w = self.params.r * self.spacing();
        v.iter()
            .zip(&self.cos)
            .map(|(x, c)| x * (c / w).sqrt())
            .collect()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.m {
            return Err(Error::Precondition(format!(
                "expected {} node values, got {}",
                self.m,
                f.len()
            )));
        }
        Ok(())
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.psi.iter().map(|&p| f(p)).collect()
    }

    /// Coordinates of `cos psi f`.
    pub fn cos_coordinates(&self, f: &[f64]) -> Result<DVector<f64>> {
        let cf: Vec<f64> = f.iter().zip(&self.cos).map(|(v, c)| v * c).collect();
        self.coordinates(&cf)
    }

    /// Spectral coefficients `V^T v`.
    pub fn spectral(&self, v: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(v)
    }

    /// `F(epsilon) v` in coordinates.
    pub fn apply_fn(&self, v: &DVector<f64>, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let mut a = self.spectral(v);
        for (x, l) in a.iter_mut().zip(self.eigenvalues.iter()) {
            *x *= f(l.sqrt());
        }
        &self.eigenvectors * a
    }

    /// `<a, F(epsilon) b>` for coordinate vectors.
    pub fn pair(&self, a: &DVector<f64>, b: &DVector<f64>, f: impl Fn(f64) -> f64) -> f64 {
        let (sa, sb) = (self.spectral(a), self.spectral(b));
        sa.iter()
            .zip(sb.iter())
            .zip(self.eigenvalues.iter())
            .map(|((x, y), l)| x * y * f(l.sqrt()))
            .sum()
    }

    /// `F(epsilon)` applied to node values of a complex function.
    pub fn apply_values(&self, f: &[C64], func: impl Fn(f64) -> f64 + Copy) -> Result<Vec<C64>> {
        let re: Vec<f64> = f.iter().map(|z| z.re).collect();
        let im: Vec<f64> = f.iter().map(|z| z.im).collect();
        let a = self.values(&self.apply_fn(&self.coordinates(&re)?, func));
        let b = self.values(&self.apply_fn(&self.coordinates(&im)?, func));
        Ok(a.into_iter().zip(b).map(|(x, y)| C64::new(x, y)).collect())
    }

    /// `epsilon^2` applied to node values.
    pub fn apply_squared(&self, f: &[f64]) -> Result<Vec<f64>> {
        Ok(self.values(&(&self.matrix * self.coordinates(f)?)))
    }
}

/// `(e^{-theta x} + e^{-(2 pi - theta) x}) / (2 x (1 - e^{-2 pi x}))` for
/// `theta` in `[0, 2 pi]`; equals `sum_l e^{i l theta}/(l^2 + x^2) / (2 pi)`.
pub fn periodic_resolvent(theta: f64, x: f64) -> f64 {
    let a = (-theta * x).exp();
    let b = (-(2.0 * PI - theta) * x).exp();
    (a + b) / (2.0 * x * (-(-2.0 * PI * x).exp_m1()))
}

/// Time-zero covariance between data on the circle and on the circle rotated
/// by the Euclidean angle `theta`:
/// `r <cos psi h1, G_theta(epsilon) cos psi h2>` with `G_theta` the periodic
/// resolvent.
pub fn sharp_time_covariance(
    eps: &EpsilonOperator,
    theta: f64,
    h1: &[f64],
    h2: &[f64],
) -> Result<f64> {
    require_finite("theta", theta)?;
    let th = theta.rem_euclid(2.0 * PI);
    let a = eps.cos_coordinates(h1)?;
    let b = eps.cos_coordinates(h2)?;
    Ok(eps.params.r * eps.pair(&a, &b, |x| periodic_resolvent(th, x)))
}

/// Pointwise kernel of [`sharp_time_covariance`] on the nodes: entry `(i, j)`
/// is the covariance of the node deltas `e_i / (r h)` and `e_j / (r h)`.
pub fn sharp_time_kernel(eps: &EpsilonOperator, theta: f64) -> Result<DMatrix<f64>> {
    require_finite("theta", theta)?;
    let th = theta.rem_euclid(2.0 * PI);
    let w = eps.params.r * eps.spacing();
    let d = DVector::from_iterator(eps.m, eps.cos.iter().map(|c| (c / w).sqrt()));
    let f = eps.eigenvalues.map(|l| periodic_resolvent(th, l.sqrt()));
    let mut vd = eps.eigenvectors.clone();
    for (i, mut row) in vd.row_iter_mut().enumerate() {
        row *= d[i];
    }
    let mut scaled = vd.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f[j];
    }
    Ok(scaled * vd.transpose() * eps.params.r)
}

/// Relative operator-norm residual of
/// `omega = |r cos psi|^{-1} |eps| (coth(pi |eps|) - P1^* / sinh(pi |eps|))`
/// on the modes `|k| <= k_max`, divided by the largest `omega(k)`.
///
/// The circle is assembled from `I_+` and its mirror image `psi -> pi - psi`,
/// both sampled on the nodes of `eps`; `P1^*` exchanges the two halves.
pub fn omega_magic_residual(eps: &EpsilonOperator, k_max: usize) -> Result<f64> {
    let params = eps.params;
    let spectrum = ModeSpectrum::new(params, k_max)?;
    let m = eps.m;
    let ks: Vec<i64> = (-(k_max as i64)..=k_max as i64).collect();
    let norm = (2.0 * PI * params.r).sqrt();
    let weight = (params.r * eps.spacing()).sqrt();
    let mut res = DMatrix::<C64>::zeros(2 * m, ks.len());
    for (j, &k) in ks.iter().enumerate() {
        let kf = k as f64;
        let plus: Vec<C64> = eps
            .psi
            .iter()
            .map(|p| C64::from_polar(1.0 / norm, kf * p))
            .collect();
        let minus: Vec<C64> = eps
            .psi
            .iter()
            .map(|p| C64::from_polar(1.0 / norm, kf * (PI - p)))
            .collect();
        let (rp, rm) = magic_rhs(eps, &plus, &minus)?;
        let w = spectrum.omega(k).expect("mode in table");
        for i in 0..m {
            res[(i, j)] = weight * (w * plus[i] - rp[i]);
            res[(m + i, j)] = weight * (w * minus[i] - rm[i]);
        }
    }
    let sv = res.singular_values();
    Ok(sv.max() / spectrum.max_omega())
}

/// Right-hand side of the operator identity for `omega` on the two half
/// circles: returns the values on `I_+` and on its mirror image.
pub fn magic_rhs(
    eps: &EpsilonOperator,
    plus: &[C64],
    minus: &[C64],
) -> Result<(Vec<C64>, Vec<C64>)> {
    let g = |x: f64| {
        let q = (-2.0 * PI * x).exp();
        x * (1.0 + q) / (1.0 - q)
    };
    let hs = |x: f64| {
        let q = (-2.0 * PI * x).exp();
        2.0 * x * q.sqrt() / (1.0 - q)
    };
    let gp = eps.apply_values(plus, g)?;
    let gm = eps.apply_values(minus, g)?;
    let hp = eps.apply_values(plus, hs)?;
    let hm = eps.apply_values(minus, hs)?;
    let r = eps.params.r;
    let out_p = (0..eps.m)
        .map(|i| (gp[i] - hm[i]) / (r * eps.cos[i]))
        .collect();
    let out_m = (0..eps.m)
        .map(|i| (gm[i] - hp[i]) / (r * eps.cos[i]))
        .collect();
    Ok((out_p, out_m))
}

/// Commutator function paired with data on `I_+`:
/// `-r <cos psi h1, sin(t eps)/eps cos psi h2>` in the weighted space, with
/// `t` the boost parameter.
pub fn commutator_kernel(eps: &EpsilonOperator, t: f64, h1: &[f64], h2: &[f64]) -> Result<f64> {
    require_finite("t", t)?;
    let a = eps.cos_coordinates(h1)?;
    let b = eps.cos_coordinates(h2)?;
    Ok(-eps.params.r * eps.pair(&a, &b, |x| (t * x).sin() / x))
}

/// Outcome of the KMS check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmsResidual {
    /// `|F(t + i beta) - conj(F(t))|` with the two data swapped.
    pub residual: f64,
    /// `sqrt(F_ff(0) F_gg(0))`, the Cauchy-Schwarz bound on `|F|`.
    pub scale: f64,
}

/// Occupation `rho = e^{-2 pi x} / (1 - e^{-2 pi x})`.
pub fn occupation(x: f64) -> f64 {
    let q = (-2.0 * PI * x).exp();
    q / (1.0 - q)
}

/// Cauchy data `(phi, pi)` on `I_+`, sampled at the nodes.
#[derive(Clone, Debug)]
pub struct CauchyData {
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
}

/// Spectral coefficients of `K(phi, pi) = (2 eps)^{-1/2} (eps phi^ + i pi^)`,
/// where the hats are the weighted coordinates of `cos psi phi` and `cos psi pi`.
fn kms_vector(eps: &EpsilonOperator, d: &CauchyData) -> Result<Vec<C64>> {
    let a = eps.spectral(&eps.cos_coordinates(&d.phi)?);
    let b = eps.spectral(&eps.cos_coordinates(&d.pi)?);
    Ok(a.iter()
        .zip(b.iter())
        .zip(eps.eigenvalues.iter())
        .map(|((x, y), l)| {
            let e = l.sqrt();
            C64::new(e * x, *y) / (2.0 * e).sqrt()
        })
        .collect())
}

/// Two-point function of the thermal structure
/// `K_beta = ((1 + rho)^{1/2} + rho^{1/2} j) K` under the boost dynamics
/// `e^{i t eps}`, continued to `t + i beta`:
/// `sum_n conj(a_n) b_n (1 + rho_n) e^{i z e_n} + conj(b_n) a_n rho_n e^{-i z e_n}`.
fn thermal_two_point(a: &[C64], b: &[C64], e: &[f64], t: f64, beta: f64) -> C64 {
    let i = C64::i();
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..e.len() {
        let x = e[n];
        let den = -(-2.0 * PI * x).exp_m1();
        let fwd = (-beta * x).exp() / den;
        let bwd = ((beta - 2.0 * PI) * x).exp() / den;
        acc += a[n].conj() * b[n] * fwd * (i * t * x).exp();
        acc += b[n].conj() * a[n] * bwd * (-i * t * x).exp();
    }
    acc
}

/// One-particle KMS check at inverse temperature `2 pi` of the thermal
/// structure built with `rho` at `2 pi`, evaluated at `t + i beta`.
pub fn kms_residual(
    eps: &EpsilonOperator,
    t: f64,
    f: &CauchyData,
    g: &CauchyData,
    beta: f64,
) -> Result<KmsResidual> {
    require_finite("t", t)?;
    require_finite("beta", beta)?;
    let a = kms_vector(eps, f)?;
    let b = kms_vector(eps, g)?;
    let e = eps.epsilon_values();
    let lhs = thermal_two_point(&a, &b, &e, t, beta);
    let rhs = thermal_two_point(&a, &b, &e, t, 0.0).conj();
    let ff = thermal_two_point(&a, &a, &e, 0.0, 0.0).re;
    let gg = thermal_two_point(&b, &b, &e, 0.0, 0.0).re;
    Ok(KmsResidual {
        residual: (lhs - rhs).norm(),
        scale: (ff * gg).sqrt(),
    })
}

/// The boost generator `L1` on the one-particle modes `|k| <= k_max`:
/// off-diagonal entries `(r/2) sqrt(omega(k) omega(k+1))`.
pub fn boost_generator_modes(params: &ModelParams, k_max: usize) -> Result<DMatrix<f64>> {
    if k_max < 2 {
        return Err(Error::Resolution(format!(
            "mode cutoff {k_max} is below the minimum of 2"
        )));
    }
    let spectrum = ModeSpectrum::new(*params, k_max)?;
    let n = 2 * k_max + 1;
    let mut l1 = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        let v = params.r / 2.0 * (spectrum.omega[j] * spectrum.omega[j + 1]).sqrt();
        l1[(j, j + 1)] = v;
        l1[(j + 1, j)] = v;
    }
    Ok(l1)
}

/// `K0 = diag(k)`, `L1`, and `L2 = -i [K0, L1]` on the modes `|k| <= k_max`.
pub fn one_particle_generators(params: &ModelParams, k_max: usize) -> Result<[DMatrix<C64>; 3]> {
    let l1 = boost_generator_modes(params, k_max)?.map(|x| C64::new(x, 0.0));
    let n = 2 * k_max + 1;
    let k0 = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(i as f64 - k_max as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let l2 = (&k0 * &l1 - &l1 * &k0) * C64::new(0.0, -1.0);
    Ok([k0, l1, l2])
}

/// `-k^2 + (r^2/2) omega(k) (omega(k-1) + omega(k+1)) - mu^2 r^2`.
pub fn mode_casimir_defect(params: &ModelParams, k: i64) -> Result<f64> {
    let w = dispersion(params, k)?;
    let r2 = params.r * params.r;
    let kf = k as f64;
    let sum = dispersion(params, k - 1)? + dispersion(params, k + 1)?;
    Ok((r2 / 2.0 * w).mul_add(sum, -kf * kf) - params.zeta() * params.zeta())
}

/// Smooth bump `exp(-1/(1 - x^2))`, `x = (psi - center)/width`, zero outside.
pub fn smooth_bump(psi: f64, center: f64, width: f64) -> f64 {
    let x = (psi - center) / width;
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!((p.s_plus + p.s_minus + 1.0).norm() < 1e-15);
        assert!((-p.s_plus * (p.s_plus + 1.0) - 1.0).norm() < 1e-14);
        let q = ModelParams::new(0.3, 1.0).unwrap();
        assert!(q.s_plus.im == 0.0 && q.s_plus.re > -0.5 && q.s_plus.re < 0.0);
        assert!(q.c_nu.re > 0.0 && q.c_nu.im.abs() < 1e-15);
    }

    #[test]
    fn small_grid_rejected() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!(matches!(build_epsilon(&p, 8), Err(Error::Resolution(_))));
    }

    #[test]
    fn resolvent_is_symmetric() {
        for th in [0.1, 1.0, 2.5] {
            let a = periodic_resolvent(th, 0.7);
            let b = periodic_resolvent(2.0 * PI - th, 0.7);
            assert!((a - b).abs() <= 1e-15 * a);
        }
    }
}
