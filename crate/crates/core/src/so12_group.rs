//! The Lorentz group `O(1,2)` acting on three-dimensional Minkowski space
//! with metric `diag(+1, -1, -1)`.
//!
//! Provides the one-parameter subgroups, the reflections, the Iwasawa, Cartan
//! and Hannabuss decompositions of `SO0(1,2)`, the action on the forward light
//! cone and the Radon-Nikodym cocycle of the action on the circle.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};

pub type Mat3 = Matrix3<f64>;

/// The Minkowski metric `diag(1, -1, -1)`.
pub fn metric() -> Mat3 {
    Mat3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
}

/// Tolerance used when validating user-supplied matrices.
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Below this value of `|cos alpha|` the Hannabuss decomposition is refused.
pub const HANNABUSS_EXCEPTIONAL_TOL: f64 = 1e-8;

/// Below this value of `|cos alpha|` the Hannabuss factors grow like
/// `1 / cos^2 alpha` and their product cannot reproduce `g` to `1e-10` in
/// double precision, although the factors themselves are accurate.
pub const HANNABUSS_CONDITIONING_BAND: f64 = 0.1;

/// An element of `O(1,2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroupElementRecord", into = "GroupElementRecord")]
pub struct GroupElement {
    m: Mat3,
    det_sign: i8,
    time_orientation: i8,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GroupElementRecord {
    matrix: [f64; 9],
}

impl TryFrom<GroupElementRecord> for GroupElement {
    type Error = Error;
    fn try_from(r: GroupElementRecord) -> Result<Self> {
        GroupElement::from_row_slice(&r.matrix)
    }
}

impl From<GroupElement> for GroupElementRecord {
    fn from(g: GroupElement) -> Self {
        GroupElementRecord {
            matrix: g.to_row_array(),
        }
    }
}

impl GroupElement {
    /// Wraps a matrix after checking `m^T g m = g`.
    pub fn new(m: Mat3) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::ContractViolation(
                "matrix has non-finite entries".into(),
            ));
        }
        let eta = metric();
        let defect = (m.transpose() * eta * m - eta).norm();
        let scale = m.norm_squared().max(1.0);
        if defect > MEMBERSHIP_TOL * scale {
            return Err(Error::ContractViolation(format!(
                "matrix is not in O(1,2): metric defect {defect:.3e}"
            )));
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Builds an element from nine row-major entries.
    pub fn from_row_slice(entries: &[f64]) -> Result<Self> {
        if entries.len() != 9 {
            return Err(Error::ContractViolation(format!(
                "expected 9 matrix entries, got {}",
                entries.len()
            )));
        }
        Self::new(Mat3::from_row_slice(entries))
    }

    fn from_matrix_unchecked(m: Mat3) -> Self {
        let det_sign = if m.determinant() >= 0.0 { 1 } else { -1 };
        let time_orientation = if m[(0, 0)] >= 0.0 { 1 } else { -1 };
        Self {
            m,
            det_sign,
            time_orientation,
        }
    }

    pub fn identity() -> Self {
        Self::from_matrix_unchecked(Mat3::identity())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn to_row_array(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.m[(i, j)];
            }
        }
        out
    }

    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }

    pub fn time_orientation(&self) -> i8 {
        self.time_orientation
    }

    pub fn is_proper_orthochronous(&self) -> bool {
        self.det_sign > 0 && self.time_orientation > 0
    }

    /// Exact inverse `g m^T g`.
    pub fn inverse(&self) -> Self {
        let eta = metric();
        Self {
            m: eta * self.m.transpose() * eta,
            ..*self
        }
    }

    /// Frobenius norm of `m^T g m - g`.
    pub fn metric_defect(&self) -> f64 {
        let eta = metric();
        (self.m.transpose() * eta * self.m - eta).norm()
    }

    /// Frobenius distance to another element.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (self.m - other.m).norm()
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    pub fn require_proper_orthochronous(&self) -> Result<()> {
        if self.is_proper_orthochronous() {
            Ok(())
        } else {
            Err(Error::ContractViolation(
                "element is not proper orthochronous".into(),
            ))
        }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement {
            m: self.m * rhs.m,
            det_sign: self.det_sign * rhs.det_sign,
            time_orientation: self.time_orientation * rhs.time_orientation,
        }
    }
}

fn boost1_raw(t: f64) -> GroupElement {
    let (ch, sh) = (t.cosh(), t.sinh());
    GroupElement::from_matrix_unchecked(Mat3::new(ch, 0.0, sh, 0.0, 1.0, 0.0, sh, 0.0, ch))
}

fn boost2_raw(s: f64) -> GroupElement {
    let (ch, sh) = (s.cosh(), s.sinh());
    GroupElement::from_matrix_unchecked(Mat3::new(ch, sh, 0.0, sh, ch, 0.0, 0.0, 0.0, 1.0))
}

fn rotate0_raw(alpha: f64) -> GroupElement {
    let (s, c) = alpha.sin_cos();
    GroupElement::from_matrix_unchecked(Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
}

fn horo_raw(q: f64) -> GroupElement {
    let h = 0.5 * q * q;
    GroupElement::from_matrix_unchecked(Mat3::new(1.0 + h, q, h, q, 1.0, q, -h, -q, 1.0 - h))
}

/// Boost `exp(t L1)` in the `(x0, x2)` plane.
pub fn boost1(t: f64) -> Result<GroupElement> {
    require_finite("t", t)?;
    Ok(boost1_raw(t))
}

/// Boost `exp(s L2)` in the `(x0, x1)` plane.
pub fn boost2(s: f64) -> Result<GroupElement> {
    require_finite("s", s)?;
    Ok(boost2_raw(s))
}

/// Rotation `exp(alpha K0)` in the `(x1, x2)` plane.
pub fn rotate0(alpha: f64) -> Result<GroupElement> {
    require_finite("alpha", alpha)?;
    Ok(rotate0_raw(alpha))
}

/// Horospheric translation `D(q)`, the stabilizer of the light ray through
/// `(1, 0, -1)`.
pub fn horo(q: f64) -> Result<GroupElement> {
    require_finite("q", q)?;
    Ok(horo_raw(q))
}

/// The discrete reflections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reflection {
    /// Time reflection `x0 -> -x0`.
    T,
    /// `x2 -> -x2`.
    P1,
    /// `x1 -> -x1`.
    P2,
    /// `(x1, x2) -> (-x1, -x2)`, equal to a rotation by `pi`.
    P,
}

pub fn reflection(which: Reflection) -> GroupElement {
    let d = match which {
        Reflection::T => Vector3::new(-1.0, 1.0, 1.0),
        Reflection::P1 => Vector3::new(1.0, 1.0, -1.0),
        Reflection::P2 => Vector3::new(1.0, -1.0, 1.0),
        Reflection::P => Vector3::new(1.0, -1.0, -1.0),
    };
    GroupElement::from_matrix_unchecked(Mat3::from_diagonal(&d))
}

/// Generator of [`rotate0`].
pub fn k0() -> Mat3 {
    Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
}

/// Generator of [`boost1`].
pub fn l1() -> Mat3 {
    Mat3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// Generator of [`boost2`].
pub fn l2() -> Mat3 {
    Mat3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// The Casimir `-K0^2 + L1^2 + L2^2` of the defining representation.
pub fn casimir_matrix() -> Mat3 {
    let (k, a, b) = (k0(), l1(), l2());
    -(k * k) + a * a + b * b
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Factors of `g = R0(alpha) P^k L1(t) D(q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IwasawaFactors {
    pub alpha: f64,
    pub k: u8,
    pub t: f64,
    pub q: f64,
}

impl IwasawaFactors {
    pub fn recompose(&self) -> GroupElement {
        let pk = if self.k % 2 == 1 {
            reflection(Reflection::P)
        } else {
            GroupElement::identity()
        };
        rotate0_raw(self.alpha) * pk * boost1_raw(self.t) * horo_raw(self.q)
    }
}

/// Factors of `g = R0(alpha) L1(t) R0(alpha_prime)` with `t >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanFactors {
    pub alpha: f64,
    pub t: f64,
    pub alpha_prime: f64,
}

impl CartanFactors {
    pub fn recompose(&self) -> GroupElement {
        rotate0_raw(self.alpha) * boost1_raw(self.t) * rotate0_raw(self.alpha_prime)
    }
}

/// Factors of `g = L2(s) P^k L1(t) D(q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HannabussFactors {
    pub s: f64,
    pub k: u8,
    pub t: f64,
    pub q: f64,
}

impl HannabussFactors {
    pub fn recompose(&self) -> GroupElement {
        let pk = if self.k % 2 == 1 {
            reflection(Reflection::P)
        } else {
            GroupElement::identity()
        };
        boost2_raw(self.s) * pk * boost1_raw(self.t) * horo_raw(self.q)
    }
}

/// Iwasawa decomposition of a proper orthochronous element.
///
/// The image of the light ray `(1, 0, -1)` fixes `alpha` and `t`; `q` is read
/// off the remaining horospheric factor. Since `P = R0(pi)` the parity flag is
/// always returned as `0`.
pub fn iwasawa_decompose(g: &GroupElement) -> Result<IwasawaFactors> {
    g.require_proper_orthochronous()?;
    let m = g.matrix();
    let v0 = m[(0, 0)] - m[(0, 2)];
    let v1 = m[(1, 0)] - m[(1, 2)];
    let v2 = m[(2, 0)] - m[(2, 2)];
    if v0.is_nan() || v0 <= 0.0 {
        return Err(Error::ContractViolation(
            "light-ray image is not future directed".into(),
        ));
    }
    let t = -v0.ln();
    let alpha = wrap_angle(v1.atan2(-v2));
    let d = boost1_raw(-t) * rotate0_raw(-alpha) * *g;
    let dm = d.matrix();
    let q = (dm[(1, 0)] + dm[(0, 1)] + dm[(1, 2)] - dm[(2, 1)]) / 4.0;
    Ok(IwasawaFactors { alpha, k: 0, t, q })
}

/// Cartan decomposition, canonicalized to `t >= 0`, `alpha` in `[0, 2 pi)`,
/// and `alpha = 0` for pure rotations.
pub fn cartan_decompose(g: &GroupElement) -> Result<CartanFactors> {
    g.require_proper_orthochronous()?;
    let m = g.matrix();
    let sh = m[(0, 1)].hypot(m[(0, 2)]);
    let t = sh.asinh();
    if sh < 1e-14 {
        let total = m[(2, 1)].atan2(m[(1, 1)]);
        return Ok(CartanFactors {
            alpha: 0.0,
            t,
            alpha_prime: wrap_angle(total),
        });
    }
    let alpha = wrap_angle((-m[(1, 0)]).atan2(m[(2, 0)]));
    let alpha_prime = wrap_angle(m[(0, 1)].atan2(m[(0, 2)]));
    Ok(CartanFactors {
        alpha,
        t,
        alpha_prime,
    })
}

/// Hannabuss decomposition `g = L2(s) P^k L1(t) D(q)`.
///
/// With `alpha` the Iwasawa angle of `g`, `k = 0` when `cos alpha > 0` and
/// `k = 1` otherwise, `cosh s = (-1)^k / cos alpha` and
/// `sinh s = (-1)^k tan alpha` for the matrices of this module. Elements with
/// `|cos alpha| < 1e-8` form the exceptional set and are rejected.
pub fn hannabuss_decompose(g: &GroupElement) -> Result<HannabussFactors> {
    let iw = iwasawa_decompose(g)?;
    let c = iw.alpha.cos();
    if c.abs() < HANNABUSS_EXCEPTIONAL_TOL {
        return Err(Error::ExceptionalSet(format!(
            "Iwasawa angle {:.6} has |cos alpha| = {:.3e}",
            iw.alpha,
            c.abs()
        )));
    }
    let k: u8 = if c > 0.0 { 0 } else { 1 };
    let sign = if k == 0 { 1.0 } else { -1.0 };
    let s = (sign * iw.alpha.tan()).asinh();
    let (t_r, q_r) = hannabuss_rotation_factors(iw.alpha)?;
    // R0(alpha) = L2(s) P^k L1(t_r) D(q_r), and D(q) L1(t) = L1(t) D(e^t q).
    let t = t_r + iw.t;
    let q = iw.t.exp() * q_r + iw.q;
    Ok(HannabussFactors { s, k, t, q })
}

/// The `(t', q')` factors of a pure rotation `R0(alpha)` in Hannabuss form:
/// `e^{t'} = 1 / |cos alpha|` and `q' = -tan alpha`.
pub fn hannabuss_rotation_factors(alpha: f64) -> Result<(f64, f64)> {
    require_finite("alpha", alpha)?;
    let c = alpha.cos();
    if c.abs() < HANNABUSS_EXCEPTIONAL_TOL {
        return Err(Error::ExceptionalSet(format!(
            "rotation angle {alpha:.6} has |cos alpha| = {:.3e}",
            c.abs()
        )));
    }
    Ok((-c.abs().ln(), -alpha.tan()))
}

/// Point `p0 (1, sin alpha, -cos alpha)` on the forward light cone.
pub fn lightcone_vector(alpha: f64, p0: f64) -> Vector3<f64> {
    Vector3::new(p0, p0 * alpha.sin(), -p0 * alpha.cos())
}

/// Image of the light-cone point `(alpha, p0)` under `g^{-1}`, in the same
/// parametrization.
pub fn act_on_lightcone(g: &GroupElement, point: (f64, f64)) -> Result<(f64, f64)> {
    let (alpha, p0) = point;
    require_finite("alpha", alpha)?;
    require_finite("p0", p0)?;
    if p0 <= 0.0 {
        return Err(Error::Domain(format!("p0 must be positive, got {p0}")));
    }
    let v = g.inverse().apply(&lightcone_vector(alpha, p0));
    Ok((wrap_angle(v[1].atan2(-v[2])), v[0]))
}

/// Action of `g` on the circle of light rays, `alpha -> alpha'` with
/// `g R0(alpha) = R0(alpha') L1(t) D(q)`.
pub fn act_on_circle(g: &GroupElement, alpha: f64) -> Result<f64> {
    require_finite("alpha", alpha)?;
    let v = g.apply(&lightcone_vector(alpha, 1.0));
    Ok(wrap_angle(v[1].atan2(-v[2])))
}

/// Radon-Nikodym derivative of the rotation-invariant measure on the circle
/// under `g`, evaluated at the angle `base_point`: `e^{-t}` with `t` the
/// boost factor in the Iwasawa decomposition of `g R0(base_point)`.
pub fn radon_nikodym(g: &GroupElement, base_point: f64) -> Result<f64> {
    g.require_proper_orthochronous()?;
    require_finite("base_point", base_point)?;
    let v = g.apply(&lightcone_vector(base_point, 1.0));
    Ok(v[0])
}

/// Random proper orthochronous element `R0(a) L1(t) R0(b)` with uniform angles
/// and `t` uniform in `[0, t_max]`.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, t_max: f64) -> GroupElement {
    let a = rng.gen_range(0.0..TAU);
    let b = rng.gen_range(0.0..TAU);
    let t = rng.gen_range(0.0..=t_max);
    rotate0_raw(a) * boost1_raw(t) * rotate0_raw(b)
}

/// Angle difference reduced to `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}
