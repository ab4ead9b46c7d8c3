//! Causal structure of two-dimensional de Sitter space, realized as the
//! hyperboloid `x0^2 - x1^2 - x2^2 = -r^2`.
//!
//! The time-zero circle is parametrized as `x(psi) = (0, r sin psi, r cos psi)`,
//! with the right half `I_+` given by `|psi| < pi/2`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};
use crate::so12_group::{angle_diff, GroupElement};

/// Relative width of the lightlike band around `x . y = -r^2`.
pub const LIGHTLIKE_BAND: f64 = 1e-9;

/// Minkowski product with signature `(+, -, -)`.
pub fn minkowski_dot(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2]
}

/// A point on the de Sitter hyperboloid of radius `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeSitterPoint {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub r: f64,
}

impl DeSitterPoint {
    pub fn new(x0: f64, x1: f64, x2: f64, r: f64) -> Result<Self> {
        for (name, v) in [("x0", x0), ("x1", x1), ("x2", x2), ("r", r)] {
            require_finite(name, v)?;
        }
        if r <= 0.0 {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        let p = Self { x0, x1, x2, r };
        let defect = (minkowski_dot(&p.vector(), &p.vector()) + r * r).abs();
        let scale = (x0 * x0 + x1 * x1 + x2 * x2).max(r * r);
        if defect > 1e-10 * scale {
            return Err(Error::Domain(format!(
                "point is off the hyperboloid by {defect:.3e}"
            )));
        }
        Ok(p)
    }

    /// `(r sinh t, r cosh t sin psi, r cosh t cos psi)` in global coordinates.
    pub fn from_global(t: f64, psi: f64, r: f64) -> Result<Self> {
        require_finite("t", t)?;
        require_finite("psi", psi)?;
        Self::new(
            r * t.sinh(),
            r * t.cosh() * psi.sin(),
            r * t.cosh() * psi.cos(),
            r,
        )
    }

    /// The point `x(psi)` on the time-zero circle.
    pub fn on_circle(psi: f64, r: f64) -> Result<Self> {
        Self::from_global(0.0, psi, r)
    }

    /// The origin `o = (0, 0, r)`.
    pub fn origin(r: f64) -> Result<Self> {
        Self::new(0.0, 0.0, r, r)
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x0, self.x1, self.x2)
    }

    pub fn transform(&self, g: &GroupElement) -> Self {
        let v = g.apply(&self.vector());
        Self {
            x0: v[0],
            x1: v[1],
            x2: v[2],
            r: self.r,
        }
    }

    pub fn dot(&self, other: &DeSitterPoint) -> f64 {
        minkowski_dot(&self.vector(), &other.vector())
    }
}

/// Causal relation between two points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalRelation {
    Timelike,
    Lightlike,
    Spacelike,
    Equal,
}

fn same_radius(x: &DeSitterPoint, y: &DeSitterPoint) -> Result<()> {
    if (x.r - y.r).abs() > 1e-12 * x.r.max(y.r) {
        Err(Error::Domain(format!(
            "points lie on hyperboloids of different radii {} and {}",
            x.r, y.r
        )))
    } else {
        Ok(())
    }
}

/// Classifies the pair by comparing `x . y` with `-r^2`.
pub fn classify(x: &DeSitterPoint, y: &DeSitterPoint) -> Result<CausalRelation> {
    same_radius(x, y)?;
    let r2 = x.r * x.r;
    if (x.vector() - y.vector()).norm() <= 1e-12 * x.r {
        return Ok(CausalRelation::Equal);
    }
    let d = x.dot(y) + r2;
    Ok(if d.abs() <= LIGHTLIKE_BAND * r2 {
        CausalRelation::Lightlike
    } else if d < 0.0 {
        CausalRelation::Timelike
    } else {
        CausalRelation::Spacelike
    })
}

/// Geodesic distance: spatial arc length for spacelike pairs with
/// `|x . y| <= r^2`, proper time for timelike pairs, `None` when
/// `x . y > r^2` (no geodesic joins the points).
pub fn geodesic_distance(x: &DeSitterPoint, y: &DeSitterPoint) -> Result<Option<f64>> {
    let rel = classify(x, y)?;
    let r = x.r;
    let c = -x.dot(y) / (r * r);
    Ok(match rel {
        CausalRelation::Equal | CausalRelation::Lightlike => Some(0.0),
        CausalRelation::Timelike => Some(r * c.acosh()),
        CausalRelation::Spacelike => {
            if c < -1.0 {
                None
            } else {
                Some(r * c.min(1.0).acos())
            }
        }
    })
}

/// An arc of the time-zero circle, `center` in `[-pi/2, 3 pi/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcInterval {
    pub center: f64,
    pub half_width: f64,
    pub r: f64,
}

/// Maps an angle into the fundamental domain `[-pi/2, 3 pi/2)`.
pub fn to_fundamental_domain(a: f64) -> f64 {
    let w = (a + FRAC_PI_2).rem_euclid(TAU) - FRAC_PI_2;
    if w >= 1.5 * PI {
        -FRAC_PI_2
    } else {
        w
    }
}

impl ArcInterval {
    pub fn new(center: f64, half_width: f64, r: f64) -> Result<Self> {
        require_finite("center", center)?;
        require_finite("half_width", half_width)?;
        if !(0.0..=PI).contains(&half_width) {
            return Err(Error::Domain(format!(
                "half width {half_width} outside [0, pi]"
            )));
        }
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        Ok(Self {
            center: to_fundamental_domain(center),
            half_width,
            r,
        })
    }

    /// Builds the arc from unwrapped endpoints `lo <= hi`.
    pub fn from_endpoints(lo: f64, hi: f64, r: f64) -> Result<Self> {
        let hw = (0.5 * (hi - lo)).clamp(0.0, PI);
        Self::new(0.5 * (lo + hi), hw, r)
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_width * self.r
    }

    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    /// True if the angle lies in the closed arc, up to `tol`.
    pub fn contains_angle(&self, psi: f64, tol: f64) -> bool {
        angle_diff(psi, self.center).abs() <= self.half_width + tol
    }

    /// True if `other` is contained in `self`, up to `tol`.
    pub fn contains(&self, other: &ArcInterval, tol: f64) -> bool {
        if self.half_width >= PI - tol {
            return true;
        }
        let d = angle_diff(other.center, self.center).abs();
        d + other.half_width <= self.half_width + tol
    }
}

/// The arc `I_alpha = R0(alpha) I_+`, centered at `-alpha`.
pub fn wedge_arc(alpha: f64, r: f64) -> Result<ArcInterval> {
    ArcInterval::new(-alpha, FRAC_PI_2, r)
}

/// Height `r tan(half_width)` of the tips of the double cone over an arc.
pub fn causal_completion_apex(arc: &ArcInterval) -> Result<f64> {
    if arc.half_width >= FRAC_PI_2 {
        return Err(Error::WedgeLimit(format!(
            "half width {} reaches pi/2; the bounding light rays are parallel",
            arc.half_width
        )));
    }
    Ok(arc.r * arc.half_width.tan())
}

/// Unwrapped center and half width of the causal shadow on the circle of the
/// point `Lambda1(tau) x(psi)`, valid for every `psi`.
fn shadow(psi: f64, tau: f64) -> (f64, f64) {
    let (s, c) = psi.sin_cos();
    let raw = s.atan2(tau.cosh() * c);
    let center = psi + angle_diff(raw, psi);
    let half = (tau.sinh() * c).abs().atan();
    (center, half)
}

/// Intersection of the causal shadow of `Lambda1(tau) x(psi)` with the circle.
pub fn dependence_interval(psi: f64, tau: f64, r: f64) -> Result<ArcInterval> {
    require_finite("psi", psi)?;
    require_finite("tau", tau)?;
    if psi.abs() >= FRAC_PI_2 {
        return Err(Error::DegenerateChart(format!(
            "psi = {psi} is outside the open right half circle"
        )));
    }
    let (center, half) = shadow(psi, tau);
    ArcInterval::new(center, half, r)
}

/// Region of the circle whose data can influence `Lambda^(alpha)(+-tau) I`,
/// with `Lambda^(alpha)(t) = R0(alpha) Lambda1(t) R0(-alpha)`.
///
/// The shadow endpoints are strictly increasing in the base angle, so the
/// union over `I` is spanned by the shadows of its two endpoints.
pub fn influence_region(arc: &ArcInterval, alpha: f64, tau: f64) -> Result<ArcInterval> {
    require_finite("alpha", alpha)?;
    require_finite("tau", tau)?;
    let (c_lo, h_lo) = shadow(arc.lower() + alpha, tau);
    let (c_hi, h_hi) = shadow(arc.upper() + alpha, tau);
    let lo = c_lo - h_lo - alpha;
    let hi = c_hi + h_hi - alpha;
    ArcInterval::from_endpoints(lo, hi, arc.r)
}

/// Null vector `p(t) = Lambda1(t) (1, 0, -1) = e^{-t} (1, 0, -1)`.
pub fn horosphere_normal(t: f64) -> Vector3<f64> {
    let e = (-t).exp();
    Vector3::new(e, 0.0, -e)
}

/// The point `x(tau, xi) = D(xi/r) Lambda1(tau/r) (0, 0, r)` of the horospheric
/// chart of `Gamma^+(W_1)`.
pub fn horospheric_point(tau: f64, xi: f64, r: f64) -> Result<DeSitterPoint> {
    let e = (tau / r).exp();
    DeSitterPoint::new(
        r * (tau / r).sinh() + xi * xi / (2.0 * r) * e,
        xi * e,
        r * (tau / r).cosh() - xi * xi / (2.0 * r) * e,
        r,
    )
}

/// Distance `r |ln(x/r . p(tau1/r))|` from `x` to the horosphere `P_tau1`.
pub fn horospheric_distance(x: &DeSitterPoint, tau1: f64) -> Result<f64> {
    require_finite("tau1", tau1)?;
    let r = x.r;
    let d = minkowski_dot(&x.vector(), &horosphere_normal(tau1 / r)) / r;
    if d <= 0.0 {
        return Err(Error::OutsideChart(format!(
            "x . p = {d:.3e} is not positive; the point is outside the horospheric chart"
        )));
    }
    Ok(r * d.ln().abs())
}
