use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use dsqft::ds_geometry::*;
use dsqft::so12_group::{angle_diff, boost1, random_element, rotate0, GroupElement};
use dsqft::Error;
use nalgebra::{Matrix2, Vector2, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bisect(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) <= 0.0, "root not bracketed");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Endpoints of the causal shadow of `y` on the time-zero circle, found by
/// bisecting the squared separation `(y - x(phi))^2` away from its maximum.
fn traced_shadow(y: &Vector3<f64>, r: f64) -> (f64, f64) {
    let sep = |phi: f64| {
        let d = y - Vector3::new(0.0, r * phi.sin(), r * phi.cos());
        d[0] * d[0] - d[1] * d[1] - d[2] * d[2]
    };
    let mid = y[1].atan2(y[2]);
    let lo = bisect(sep, mid - FRAC_PI_2, mid);
    let hi = bisect(sep, mid, mid + FRAC_PI_2);
    (lo, hi)
}

fn circle_point(psi: f64, r: f64) -> Vector3<f64> {
    Vector3::new(0.0, r * psi.sin(), r * psi.cos())
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > 1e-12 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    f(0.5 * (a + b))
}

fn point(v: Vector3<f64>, r: f64) -> DeSitterPoint {
    DeSitterPoint::new(v[0], v[1], v[2], r).unwrap()
}

#[test]
fn classify_examples() {
    let o = DeSitterPoint::origin(1.0).unwrap();
    assert_eq!(classify(&o, &o).unwrap(), CausalRelation::Equal);
    let e = DeSitterPoint::new(0.0, 1.0, 0.0, 1.0).unwrap();
    assert_eq!(classify(&o, &e).unwrap(), CausalRelation::Spacelike);
    let nearby = DeSitterPoint::on_circle(1e-3, 1.0).unwrap();
    assert_eq!(classify(&o, &nearby).unwrap(), CausalRelation::Spacelike);
}

#[test]
fn classify_agrees_with_ambient_separation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = 1.7;
    for _ in 0..10_000 {
        let x = DeSitterPoint::from_global(rng.gen_range(-2.0..2.0), rng.gen_range(-PI..PI), r)
            .unwrap();
        let y = DeSitterPoint::from_global(rng.gen_range(-2.0..2.0), rng.gen_range(-PI..PI), r)
            .unwrap();
        let d = x.vector() - y.vector();
        let sep = d[0] * d[0] - d[1] * d[1] - d[2] * d[2];
        let rel = classify(&x, &y).unwrap();
        assert_eq!(rel, classify(&y, &x).unwrap());
        if sep.abs() > 1e-6 {
            let expect = if sep > 0.0 {
                CausalRelation::Timelike
            } else {
                CausalRelation::Spacelike
            };
            assert_eq!(rel, expect);
        }
    }
}

#[test]
fn geodesic_distance_examples() {
    let r = 2.0;
    let o = DeSitterPoint::origin(r).unwrap();
    assert_eq!(geodesic_distance(&o, &o).unwrap(), Some(0.0));
    let e = DeSitterPoint::new(0.0, r, 0.0, r).unwrap();
    let (nodes, weights) = dsqft::quad::gauss_legendre_on(16, 0.0, FRAC_PI_2);
    let arc: f64 = nodes.iter().zip(&weights).map(|(_, w)| w * r).sum();
    assert!((geodesic_distance(&o, &e).unwrap().unwrap() - arc).abs() < 1e-12);
    let tau = 0.9;
    let y = o.transform(&boost1(tau / r).unwrap());
    assert!((geodesic_distance(&o, &y).unwrap().unwrap() - tau).abs() < 1e-12);
    let antipode = DeSitterPoint::from_global(0.5, PI, r).unwrap();
    assert_eq!(geodesic_distance(&o, &antipode).unwrap(), None);
}

#[test]
fn apex_examples() {
    let r = 1.3;
    let quarter = ArcInterval::new(0.4, FRAC_PI_4, r).unwrap();
    assert!((causal_completion_apex(&quarter).unwrap() - r).abs() < 1e-12);
    let tiny = ArcInterval::new(0.0, 1e-9, r).unwrap();
    assert!(causal_completion_apex(&tiny).unwrap() < 2e-9);
    let wide = ArcInterval::new(0.0, FRAC_PI_2, r).unwrap();
    assert!(matches!(
        causal_completion_apex(&wide),
        Err(Error::WedgeLimit(_))
    ));
}

#[test]
fn apex_matches_intersected_light_rays() {
    let r = 0.8;
    for &w in &[0.1, 0.5, 1.0, 1.4] {
        let arc = ArcInterval::new(0.0, w, r).unwrap();
        // Inward future null rays from the two endpoints x(+-w).
        let (a, b) = (circle_point(w, r), circle_point(-w, r));
        let la = Vector3::new(1.0, -w.cos(), w.sin());
        let lb = Vector3::new(1.0, w.cos(), w.sin());
        let m = Matrix2::new(la[0], -lb[0], la[1], -lb[1]);
        let rhs = Vector2::new(b[0] - a[0], b[1] - a[1]);
        let st = m.lu().solve(&rhs).unwrap();
        let tip = a + la * st[0];
        assert!((tip[2] - (b + lb * st[1])[2]).abs() < 1e-10);
        assert!((tip[0] - causal_completion_apex(&arc).unwrap()).abs() < 1e-10);
        let tip = point(tip, r);
        assert_eq!(
            classify(&tip, &DeSitterPoint::on_circle(w, r).unwrap()).unwrap(),
            CausalRelation::Lightlike
        );
    }
}

#[test]
fn double_cone_is_spacelike_to_complement() {
    let r = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let arc = ArcInterval::new(rng.gen_range(-1.0..4.0), rng.gen_range(0.05..1.5), r).unwrap();
        let lambda = causal_completion_apex(&arc).unwrap();
        let c = arc.center;
        let tip = point(
            Vector3::new(
                lambda,
                r / arc.half_width.cos() * c.sin(),
                r / arc.half_width.cos() * c.cos(),
            ),
            r,
        );
        let bottom = point(Vector3::new(-tip.x0, tip.x1, tip.x2), r);
        let comp = ArcInterval::new(c + PI, PI - arc.half_width, r).unwrap();
        let mut others = vec![DeSitterPoint::on_circle(
            c + PI + rng.gen_range(-0.99..0.99) * comp.half_width,
            r,
        )
        .unwrap()];
        if comp.half_width < FRAC_PI_2 {
            let h = causal_completion_apex(&comp).unwrap();
            let rho = r / comp.half_width.cos();
            others.push(point(
                Vector3::new(h, rho * comp.center.sin(), rho * comp.center.cos()),
                r,
            ));
        }
        for (x, y) in [tip, bottom]
            .iter()
            .flat_map(|x| others.iter().map(move |y| (x, y)))
        {
            let rel = classify(x, y).unwrap();
            assert!(
                matches!(rel, CausalRelation::Spacelike | CausalRelation::Lightlike),
                "{rel:?}"
            );
        }
    }
}

#[test]
fn dependence_interval_examples() {
    let r = 1.0;
    let z = dependence_interval(0.3, 0.0, r).unwrap();
    assert_eq!(z.half_width, 0.0);
    assert!((z.center - 0.3).abs() < 1e-15);
    let edge = dependence_interval(FRAC_PI_2 - 1e-12, 5.0, r).unwrap();
    assert!(edge.half_width < 1e-9);
    assert!(matches!(
        dependence_interval(FRAC_PI_2, 1.0, r),
        Err(Error::DegenerateChart(_))
    ));
    let iv = dependence_interval(0.3, 1.2, r).unwrap();
    let y = boost1(1.2).unwrap().apply(&circle_point(0.3, r));
    let (lo, hi) = traced_shadow(&y, r);
    assert!((iv.lower() - lo).abs() < 1e-8);
    assert!((iv.upper() - hi).abs() < 1e-8);
    let expect_center =
        (0.3f64.sin() / (1.0 + (1.2f64.sinh() * 0.3f64.cos()).powi(2)).sqrt()).asin();
    assert!((iv.center - expect_center).abs() < 1e-12);
}

#[test]
fn dependence_interval_matches_ray_tracing_on_grid() {
    let r = 1.4;
    let mut worst = 0.0f64;
    for i in 0..20 {
        let psi = -1.5 + 3.0 * i as f64 / 19.0;
        for j in 0..20 {
            let tau = -3.0 + 6.0 * j as f64 / 19.0;
            let iv = dependence_interval(psi, tau, r).unwrap();
            let y = boost1(tau).unwrap().apply(&circle_point(psi, r));
            let (lo, hi) = traced_shadow(&y, r);
            worst = worst
                .max((iv.lower() - lo).abs())
                .max((iv.upper() - hi).abs());
        }
    }
    assert!(worst < 1e-8, "max endpoint error {worst:e}");
}

#[test]
fn dependence_interval_symmetries() {
    let r = 1.0;
    for &psi in &[0.0, 0.4, 1.2] {
        for &tau in &[0.3, 1.0, 4.0, 30.0] {
            let a = dependence_interval(psi, tau, r).unwrap();
            let b = dependence_interval(psi, -tau, r).unwrap();
            let c = dependence_interval(-psi, tau, r).unwrap();
            assert!((a.half_width - b.half_width).abs() < 1e-15);
            assert!((a.half_width - c.half_width).abs() < 1e-15);
            assert!((a.center + c.center).abs() < 1e-15);
            assert!(a.length() < PI * r);
            let wider = dependence_interval(psi, tau * 1.5, r).unwrap();
            assert!(wider.half_width >= a.half_width);
        }
    }
}

/// Union of traced shadows of `g x(psi)` over a fine sample of the arc.
fn sampled_influence(arc: &ArcInterval, g: &GroupElement) -> (f64, f64) {
    let n = 400;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=n {
        let psi = arc.lower() + (arc.upper() - arc.lower()) * i as f64 / n as f64;
        let y = g.apply(&circle_point(psi, arc.r));
        let (a, b) = if y[0].abs() < 1e-14 {
            (psi, psi)
        } else {
            traced_shadow(&y, arc.r)
        };
        let shift = psi + angle_diff(0.5 * (a + b), psi) - 0.5 * (a + b);
        lo = lo.min(a + shift);
        hi = hi.max(b + shift);
    }
    (lo, hi)
}

#[test]
fn influence_region_tau_zero_is_identity() {
    let arc = ArcInterval::new(0.7, 0.3, 1.0).unwrap();
    let out = influence_region(&arc, 0.4, 0.0).unwrap();
    assert!((angle_diff(out.center, arc.center)).abs() < 1e-14);
    assert!((out.half_width - arc.half_width).abs() < 1e-14);
}

#[test]
fn influence_region_fills_wedge_for_large_tau() {
    let arc = ArcInterval::new(0.2, 0.3, 1.0).unwrap();
    let out = influence_region(&arc, 0.0, 40.0).unwrap();
    assert!(out.center.abs() < 1e-12);
    assert!((out.half_width - FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn influence_region_sign_convention_matches_boosted_shadows() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let r = rng.gen_range(0.5..2.0);
        let arc = ArcInterval::new(rng.gen_range(-1.5..4.5), rng.gen_range(0.01..1.0), r).unwrap();
        let alpha = rng.gen_range(-PI..PI);
        let tau = rng.gen_range(0.05..1.5);
        let out = influence_region(&arc, alpha, tau).unwrap();
        for t in [tau, -tau] {
            let g = rotate0(alpha).unwrap() * boost1(t).unwrap() * rotate0(-alpha).unwrap();
            let (lo, hi) = sampled_influence(&arc, &g);
            let mid = 0.5 * (lo + hi);
            assert!(
                angle_diff(out.center, mid).abs() < 1e-8,
                "{out:?} vs [{lo}, {hi}]"
            );
            assert!((out.half_width - 0.5 * (hi - lo)).abs() < 1e-8);
        }
    }
}

#[test]
fn horospheric_distance_examples() {
    let r = 1.0;
    let x = horospheric_point(0.5, 0.8, r).unwrap();
    assert!((horospheric_distance(&x, 1.7).unwrap() - 1.2).abs() < 1e-12);
    assert!(horospheric_distance(&x, 0.5).unwrap() < 1e-12);
    let outside = DeSitterPoint::new(0.0, 0.0, -1.0, 1.0).unwrap();
    assert!(matches!(
        horospheric_distance(&outside, 0.0),
        Err(Error::OutsideChart(_))
    ));
}

#[test]
fn horospheric_distance_is_maximal_proper_time() {
    for &(r, tau2, xi, tau1) in &[
        (1.0, 0.5, 0.8, 1.7),
        (2.5, -0.3, 1.1, 2.0),
        (0.7, 1.0, -0.4, 0.2),
    ] {
        let x = horospheric_point(tau2, xi, r).unwrap();
        let cosh_proper = |eta: f64| {
            let y = horospheric_point(tau1, eta, r).unwrap();
            -x.dot(&y) / (r * r)
        };
        let best = r * golden_max(cosh_proper, xi - 20.0, xi + 20.0).acosh();
        assert!((best - horospheric_distance(&x, tau1).unwrap()).abs() < 1e-7);
    }
}

proptest! {
    #[test]
    fn lorentz_invariance(seed in 0u64..10_000, t1 in -2.0..2.0f64, p1 in -3.2..3.2f64,
                          t2 in -2.0..2.0f64, p2 in -3.2..3.2f64) {
        let r = 1.3;
        let g = random_element(&mut ChaCha8Rng::seed_from_u64(seed), 1.5);
        let x = DeSitterPoint::from_global(t1, p1, r).unwrap();
        let y = DeSitterPoint::from_global(t2, p2, r).unwrap();
        let (gx, gy) = (x.transform(&g), y.transform(&g));
        let d = x.dot(&y) + r * r;
        prop_assume!(d.abs() > 1e-6);
        prop_assert_eq!(classify(&x, &y).unwrap(), classify(&gx, &gy).unwrap());
        let a = geodesic_distance(&x, &y).unwrap();
        let b = geodesic_distance(&gx, &gy).unwrap();
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9 * (1.0 + a)),
            (None, None) => {}
            _ => prop_assert!(((x.dot(&y) / (r * r)) - 1.0).abs() < 1e-9),
        }
    }

    #[test]
    fn influence_region_stays_in_wedge(alpha in -PI..PI, tau in -5.0..5.0f64,
                                       off in -1.0..1.0f64, frac in 0.01..1.0f64) {
        let wedge = wedge_arc(alpha, 1.0).unwrap();
        let hw = frac * FRAC_PI_2 * (1.0 - off.abs());
        let arc = ArcInterval::new(-alpha + off * FRAC_PI_2, hw, 1.0).unwrap();
        prop_assume!(wedge.contains(&arc, 0.0));
        let out = influence_region(&arc, alpha, tau).unwrap();
        prop_assert!(wedge.contains(&out, 1e-12));
        prop_assert!(out.contains(&arc, 1e-12));
    }

    #[test]
    fn influence_region_is_endpoint_envelope(c in -1.5..4.5f64, hw in 0.0..1.5f64,
                                             alpha in -PI..PI, tau in -3.0..3.0f64) {
        let arc = ArcInterval::new(c, hw, 1.0).unwrap();
        let out = influence_region(&arc, alpha, tau).unwrap();
        let n = 64;
        for i in 0..=n {
            let psi = arc.lower() + (arc.upper() - arc.lower()) * i as f64 / n as f64 + alpha;
            let y = boost1(tau).unwrap().apply(&circle_point(psi, 1.0));
            let iv = if y[0].abs() < 1e-12 { (psi, psi) } else { traced_shadow(&y, 1.0) };
            let lo = ArcInterval::new(iv.0 - alpha, 0.0, 1.0).unwrap();
            let hi = ArcInterval::new(iv.1 - alpha, 0.0, 1.0).unwrap();
            prop_assert!(out.contains(&lo, 1e-9));
            prop_assert!(out.contains(&hi, 1e-9));
        }
    }
}
