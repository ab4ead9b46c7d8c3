use std::f64::consts::{PI, TAU};

use dsqft::so12_group::*;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
    (a - b).norm() < tol
}

#[test]
fn boost_of_zero_is_identity() {
    assert_eq!(*boost1(0.0).unwrap().matrix(), Mat3::identity());
}

#[test]
fn horospheric_scaling() {
    let (t, q) = (0.7, 1.3);
    let lhs = boost1(-t).unwrap() * horo(q).unwrap() * boost1(t).unwrap();
    assert!(lhs.distance(&horo(t.exp() * q).unwrap()) < 1e-12);
    let lhs = boost1(t).unwrap() * horo(q).unwrap() * boost1(-t).unwrap();
    assert!(lhs.distance(&horo((-t).exp() * q).unwrap()) < 1e-12);
}

#[test]
fn boosts_match_matrix_exponential() {
    let t = 0.5;
    assert!(close(boost1(t).unwrap().matrix(), &(l1() * t).exp(), 1e-12));
    assert!(close(boost2(t).unwrap().matrix(), &(l2() * t).exp(), 1e-12));
    assert!(close(
        rotate0(t).unwrap().matrix(),
        &(k0() * t).exp(),
        1e-12
    ));
}

#[test]
fn generator_commutators() {
    let c = |a: Mat3, b: Mat3| a * b - b * a;
    assert_eq!(c(k0(), l1()), -l2());
    assert_eq!(c(k0(), l2()), l1());
    assert_eq!(c(l1(), l2()), k0());
}

#[test]
fn iwasawa_identity_and_known_factors() {
    let f = iwasawa_decompose(&GroupElement::identity()).unwrap();
    assert_eq!((f.alpha, f.k, f.t, f.q), (0.0, 0, 0.0, 0.0));

    let g = rotate0(1.1).unwrap() * boost1(0.4).unwrap() * horo(-2.0).unwrap();
    let f = iwasawa_decompose(&g).unwrap();
    assert!((f.alpha - 1.1).abs() < 1e-12);
    assert!((f.t - 0.4).abs() < 1e-12);
    assert!((f.q + 2.0).abs() < 1e-12);
    assert!(f.recompose().distance(&g) < 1e-12);
}

#[test]
fn iwasawa_parity_one_recomposes() {
    let f = IwasawaFactors {
        alpha: 0.3,
        k: 1,
        t: 0.2,
        q: 0.5,
    };
    let g = f.recompose();
    let back = iwasawa_decompose(&g).unwrap();
    assert_eq!(back.k, 0);
    assert!(back.recompose().distance(&g) < 1e-12);
}

#[test]
fn decompositions_roundtrip_on_random_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let g = random_element(&mut rng, 2.0);
        let iw = iwasawa_decompose(&g).unwrap();
        let ca = cartan_decompose(&g).unwrap();
        assert!(ca.t >= 0.0);
        worst.0 = worst.0.max(iw.recompose().distance(&g));
        worst.1 = worst.1.max(ca.recompose().distance(&g));
    }
    assert!(worst.0 < 1e-11 && worst.1 < 1e-11, "{worst:?}");
}

#[test]
fn cartan_canonical_forms() {
    let f = cartan_decompose(&GroupElement::identity()).unwrap();
    assert_eq!((f.alpha, f.t, f.alpha_prime), (0.0, 0.0, 0.0));
    let f = cartan_decompose(&rotate0(2.5).unwrap()).unwrap();
    assert_eq!(f.alpha, 0.0);
    assert!((f.alpha_prime - 2.5).abs() < 1e-14);
}

#[test]
fn hannabuss_identity_and_exceptional() {
    let f = hannabuss_decompose(&GroupElement::identity()).unwrap();
    assert_eq!((f.s, f.k, f.t, f.q), (0.0, 0, 0.0, 0.0));
    let g = rotate0(PI / 2.0).unwrap() * boost1(0.3).unwrap();
    assert!(matches!(
        hannabuss_decompose(&g),
        Err(dsqft::Error::ExceptionalSet(_))
    ));
}

#[test]
fn hannabuss_roundtrip_outside_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let g = random_element(&mut rng, 2.0);
        let a = iwasawa_decompose(&g).unwrap().alpha;
        if a.cos().abs() < HANNABUSS_CONDITIONING_BAND {
            continue;
        }
        let h = hannabuss_decompose(&g).unwrap();
        worst = worst.max(h.recompose().distance(&g));
        n += 1;
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn hannabuss_inside_band_is_accurate_relative_to_conditioning() {
    for a in [PI / 2.0 - 1e-3, PI / 2.0 + 1e-4, 3.0 * PI / 2.0 - 1e-6] {
        let g = rotate0(a).unwrap() * boost1(0.4).unwrap() * horo(0.3).unwrap();
        let h = hannabuss_decompose(&g).unwrap();
        let scale = h.s.cosh() * h.t.cosh() * (1.0 + h.q * h.q);
        let e = h.recompose().distance(&g) / scale;
        assert!(e < 1e-14, "a={a} e={e}");
    }
}

#[test]
fn lightcone_rotation_and_boost() {
    // In the mirrored angle a' = pi - alpha the rotation shifts by +beta and
    // the boost rescales by cosh t - sinh t cos a'.
    let (alpha, p0, beta, t) = (0.7, 1.9, 0.4, 0.8);
    let (a1, p1) = act_on_lightcone(&rotate0(beta).unwrap(), (alpha, p0)).unwrap();
    assert!(angle_diff(PI - a1, PI - alpha + beta).abs() < 1e-13);
    assert!((p1 - p0).abs() < 1e-13);
    let (_, p2) = act_on_lightcone(&boost1(t).unwrap(), (alpha, p0)).unwrap();
    let mirrored = PI - alpha;
    assert!((p2 - p0 * (t.cosh() - t.sinh() * mirrored.cos())).abs() < 1e-13);
}

#[test]
fn lightcone_action_errors() {
    let g = GroupElement::identity();
    assert!(act_on_lightcone(&g, (0.0, 0.0)).is_err());
    assert!(act_on_lightcone(&g, (0.0, -1.0)).is_err());
}

#[test]
fn radon_nikodym_values() {
    let r = rotate0(1.2).unwrap();
    for a in [0.0, 1.0, 4.0] {
        assert!((radon_nikodym(&r, a).unwrap() - 1.0).abs() < 1e-15);
    }
    let t = 0.6;
    let v = radon_nikodym(&boost1(t).unwrap(), 0.0).unwrap();
    assert!((v - (-t).exp()).abs() < 1e-15);
}

#[test]
fn radon_nikodym_from_iwasawa() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let g = random_element(&mut rng, 2.0);
        let a = rng.gen_range(0.0..TAU);
        let t = iwasawa_decompose(&(g * rotate0(a).unwrap())).unwrap().t;
        let v = radon_nikodym(&g, a).unwrap();
        assert!((v - (-t).exp()).abs() < 1e-12 * v);
    }
}

#[test]
fn radon_nikodym_cocycle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let g1 = random_element(&mut rng, 2.0);
        let g2 = random_element(&mut rng, 2.0);
        let x = rng.gen_range(0.0..TAU);
        let lhs = radon_nikodym(&(g1 * g2), x).unwrap();
        let rhs = radon_nikodym(&g1, act_on_circle(&g2, x).unwrap()).unwrap()
            * radon_nikodym(&g2, x).unwrap();
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    assert!(worst < 1e-11, "{worst}");
}

#[test]
fn haar_weight_in_iwasawa_coordinates() {
    let param = |a: f64, t: f64, q: f64| {
        *(rotate0(a).unwrap() * boost1(t).unwrap() * horo(q).unwrap()).matrix()
    };
    let coords = |x: Mat3| Vector3::new(x[(2, 1)], x[(0, 2)], x[(0, 1)]);
    let h = 1e-5;
    let jac = |a: f64, t: f64, q: f64| {
        let ginv = GroupElement::new(param(a, t, q)).unwrap().inverse();
        let mut cols = Vec::new();
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = h;
            let d = (param(a + e[0], t + e[1], q + e[2]) - param(a - e[0], t - e[1], q - e[2]))
                / (2.0 * h);
            cols.push(coords(ginv.matrix() * d));
        }
        Mat3::from_columns(&cols).determinant().abs()
    };
    let base = jac(0.3, 0.0, 0.2);
    for (a, t, q) in [(0.3, 1.0, 0.2), (1.3, 2.0, -0.7), (5.0, -1.5, 2.0)] {
        let ratio = jac(a, t, q) / ((-t).exp() * base);
        assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
    }
}

proptest! {
    #[test]
    fn boost_group_law(t in -3.0f64..3.0, u in -3.0f64..3.0) {
        let lhs = boost1(t).unwrap() * boost1(u).unwrap();
        prop_assert!(lhs.distance(&boost1(t + u).unwrap()) < 1e-12 * (1.0 + lhs.matrix().norm()));
    }

    #[test]
    fn constructor_outputs_preserve_metric(t in -5.0f64..5.0, a in -10.0f64..10.0, q in -5.0f64..5.0) {
        for g in [boost1(t).unwrap(), boost2(t).unwrap(), rotate0(a).unwrap(), horo(q).unwrap()] {
            prop_assert!(g.metric_defect() < 1e-12 * g.matrix().norm_squared().max(1.0));
        }
    }

    #[test]
    fn iwasawa_factor_roundtrip(a in 0.0f64..TAU, t in -2.0f64..2.0, q in -3.0f64..3.0) {
        let f = IwasawaFactors { alpha: a, k: 0, t, q };
        let back = iwasawa_decompose(&f.recompose()).unwrap();
        prop_assert!(angle_diff(back.alpha, a).abs() < 1e-11);
        prop_assert!((back.t - t).abs() < 1e-11);
        prop_assert!((back.q - q).abs() < 1e-10);
    }

    #[test]
    fn cartan_factor_roundtrip(a in 0.0f64..TAU, t in 0.01f64..3.0, b in 0.0f64..TAU) {
        let f = CartanFactors { alpha: a, t, alpha_prime: b };
        let back = cartan_decompose(&f.recompose()).unwrap();
        prop_assert!(angle_diff(back.alpha, a).abs() < 1e-10);
        prop_assert!((back.t - t).abs() < 1e-11);
        prop_assert!(angle_diff(back.alpha_prime, b).abs() < 1e-10);
    }

    #[test]
    fn lightcone_action_matches_matrix_vector(seed in 0u64..1000, a in 0.0f64..TAU, p0 in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&mut rng, 2.0);
        let (a1, p1) = act_on_lightcone(&g, (a, p0)).unwrap();
        let direct = g.inverse().apply(&lightcone_vector(a, p0));
        let ours = lightcone_vector(a1, p1);
        prop_assert!((ours - direct).norm() < 1e-13 * direct.norm().max(1.0));
    }
}
