use std::f64::consts::{PI, TAU};

use dsqft::quad::gauss_legendre_on;
use dsqft::special_functions::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const LOG_GAMMA_REFERENCE: [((f64, f64), (f64, f64)); 10] = [
    ((0.5, 0.0), (0.572_364_942_924_700_1, 0.0)),
    (
        (1.2, -0.4),
        (-0.183_520_744_357_212, 0.100_660_565_803_338_14),
    ),
    (
        (0.3, 0.7),
        (-0.093_170_312_498_134_18, -1.223_957_365_713_688_6),
    ),
    (
        (-2.7, 0.3),
        (-0.574_016_675_947_218_7, -9.565_454_460_480_572),
    ),
    (
        (-0.4, -12.0),
        (-20.167_616_431_363_744, -16.374_898_835_819_266),
    ),
    (
        (3.5, 45.0),
        (-58.344_750_898_259_015, 130.913_196_817_630_36),
    ),
    (
        (49.0, -5.0),
        (140.416_655_327_403_08, -19.416_735_290_769_292),
    ),
    (
        (0.01, 0.02),
        (3.794_436_720_782_829_6, -1.118_363_307_051_747_4),
    ),
    (
        (-30.2, 10.0),
        (-103.319_603_627_722_02, -62.032_392_636_991_54),
    ),
    ((25.0, 25.0), (43.639_161_830_499_66, 83.376_823_759_729_75)),
];

#[test]
fn log_gamma_matches_reference_values() {
    for ((a, b), (re, im)) in LOG_GAMMA_REFERENCE {
        let got = log_gamma(c(a, b)).unwrap();
        let rel = ((got - c(re, im)).exp() - 1.0).norm();
        assert!(rel < 1e-13, "z = {a}+{b}i: relative error {rel:e}");
    }
}

#[test]
fn gamma_reflection_identity() {
    let z = c(0.3, 0.7);
    let v = gamma(z).unwrap() * gamma(1.0 - z).unwrap() * (PI * z).sin() / PI;
    assert!((v - 1.0).norm() < 1e-12);
}

#[test]
fn gamma_duplication_identity() {
    let z = c(1.2, -0.4);
    let lhs = gamma(2.0 * z).unwrap();
    let rhs =
        c(2.0, 0.0).powc(2.0 * z - 1.0) / PI.sqrt() * gamma(z).unwrap() * gamma(z + 0.5).unwrap();
    assert!(((lhs - rhs) / lhs).norm() < 1e-12);
}

#[test]
fn gamma_ratio_exact_cases() {
    for x in [0.3, 2.5, 17.0, 140.0] {
        let z = c(x, 0.7);
        let r = gamma_ratio(z, &[c(1.0, 0.0)], &[c(0.0, 0.0)]).unwrap();
        assert!((r - z).norm() < 1e-15 * z.norm(), "{x}");
    }
    // Gamma(n + 1/2) / Gamma(n) by the duplication formula at n = 60.
    let n = 60.0f64;
    let lf = |m: f64| (1..=m as u64).map(|j| (j as f64).ln()).sum::<f64>();
    let expect = (lf(2.0 * n - 1.0) - (2.0 * n - 1.0) * 2f64.ln() - 2.0 * lf(n - 1.0)).exp()
        * std::f64::consts::PI.sqrt();
    let got = gamma_ratio(c(n, 0.0), &[c(0.5, 0.0)], &[c(0.0, 0.0)]).unwrap();
    assert!((got.re - expect).abs() < 1e-13 * expect);
    assert!(gamma_ratio(c(-2.0, 0.0), &[c(0.0, 0.0)], &[c(0.5, 0.0)]).is_err());
}

#[test]
fn gamma_ratio_matches_log_gamma() {
    let shifts = (
        [c(-0.25, -0.6), c(0.75, 0.6)],
        [c(0.25, 0.6), c(0.25, -0.6)],
    );
    for x in [-7.3, -0.4, 0.9, 5.5, 33.0] {
        let z = c(x, 0.2);
        let direct = (log_gamma(z + shifts.0[0]).unwrap() + log_gamma(z + shifts.0[1]).unwrap()
            - log_gamma(z + shifts.1[0]).unwrap()
            - log_gamma(z + shifts.1[1]).unwrap())
        .exp();
        let r = gamma_ratio(z, &shifts.0, &shifts.1).unwrap();
        let m1 = gamma_ratio_minus_one(z, &shifts.0, &shifts.1).unwrap();
        assert!(
            (r - direct).norm() < 1e-12 * direct.norm(),
            "{x}: {r} vs {direct}"
        );
        assert!((m1 + 1.0 - r).norm() < 1e-14 * r.norm());
    }
}

#[test]
fn coefficients_are_even_in_k() {
    let d = ComplexDegree::principal(1.3);
    for k in 1..=50 {
        let a = legendre_coeff(&d, k).unwrap();
        let b = legendre_coeff(&d, -k).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0), "k = {k}");
    }
}

#[test]
fn coefficient_routes_agree() {
    for nu in [0.3, 0.9, 1.3, 2.5] {
        let d = ComplexDegree::principal(nu);
        for k in 0..=40u32 {
            let a = legendre_coeff(&d, k as i64).unwrap();
            let b = legendre_coeff_product_form(&d, k).unwrap();
            assert!((a - b).norm() < 1e-11 * a.norm(), "nu = {nu}, k = {k}");
        }
    }
    let d = ComplexDegree::complementary(0.3);
    for k in 0..=40u32 {
        let a = legendre_coeff(&d, k as i64).unwrap();
        let b = legendre_coeff_product_form(&d, k).unwrap();
        assert!((a - b).norm() < 1e-11 * a.norm(), "complementary k = {k}");
    }
}

#[test]
fn coefficients_decay_like_inverse_k() {
    let d = ComplexDegree::principal(0.8);
    let ks: Vec<f64> = (0..20)
        .map(|i| 50.0 * 1.12f64.powi(i))
        .map(f64::round)
        .collect();
    let xs: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let ys: Vec<f64> = ks
        .iter()
        .map(|&k| legendre_coeff(&d, k as i64).unwrap().norm().ln())
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
}

#[test]
fn asymptotic_coefficients() {
    for d in [
        ComplexDegree::principal(1.0),
        ComplexDegree::principal(3.7),
        ComplexDegree::complementary(0.2),
    ] {
        let s = d.s;
        let a = legendre_coeff_asymptotics(s);
        assert!((a[1] - 1.0).norm() < 1e-14);
        for j in [2, 4, 6] {
            assert!(
                a[j].norm() < 1e-12 * (1.0 + a[j + 1].norm()),
                "a[{j}] = {}",
                a[j]
            );
        }
        assert!((a[3] - s * (s + 1.0) / 2.0).norm() < 1e-13);
    }
    {
        let d = ComplexDegree::principal(1.0);
        let a = legendre_coeff_asymptotics(d.s);
        let lead = -(PI * d.s).sin() / PI;
        for k in [60i64, 120] {
            let kf = k as f64;
            let model = lead * (1.0 / kf + a[3] / kf.powi(3) + a[5] / kf.powi(5));
            let rem = legendre_coeff(&d, k).unwrap() - model;
            let ratio = (rem * kf.powi(7) / (lead * a[7])).norm();
            assert!((ratio - 1.0).abs() < 0.1, "k = {k}: {ratio}");
        }
    }
}

#[test]
fn cosine_power_sums_match_direct_summation() {
    let n = 200_000;
    for psi in [0.3, 1.7, 3.0, 4.4, 6.0] {
        let sums = cosine_power_sums(psi).unwrap();
        for (row, j) in [(1, 3), (2, 5)] {
            let direct: f64 = (1..=n)
                .map(|k| (k as f64 * psi).cos() / (k as f64).powi(j))
                .sum();
            assert!((sums[row][0] - direct).abs() < 1e-12, "S_{j}({psi})");
            let direct_d: f64 = (1..=n)
                .map(|k| -(k as f64 * psi).sin() / (k as f64).powi(j - 1))
                .sum();
            let tol = if j == 3 { 1e-9 } else { 1e-12 };
            assert!((sums[row][1] - direct_d).abs() < tol, "S_{j}'({psi})");
        }
        assert!((sums[0][0] + (2.0 * (psi / 2.0).sin()).abs().ln()).abs() < 1e-14);
        assert!(cosine_power_sums(0.0).is_err());
        assert!(cosine_power_sums(TAU).is_err());
    }
}

/// Mehler-Dirichlet integral for the conical function,
/// `P_s(cos t) = (sqrt 2 / pi) int_0^t cosh(nu phi) / sqrt(cos phi - cos t) dphi`,
/// with `phi = t (1 - u^2)` removing the endpoint singularity.
fn mehler_dirichlet(nu: f64, x: f64) -> f64 {
    let t = x.acos();
    let (us, ws) = gauss_legendre_on(400, 0.0, 1.0);
    let mut acc = 0.0;
    for (u, w) in us.iter().zip(&ws) {
        let phi = t * (1.0 - u * u);
        let denom = (2.0 * (0.5 * (t + phi)).sin() * (0.5 * t * u * u).sin() / (u * u)).sqrt();
        acc += w * 2.0 * t * (nu * phi).cosh() / denom;
    }
    2f64.sqrt() / PI * acc
}

#[test]
fn legendre_matches_integral_representation() {
    let d = ComplexDegree::principal(1.0);
    let series = LegendreSeries::new(d, DEFAULT_CUTOFF).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=36 {
        let x = -0.9 + 0.05 * i as f64;
        let v = series.eval_x(x).unwrap();
        let q = mehler_dirichlet(1.0, x);
        worst = worst
            .max((v.re - q).abs() / q.abs().max(1e-3))
            .max(v.im.abs());
    }
    assert!(worst < 1e-7, "{worst:e}");
}

#[test]
fn legendre_special_values() {
    for d in [
        ComplexDegree::principal(0.6),
        ComplexDegree::principal(2.2),
        ComplexDegree::complementary(0.35),
    ] {
        let p1 = legendre_p(&d, 1.0, DEFAULT_CUTOFF).unwrap();
        assert!((p1 - 1.0).norm() < 1e-10, "P_s(1) = {p1}");
        let p0 = legendre_p(&d, 0.0, DEFAULT_CUTOFF).unwrap();
        let closed = legendre_p_at_zero(&d).unwrap();
        assert!((p0 - closed).norm() < 1e-11 * closed.norm());
    }
}

#[test]
fn legendre_endpoint_is_singular() {
    let d = ComplexDegree::principal(1.0);
    assert!(matches!(
        legendre_p(&d, -1.0, DEFAULT_CUTOFF),
        Err(dsqft::Error::Singular(_))
    ));
}

#[test]
fn truncated_series_needs_tail_summation() {
    let d = ComplexDegree::principal(1.0);
    let series = LegendreSeries::new(d, DEFAULT_CUTOFF).unwrap();
    let psi = 1.0;
    let accurate = series.eval(psi).unwrap();
    let naive = series.eval_truncated(psi);
    assert!((accurate - naive).norm() > 1e-5);
    assert!(series.tail_estimate() < 1e-10);
}

#[test]
fn legendre_is_real_for_real_nu() {
    let series = LegendreSeries::new(ComplexDegree::principal(1.7), DEFAULT_CUTOFF).unwrap();
    for i in 1..200 {
        let x = -1.0 + i as f64 / 100.0;
        assert!(series.eval_x(x).unwrap().im.abs() < 1e-10);
    }
}

#[test]
fn prime_coefficients_symmetry_and_zero_mode() {
    let d = ComplexDegree::principal(0.9);
    for k in 1..=40 {
        let a = legendre_prime_coeff(&d, k).unwrap();
        let b = legendre_prime_coeff(&d, -k).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }
    let p10 = legendre_prime_coeff(&d, 0).unwrap();
    let direct = d.s * d.s * legendre_coeff(&d.lowered(), 0).unwrap();
    assert!((p10 - direct).norm() < 1e-15 * direct.norm());
}

#[test]
fn derivative_series_matches_finite_difference() {
    let d = ComplexDegree::principal(0.9);
    let x = 0.2;
    let h = 1e-5;
    let series = LegendreSeries::new(d, DEFAULT_CUTOFF).unwrap();
    let fd = (series.eval_x(x + h).unwrap() - series.eval_x(x - h).unwrap()) / (2.0 * h);
    let der = legendre_p_prime_series(&d, x, DEFAULT_CUTOFF).unwrap();
    assert!(((der - fd) / der).norm() < 1e-6);
    let chain = series.eval_x_with_derivatives(x).unwrap()[1];
    assert!(((der - chain) / der).norm() < 1e-9, "{der} {chain}");
}

#[test]
fn legendre_ode_residual() {
    for d in [
        ComplexDegree::principal(0.9),
        ComplexDegree::complementary(0.4),
    ] {
        let series = LegendreSeries::new(d, DEFAULT_CUTOFF).unwrap();
        let s = d.s;
        for i in 0..50 {
            let x = -0.9 + 1.8 * i as f64 / 49.0;
            let [p, dp, ddp] = series.eval_x_with_derivatives(x).unwrap();
            let res = (1.0 - x * x) * ddp - 2.0 * x * dp + s * (s + 1.0) * p;
            assert!(res.norm() < 1e-5, "x = {x}: {res}");
        }
    }
}

#[test]
fn ferrers_zero_value_matches_hypergeometric_route() {
    let d = ComplexDegree::principal(0.9);
    for k in 0..12u32 {
        let closed = ferrers_p_at_zero_ln(&d, k).unwrap().exp();
        let series = ferrers_p(&d, k, 0.0).unwrap();
        assert!((closed - series).norm() < 1e-11 * closed.norm(), "k = {k}");
    }
    let p0 = ferrers_p(&d, 0, 0.4).unwrap();
    let leg = legendre_p(&d, 0.4, DEFAULT_CUTOFF).unwrap();
    assert!((p0 - leg).norm() < 1e-11 * leg.norm());
}

#[test]
fn addition_formula() {
    let d = ComplexDegree::principal(0.9);
    let r = addition_formula_check(&d, 0.0, 1.1, 60, DEFAULT_CUTOFF).unwrap();
    assert!(r < 1e-8, "{r:e}");
    let r = addition_formula_check(&d, 0.6, 1.1, 60, DEFAULT_CUTOFF).unwrap();
    assert!(r < 1e-6, "{r:e}");
}

#[test]
fn addition_formula_angular_average() {
    // Averaging cos(k theta') over [0, pi] removes every k >= 1 term; over the
    // quarter range [0, pi/2] the odd terms survive.
    let d = ComplexDegree::principal(0.9);
    let dpsi = 1.1;
    let series = LegendreSeries::new(d, DEFAULT_CUTOFF).unwrap();
    let terms = addition_formula_terms(&d, dpsi, 60).unwrap();
    let average = |b: f64| {
        let (ts, ws) = gauss_legendre_on(200, 0.0, b);
        ts.iter()
            .zip(&ws)
            .map(|(t, w)| w * series.eval_x(-dpsi.cos() * t.cos()).unwrap())
            .sum::<C64>()
            / b
    };
    assert!((average(PI) - terms[0]).norm() < 1e-8);
    let quarter: C64 = terms
        .iter()
        .enumerate()
        .map(|(k, t)| {
            if k == 0 {
                *t
            } else {
                t * (k as f64 * PI / 2.0).sin() / (k as f64 * PI / 2.0)
            }
        })
        .sum();
    assert!((average(PI / 2.0) - quarter).norm() < 1e-6);
    assert!((average(PI / 2.0) - terms[0]).norm() > 1e-3);
}

#[test]
fn spherical_harmonics_normalization() {
    let y00 = sph_harm(0, 0, 0.4, 1.0).unwrap();
    assert!((y00 - 1.0 / (4.0 * PI).sqrt()).norm() < 1e-15);
    let r: f64 = 2.5;
    let (xs, ws) = gauss_legendre_on(40, -1.0, 1.0);
    let nphi = 64;
    let mut acc = C64::new(0.0, 0.0);
    let mut cross = C64::new(0.0, 0.0);
    for (x, w) in xs.iter().zip(&ws) {
        let th = x.acos();
        for j in 0..nphi {
            let ph = TAU * j as f64 / nphi as f64;
            let y = sph_harm(3, 2, th, ph).unwrap();
            let z = sph_harm(3, -2, th, ph).unwrap();
            let dw = r * r * w * TAU / nphi as f64;
            acc += dw * y.conj() * y;
            cross += dw * z.conj() * y;
        }
    }
    assert!((acc - r * r).norm() < 1e-10 * r * r);
    assert!(cross.norm() < 1e-12);
}

#[test]
fn spherical_harmonics_addition_theorem() {
    let l = 4;
    let (t1, p1, t2, p2) = (0.7, 0.3, 2.1, -1.4);
    let sum: C64 = (-(l as i64)..=l as i64)
        .map(|m| sph_harm(l, m, t1, p1).unwrap().conj() * sph_harm(l, m, t2, p2).unwrap())
        .sum();
    let cosg = t1.cos() * t2.cos() + t1.sin() * t2.sin() * (p1 - p2).cos();
    let pl = legendre_polynomials(l, cosg)[l];
    assert!((sum - (2 * l + 1) as f64 / (4.0 * PI) * pl).norm() < 1e-13);
}

proptest! {
    #[test]
    fn sph_harm_conjugation(l in 0usize..12, mfrac in 0.0f64..1.0, th in 0.0f64..PI, ph in 0.0f64..TAU) {
        let m = ((l as f64 + 0.999) * mfrac).floor() as i64;
        let a = sph_harm(l, m, th, ph).unwrap().conj();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let b = sign * sph_harm(l, -m, th, ph).unwrap();
        prop_assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn coefficient_symmetry(nu in 0.05f64..4.0, k in 1i64..200) {
        let d = ComplexDegree::principal(nu);
        let a = legendre_coeff(&d, k).unwrap();
        let b = legendre_coeff(&d, -k).unwrap();
        prop_assert!((a - b).norm() < 1e-11 * a.norm());
    }

    #[test]
    fn legendre_real_on_principal_series(nu in 0.05f64..3.0, x in -0.99f64..1.0) {
        let v = legendre_p(&ComplexDegree::principal(nu), x, 64).unwrap();
        prop_assert!(v.im.abs() < 1e-10 * v.norm().max(1.0));
    }
}
