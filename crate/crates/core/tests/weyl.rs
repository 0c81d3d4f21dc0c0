use std::f64::consts::PI;

use itekit::geometry::{Domain, MatrixField, Medium, ScalarField};
use itekit::special_functions::{zeros_of, Order, ZeroKind};
use itekit::weyl::{
    alpha_closed, alpha_quadrature, main_term_ratio, remainder_fit, table, write_csv, AlphaMethod, CountingFunction,
    WeylError,
};
use proptest::prelude::*;

/// Dirichlet ∪ Neumann disk eigenvalues `k²` up to `t`, with the angular
/// multiplicity 1 for `m = 0` and 2 otherwise.
fn dirichlet_neumann_disk(t: f64) -> Vec<(f64, u32)> {
    let k_max = t.sqrt();
    let mut out = Vec::new();
    for m in 0u32.. {
        let mult = if m == 0 { 1 } else { 2 };
        let d = zeros_of(ZeroKind::Value, Order::Cylindrical(m), k_max).unwrap();
        let n = zeros_of(ZeroKind::Derivative, Order::Cylindrical(m), k_max).unwrap();
        if d.is_empty() && n.is_empty() {
            break;
        }
        out.extend(d.iter().chain(n.iter()).map(|k| (k * k, mult)));
    }
    out
}

#[test]
fn closed_form_examples() {
    let a = alpha_closed(PI, 2.0, 1.0, 2).unwrap();
    assert!((a.alpha - 0.375).abs() < 1e-15);
    assert_eq!(a.method, AlphaMethod::ClosedForm);
    let a = alpha_closed(PI, 3.0, 3.0, 2).unwrap();
    assert!((a.alpha - 0.5).abs() < 1e-15);
    let a = alpha_closed(4.0 * PI / 3.0, 2.0, 1.0, 3).unwrap();
    let expected = 2.0 / (9.0 * PI) * (1.0 + 2f64.powf(-1.5));
    assert!((a.alpha - expected).abs() < 1e-15);
    // 0.0957443…; the commonly quoted 0.09577 is off in the fourth digit
    assert!((a.alpha - 0.09577).abs() < 5e-5);
    assert!(alpha_closed(0.0, 1.0, 1.0, 2).is_err());
    assert!(alpha_closed(1.0, 1.0, 1.0, 4).is_err());
}

#[test]
fn quadrature_examples() {
    let disk = Domain::disk(1.0).unwrap();
    let q = alpha_quadrature(&Medium::isotropic(2, 2.0, 1.0), &disk, 1e-12).unwrap();
    assert!((q.alpha - 0.375).abs() < 1e-9);
    assert_eq!(q.method, AlphaMethod::Quadrature);

    let m = Medium::new(
        2,
        MatrixField::IsotropicField(ScalarField::Constant { value: 2.0 }),
        ScalarField::RadialPolynomial { coeffs: vec![1.0, 1.0] },
    )
    .unwrap();
    let q = alpha_quadrature(&m, &disk, 1e-12).unwrap();
    assert!((q.alpha - 7.0 / 16.0).abs() < 1e-9, "{}", q.alpha);

    let tiny = Domain::disk(1e-5).unwrap();
    let q = alpha_quadrature(&Medium::isotropic(2, 2.0, 1.0), &tiny, 1e-10).unwrap();
    assert!(q.alpha < 1e-10);
}

#[test]
fn quadrature_matches_closed_form_on_every_domain() {
    let cases = [
        (Domain::disk(1.7).unwrap(), Medium::isotropic(2, 2.0, 0.6)),
        (Domain::ellipse(2.0, 0.5).unwrap(), Medium::isotropic(2, 0.4, 1.3)),
        (Domain::fourier(1.0, vec![0.2, 0.05], vec![0.0, 0.1]).unwrap(), Medium::isotropic(2, 3.0, 2.0)),
        (Domain::ball(1.2).unwrap(), Medium::isotropic(3, 2.0, 1.0)),
    ];
    for (domain, medium) in cases {
        let (a, n) = medium.isotropic_constant().unwrap();
        let c = alpha_closed(domain.volume(), a, n, domain.dimension()).unwrap();
        let q = alpha_quadrature(&medium, &domain, 1e-12).unwrap();
        assert!((c.alpha - q.alpha).abs() <= 1e-10 * c.alpha + q.error_estimate, "{} vs {}", c.alpha, q.alpha);
    }
}

#[test]
fn empty_spectrum_ratio_is_zero() {
    let n = CountingFunction::new(Vec::new(), 100.0).unwrap();
    let a = alpha_closed(PI, 2.0, 1.0, 2).unwrap();
    assert_eq!(main_term_ratio(&n, &a, 50.0).unwrap(), 0.0);
    assert!(matches!(main_term_ratio(&n, &a, 101.0), Err(WeylError::BeyondData { .. })));
}

#[test]
fn degenerate_disk_ratio() {
    let spectrum = dirichlet_neumann_disk(400.0);
    let n = CountingFunction::new(spectrum, 400.0).unwrap();
    let a = alpha_closed(PI, 2.0, 2.0, 2).unwrap();
    assert_eq!(a.alpha, 0.5);
    let r = main_term_ratio(&n, &a, 400.0).unwrap();
    assert!((0.97..=1.03).contains(&r), "ratio {r}");
}

#[test]
fn degenerate_disk_remainder_is_bounded() {
    let spectrum = dirichlet_neumann_disk(1600.0);
    let n = CountingFunction::new(spectrum, 1600.0).unwrap();
    let a = alpha_closed(PI, 2.0, 2.0, 2).unwrap();
    let fits: Vec<f64> = [400.0, 900.0, 1600.0].iter().map(|&t2| remainder_fit(&n, &a, (100.0, t2)).unwrap().c_hat).collect();
    // The sup over a growing window can only grow, and the Dirichlet/Neumann
    // boundary terms cancel to leading order, so it stays O(1).
    assert!(fits.windows(2).all(|w| w[1] >= w[0]));
    assert!(fits[2] < 1.0 && fits[2] > 0.0, "{fits:?}");
    assert!(fits[2] - fits[0] < 0.2, "{fits:?}");
}

#[test]
fn synthetic_spectrum_matches_main_term() {
    let a = alpha_closed(PI, 2.0, 1.0, 2).unwrap();
    let spectrum: Vec<(f64, u32)> = (1..=4000).map(|j| (j as f64 / a.alpha, 1)).collect();
    let t_max = 4000.0 / a.alpha;
    let n = CountingFunction::new(spectrum, t_max).unwrap();
    let r = main_term_ratio(&n, &a, t_max * 0.999).unwrap();
    assert!((r - 1.0).abs() < 1e-3);
    let fit = remainder_fit(&n, &a, (10.0, t_max)).unwrap();
    assert!(fit.c_hat <= 1e-9, "{}", fit.c_hat);
}

#[test]
fn shifted_spectrum_raises_the_remainder() {
    let a = alpha_closed(PI, 2.0, 2.0, 2).unwrap();
    let base = dirichlet_neumann_disk(900.0);
    let mut shifted = base.clone();
    shifted.push((0.5, 5));
    let (t1, t2) = (100.0, 900.0);
    let f0 = remainder_fit(&CountingFunction::new(base, 900.0).unwrap(), &a, (t1, t2)).unwrap();
    let f1 = remainder_fit(&CountingFunction::new(shifted, 900.0).unwrap(), &a, (t1, t2)).unwrap();
    let at_sup = 5.0 / f0.t_at_sup.sqrt();
    assert!(f1.c_hat >= f0.c_hat + at_sup - 1e-12);
    assert!(f1.c_hat <= f0.c_hat + 5.0 / t1.sqrt() + 1e-12);
}

#[test]
fn csv_layout() {
    let a = alpha_closed(PI, 2.0, 1.0, 2).unwrap();
    let n = CountingFunction::new([(1.0, 2), (4.0, 1)], 10.0).unwrap();
    let rows = table(&n, &a, &[1.0, 4.0]).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,N,alpha_t_d2,scaled_residual");
    let cols: Vec<f64> = lines[2].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 4.0);
    assert_eq!(cols[1], 3.0);
    assert_eq!(cols[2], 1.5);
    assert_eq!(cols[3], (3.0 - 1.5) / 2.0);
}

proptest! {
    #[test]
    fn counting_function_is_a_nondecreasing_step(
        entries in prop::collection::vec((0.0f64..50.0, 1u32..5), 0..60),
        ts in prop::collection::vec(0.0f64..50.0, 2..20),
    ) {
        let total: u64 = entries.iter().filter(|e| e.0 > 0.0).map(|e| e.1 as u64).sum();
        let n = CountingFunction::new(entries.clone(), 50.0).unwrap();
        prop_assert_eq!(n.total(), total);
        let mut ts = ts;
        ts.sort_by(f64::total_cmp);
        let counts: Vec<u64> = ts.iter().map(|&t| n.count(t).unwrap()).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        for &(lambda, mult) in &entries {
            if lambda > 0.0 {
                // right-continuous with a jump of at least this multiplicity
                let below = n.count(lambda - lambda * 1e-12).unwrap_or(0);
                prop_assert!(n.count(lambda).unwrap() >= below + mult as u64);
            }
        }
        let direct = |t: f64| entries.iter().filter(|e| e.0 > 0.0 && e.0 <= t).map(|e| e.1 as u64).sum::<u64>();
        for &t in &ts {
            prop_assert_eq!(n.count(t).unwrap(), direct(t));
        }
    }
}
