use std::time::Instant;

use itekit::radial_ite::{
    assemble_spectrum, boundary_residual, count_rectangle, determinant, determinant_scale, dirichlet_neumann_oracle,
    multiplicity, negative_scan, real_roots, scaled_determinant, Provenance, RadialProblem, Rect,
    DEFAULT_STRIP_HEIGHT,
};
use itekit::special_functions::{bessel_j, bessel_j_deriv, zeros_of, Order, ZeroKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn degenerate() -> RadialProblem {
    RadialProblem::new(2, 1.0, 2.0, 2.0).unwrap()
}

fn sigma_plus() -> RadialProblem {
    RadialProblem::new(2, 1.0, 2.0, 1.0).unwrap()
}

#[test]
fn degenerate_determinant_factorizes() {
    let p = degenerate();
    for m in [0u32, 1, 3, 7] {
        for k in [0.4, 2.2, 5.9, 13.1] {
            let o = Order::Cylindrical(m);
            let expected = (p.a - 1.0) * bessel_j(o, k).unwrap() * bessel_j_deriv(o, k).unwrap();
            let d = determinant(&p, m, c(k, 0.0)).unwrap();
            assert!((d.re - expected).abs() < 1e-13 * (1.0 + expected.abs()), "m={m} k={k}");
        }
    }
    let d = determinant(&p, 1, c(1.841183781340659, 0.0)).unwrap();
    assert!(d.norm() <= 1e-10);
}

#[test]
fn determinant_rejects_origin() {
    assert!(determinant(&sigma_plus(), 0, c(0.0, 0.0)).is_err());
}

#[test]
fn degenerate_real_roots_for_m0() {
    let roots = real_roots(&degenerate(), 0, 6.0, 0.0);
    // zeros of J_0 below 6 together with those of J_0' = -J_1
    let mut expected = zeros_of(ZeroKind::Value, Order::Cylindrical(0), 6.0).unwrap();
    expected.extend(zeros_of(ZeroKind::Value, Order::Cylindrical(1), 6.0).unwrap());
    expected.sort_by(f64::total_cmp);
    for (r, e) in expected.iter().zip([2.404825557695773, 3.8317059702075125, 5.520078110286311]) {
        assert!((r - e).abs() < 1e-14 * e);
    }
    assert_eq!(roots.len(), expected.len());
    for (r, e) in roots.iter().zip(&expected) {
        assert!((r - e).abs() < 1e-12 * e, "{r} vs {e}");
    }
}

#[test]
fn no_roots_below_first_bessel_zero() {
    // j'_{30,1} ≈ 31.9 and j_{30,1} ≈ 35.9 both exceed k_max = 30
    assert!(real_roots(&degenerate(), 30, 30.0, 0.0).is_empty());
}

#[test]
fn real_roots_have_small_residuals() {
    for p in [sigma_plus(), RadialProblem::new(2, 1.3, 0.5, 3.0).unwrap(), RadialProblem::new(3, 1.0, 2.0, 1.0).unwrap()] {
        for m in [0u32, 2, 5] {
            for k in real_roots(&p, m, 25.0, 0.0) {
                let z = c(k, 0.0);
                let d = scaled_determinant(&p, m, z).norm();
                assert!(d <= 1e-9 * determinant_scale(&p, m, z), "{p:?} m={m} k={k}");
                let r = boundary_residual(&p, m, k);
                assert!(r.trace < 1e-8 && r.conormal < 1e-8, "{r:?}");
            }
        }
    }
}

#[test]
fn rectangle_counts() {
    let p = degenerate();
    assert_eq!(count_rectangle(&p, 1, Rect::new((1.7912, 1.8912), (-0.05, 0.05))).unwrap(), 1);
    assert_eq!(count_rectangle(&p, 1, Rect::new((0.2, 1.0), (-1.0, 1.0))).unwrap(), 0);
    let left = Rect::new((1.0, 3.0), (-2.0, 2.0));
    let right = Rect::new((3.0, 7.0), (-2.0, 2.0));
    let whole = Rect::new((1.0, 7.0), (-2.0, 2.0));
    let sum = count_rectangle(&p, 1, left).unwrap() + count_rectangle(&p, 1, right).unwrap();
    assert_eq!(sum, count_rectangle(&p, 1, whole).unwrap());
    assert_eq!(sum as usize, real_roots(&p, 1, 7.0, 0.0).len());
}

#[test]
fn rectangle_through_a_root_is_perturbed() {
    // left edge exactly on the first zero of J_1'
    let p = degenerate();
    let k0 = real_roots(&p, 1, 2.0, 0.0)[0];
    let n = count_rectangle(&p, 1, Rect::new((k0, 3.0), (-0.5, 0.5))).unwrap();
    assert_eq!(n, 1);
}

#[test]
fn negative_scan_examples() {
    let p = sigma_plus();
    for m in 0..60 {
        assert!(negative_scan(&p, m, 50.0, 0.0).is_empty(), "m={m}");
    }
    let q = RadialProblem::new(2, 1.0, 2.0, 0.4).unwrap();
    let roots = negative_scan(&q, 3, 50.0, 0.0);
    assert_eq!(roots.len(), 1);
    // large-order estimate κ ≈ m √((a² - 1)/(1 - a n)) = 3 √15
    assert!((roots[0] / (3.0 * 15f64.sqrt()) - 1.0).abs() < 0.2, "{}", roots[0]);
}

#[test]
fn oracle_examples() {
    let s = dirichlet_neumann_oracle(2, 1.0, 40.0).unwrap();
    assert!((s.entries[0].lambda.re - 1.841183781340659f64.powi(2)).abs() < 1e-12);
    // 3.3899577…; the quoted 3.390113 is off in the fourth decimal
    assert!((s.entries[0].lambda.re - 3.390113).abs() < 2e-4);
    let first_dirichlet = s.entries.iter().find(|e| e.m == 0).unwrap();
    assert!((first_dirichlet.lambda.re - 5.783186).abs() < 1e-6);
    let big = dirichlet_neumann_oracle(2, 2.0, 10.0).unwrap();
    let small = dirichlet_neumann_oracle(2, 1.0, 40.0).unwrap();
    let (x, y) = (big.real_values_expanded(), small.real_values_expanded());
    assert_eq!(x.len(), y.len());
    for (a, b) in x.iter().zip(&y) {
        assert!((a * 4.0 - b).abs() < 1e-12 * b, "{a} {b}");
    }
}

#[test]
fn degenerate_spectrum_equals_oracle() {
    let start = Instant::now();
    let s = assemble_spectrum(&degenerate(), 400.0, false, DEFAULT_STRIP_HEIGHT).unwrap();
    let o = dirichlet_neumann_oracle(2, 1.0, 400.0).unwrap();
    let (a, b) = (s.real_values_expanded(), o.real_values_expanded());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-8 * y);
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn complex_search_adds_nothing_in_the_degenerate_case() {
    let s = assemble_spectrum(&degenerate(), 100.0, true, DEFAULT_STRIP_HEIGHT).unwrap();
    assert!(s.entries.iter().all(|e| e.provenance == Provenance::RealScan));
    assert_eq!(s.region.strip_height, Some(DEFAULT_STRIP_HEIGHT));
}

#[test]
fn tiny_threshold_gives_empty_spectrum() {
    let s = assemble_spectrum(&degenerate(), 3.0, true, DEFAULT_STRIP_HEIGHT).unwrap();
    assert!(s.entries.is_empty());
}

#[test]
fn sigma_plus_has_complex_pairs() {
    let s = assemble_spectrum(&sigma_plus(), 400.0, true, DEFAULT_STRIP_HEIGHT).unwrap();
    let complex: Vec<_> = s.entries.iter().filter(|e| e.lambda.im != 0.0).collect();
    // conjugate pairs per order
    for e in &complex {
        assert!(complex.iter().any(|f| f.m == e.m && (f.lambda - e.lambda.conj()).norm() < 1e-8 * e.lambda.norm()));
        assert!(scaled_determinant(&sigma_plus(), e.m, e.k).norm() < 1e-9 * determinant_scale(&sigma_plus(), e.m, e.k));
    }
    println!("{} real, {} complex", s.entries.len() - complex.len(), complex.len());
}

#[test]
fn multiplicities() {
    assert_eq!(multiplicity(2, 0), 1);
    assert_eq!(multiplicity(2, 5), 2);
    assert_eq!(multiplicity(3, 0), 1);
    assert_eq!(multiplicity(3, 4), 9);
}

#[test]
fn csv_output() {
    let s = dirichlet_neumann_oracle(2, 1.0, 10.0).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("re_lambda,im_lambda,m,multiplicity,provenance\n"));
    assert_eq!(text.lines().count(), s.entries.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn determinant_is_odd_in_k(m in 0u32..12, re in 0.05f64..20.0, im in -3.0f64..3.0, a in 0.3f64..3.0, n in 0.3f64..3.0) {
        let p = RadialProblem::new(2, 1.0, a, n).unwrap();
        let k = c(re, im);
        let d1 = scaled_determinant(&p, m, k);
        let d2 = scaled_determinant(&p, m, -k);
        // the scaled form is even; the unscaled one carries P(kR)P(τkR) ∝ k^{2m}, so d is odd iff d̃ is
        prop_assert!((d1 + d2).norm() <= 1e-10 * d1.norm().max(1e-300) || (d1 - d2).norm() <= 1e-10 * d1.norm());
    }

    #[test]
    fn rectangle_counts_are_additive(m in 0u32..6, split in 2.0f64..9.0, h in 0.5f64..3.0) {
        let p = sigma_plus();
        let a = count_rectangle(&p, m, Rect::new((0.5, split), (-h, h))).unwrap();
        let b = count_rectangle(&p, m, Rect::new((split, 10.0), (-h, h))).unwrap();
        let whole = count_rectangle(&p, m, Rect::new((0.5, 10.0), (-h, h))).unwrap();
        prop_assert_eq!(a + b, whole);
        let real = real_roots(&p, m, 10.0, 0.0).iter().filter(|&&k| k > 0.5).count() as u32;
        prop_assert!(whole >= real);
    }
}
