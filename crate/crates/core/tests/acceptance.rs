//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing output capture) before asserting.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use itekit::billiards::{
    angle_from_normal, exterior_correspondence, flow, hamiltonian, measure_estimate, reflect_refract,
    trace_branching, Ham, PhasePoint, Tolerances,
};
use itekit::ellipticity::check_point;
use itekit::geometry::{BoundaryParam, Domain, MatrixField, Medium, ScalarField};
use itekit::radial_ite::{
    assemble_spectrum, count_rectangle, dirichlet_neumann_oracle, real_roots, ITESpectrum, RadialProblem, Rect,
    DEFAULT_STRIP_HEIGHT,
};
use itekit::smatrix::{eigenphase_flow, partial_wave, scan_unit_crossings};
use itekit::special_functions::{bessel_j, bessel_j_deriv, bessel_y, bessel_y_deriv, Order};
use itekit::weyl::{alpha_closed, main_term_ratio, remainder_fit, WeylConstant};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: String) {
    let line = format!("criterion {criterion:>2}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn degenerate() -> RadialProblem {
    RadialProblem::new(2, 1.0, 2.0, 2.0).unwrap()
}

fn sigma_plus() -> RadialProblem {
    RadialProblem::new(2, 1.0, 2.0, 1.0).unwrap()
}

fn alpha(p: &RadialProblem) -> WeylConstant {
    alpha_closed(PI * p.radius * p.radius, p.a, p.n, 2).unwrap()
}

/// Spectra at `t = 2500`, shared between criteria.
fn degenerate_2500() -> &'static (ITESpectrum, Duration) {
    static S: OnceLock<(ITESpectrum, Duration)> = OnceLock::new();
    S.get_or_init(|| {
        let start = Instant::now();
        let s = assemble_spectrum(&degenerate(), 2500.0, false, DEFAULT_STRIP_HEIGHT).unwrap();
        (s, start.elapsed())
    })
}

fn sigma_plus_2500() -> &'static ITESpectrum {
    static S: OnceLock<ITESpectrum> = OnceLock::new();
    S.get_or_init(|| assemble_spectrum(&sigma_plus(), 2500.0, true, DEFAULT_STRIP_HEIGHT).unwrap())
}

#[test]
fn criterion_01_degenerate_spectrum_equals_oracle() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let s = pool.install(|| assemble_spectrum(&degenerate(), 400.0, false, DEFAULT_STRIP_HEIGHT)).unwrap();
    let elapsed = start.elapsed();
    let o = dirichlet_neumann_oracle(2, 1.0, 400.0).unwrap();
    let (a, b) = (s.real_values_expanded(), o.real_values_expanded());
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs() / y).fold(0.0, f64::max);
    let ok = a.len() == b.len() && worst <= 1e-8 && elapsed.as_secs_f64() < 60.0;
    report(
        1,
        ok,
        format!("{} vs {} eigenvalues with multiplicity, max rel err {worst:.2e}, {:.2} s on one thread", a.len(), b.len(), elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_02_weyl_main_term_degenerate() {
    let p = degenerate();
    let al = alpha(&p);
    let (s, elapsed) = degenerate_2500();
    let n = s.counting().unwrap();
    let r400 = main_term_ratio(&n, &al, 400.0).unwrap();
    let r2500 = main_term_ratio(&n, &al, 2500.0).unwrap();
    let ok = al.alpha == 0.5
        && (0.97..=1.03).contains(&r400)
        && (0.99..=1.01).contains(&r2500)
        && elapsed.as_secs_f64() < 300.0;
    report(
        2,
        ok,
        format!(
            "alpha = {}, N(400)/(alpha t) = {r400:.4}, N(2500)/(alpha t) = {r2500:.4}, N(2500) = {}, {:.2} s",
            al.alpha,
            n.count(2500.0).unwrap(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_03_weyl_main_term_sigma_plus() {
    let p = sigma_plus();
    let al = alpha(&p);
    let s = sigma_plus_2500();
    let n = s.counting().unwrap();
    let ratio = main_term_ratio(&n, &al, 2500.0).unwrap();
    let fit = remainder_fit(&n, &al, (400.0, 2500.0)).unwrap();
    let shorter = remainder_fit(&n, &al, (400.0, 1600.0)).unwrap();
    let change = (fit.c_hat - shorter.c_hat).abs() / fit.c_hat.abs().max(shorter.c_hat.abs());
    let ok = (al.alpha - 0.375).abs() < 1e-15
        && (ratio - 1.0).abs() <= 0.05
        && fit.c_hat.is_finite()
        && change < 0.1
        && s.region.strip_height == Some(5.0);
    report(
        3,
        ok,
        format!(
            "alpha = {}, N(2500)/(alpha t) = {ratio:.4}, C_hat[400,2500] = {:.4} (at t = {:.1}), C_hat[400,1600] = {:.4}, searched |Im k| <= {}",
            al.alpha,
            fit.c_hat,
            fit.t_at_sup,
            shorter.c_hat,
            s.region.strip_height.unwrap()
        ),
    );
}

#[test]
fn criterion_04_remainder_bound_is_stable() {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, p, s) in [
        ("degenerate", degenerate(), &degenerate_2500().0),
        ("a=2,n=1", sigma_plus(), sigma_plus_2500()),
    ] {
        let n = s.counting().unwrap();
        let c1600 = remainder_fit(&n, &alpha(&p), (100.0, 1600.0)).unwrap().c_hat;
        let c2500 = remainder_fit(&n, &alpha(&p), (100.0, 2500.0)).unwrap().c_hat;
        let change = (c2500 - c1600).abs() / c1600.abs().max(c2500.abs());
        ok &= change < 0.1;
        lines.push(format!("{name}: C_hat {c1600:.4} -> {c2500:.4} ({:.1}%)", 100.0 * change));
    }
    report(4, ok, lines.join(", "));
}

#[test]
fn criterion_05_negative_spectrum() {
    let mut plus = assemble_spectrum(&sigma_plus(), 2500.0, false, DEFAULT_STRIP_HEIGHT).unwrap();
    plus.add_negative(0.0);
    let plus_count = plus.entries.iter().filter(|e| e.lambda.re < 0.0).count();

    let minus_problem = RadialProblem::new(2, 1.0, 2.0, 0.4).unwrap();
    let mut minus = assemble_spectrum(&minus_problem, 2500.0, false, DEFAULT_STRIP_HEIGHT).unwrap();
    minus.add_negative(0.0);
    let nm = minus.counting_negative().unwrap();
    let ratios: Vec<(f64, f64)> = (1..=25)
        .map(|i| {
            let t = 100.0 * i as f64;
            (t, nm.count(t).unwrap() as f64 / t)
        })
        .collect();
    let early = ratios.iter().filter(|(t, _)| *t <= 1000.0).map(|r| r.1).fold(0.0, f64::max);
    let late = ratios.iter().filter(|(t, _)| *t > 1000.0).map(|r| r.1).fold(0.0, f64::max);
    // bounded: no growth of N⁻(t)/t once past the first tenth of the range
    let ok = plus_count == 0 && nm.total() > 0 && late <= 1.1 * early;
    report(
        5,
        ok,
        format!(
            "a=2,n=1: {plus_count} negative roots for kappa <= 50; a=2,n=0.4: N-(2500) = {}, max N-/t over [100,1000] = {early:.4}, over (1000,2500] = {late:.4}",
            nm.total()
        ),
    );
}

#[test]
fn criterion_06_snell_and_total_internal_reflection() {
    let m = Medium::isotropic(2, 1.0, 3.0);
    let disk = Domain::disk(1.0).unwrap();
    let at = |ham, angle: f64| {
        PhasePoint::normalized(ham, &m, DVector::from_row_slice(&[1.0, 0.0]), &DVector::from_row_slice(&[angle.cos(), angle.sin()]))
            .unwrap()
    };
    let b = reflect_refract(&at(Ham::H1, PI / 3.0), &m, &disk, 1e-6).unwrap();
    let refracted = angle_from_normal(b.refracted.as_ref().unwrap(), &m, &disk).unwrap();
    // bisect the h₂ incidence angle at which refraction disappears
    let (mut lo, mut hi) = (0.0, PI / 2.0 - 1e-3);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if reflect_refract(&at(Ham::H2, mid), &m, &disk, 1e-12).unwrap().refracted.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let threshold = 0.5 * (lo + hi);
    let expected = (1.0 / 3f64.sqrt()).asin();
    let ok = (refracted - 30.0).abs() < 1e-10 && (threshold - expected).abs() < 1e-9;
    report(
        6,
        ok,
        format!("60 deg refracts to {refracted:.12} deg; critical angle {threshold:.12} rad vs arcsin(1/sqrt 3) = {expected:.12}"),
    );
}

#[test]
fn criterion_07_strongly_periodic_closure() {
    let m = Medium::isotropic(2, 1.0, 3.0);
    let disk = Domain::disk(1.0).unwrap();
    let start = Instant::now();
    let init = PhasePoint::normalized(
        Ham::H1,
        &m,
        DVector::from_row_slice(&[1.0, 0.0]),
        &DVector::from_row_slice(&[-(PI / 3.0).cos(), (PI / 3.0).sin()]),
    )
    .unwrap();
    let tol = Tolerances::default();
    let tree = trace_branching(&init, 20, &m, &disk, &tol).unwrap();
    let ext = exterior_correspondence(&tree, tol.dedup_tol);
    let elapsed = start.elapsed();
    let h1 = tree.distinct.iter().filter(|s| s.ham == Ham::H1).count();
    let (kept, rays) = ext.as_ref().map(|e| (e.kept.len(), e.rays.len())).unwrap_or((0, 0));
    let ok = tree.strongly_periodic
        && tree.distinct.len() == 12
        && h1 == 6
        && tree.closure_residual < 1e-9
        && kept == 6
        && rays == 12
        && elapsed.as_secs_f64() < 1.0;
    report(
        7,
        ok,
        format!(
            "{} distinct segments ({h1} h1), closure {:.1e}, exterior {kept} kept + {rays} rays, {:.3} s",
            tree.distinct.len(),
            tree.closure_residual,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_08_unit_crossings_are_transmission_roots() {
    let p = degenerate();
    let (mut crossings, mut mismatch, mut bad, mut modulus) = (0usize, 0.0f64, 0usize, 0.0f64);
    for m in 0..=20 {
        let r = scan_unit_crossings(&p, m, (0.05, 20.0), 400).unwrap();
        bad += r.unmatched_roots.len() + r.crossings.iter().filter(|c| c.matched_root.is_none()).count();
        crossings += r.crossings.len();
        for c in &r.crossings {
            if let Some(k) = c.matched_root {
                mismatch = mismatch.max((k - c.k).abs());
            }
        }
        let f = eigenphase_flow(&p, m, (0.05, 20.0), 400).unwrap();
        for s in &f.samples {
            modulus = modulus.max((s.z.norm() - 1.0).abs());
        }
        for i in 1..=400 {
            let w = partial_wave(&p, m, 0.05 * i as f64).unwrap();
            modulus = modulus.max((w.z.norm() - 1.0).abs());
        }
    }
    let roots: usize = (0..=20).map(|m| real_roots(&p, m, 20.0, 0.0).len()).sum();
    let ok = bad == 0 && crossings == roots && mismatch < 1e-6 && modulus < 1e-10;
    report(
        8,
        ok,
        format!("{crossings} crossings vs {roots} roots for m <= 20, k <= 20, max mismatch {mismatch:.1e}, max ||z|-1| {modulus:.1e}"),
    );
}

fn spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.5..1.5));
    &b * b.transpose() + DMatrix::identity(d, d) * 0.1
}

#[test]
fn criterion_09_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut parts = Vec::new();
    let mut ok = true;

    // Bessel: Wronskian, three-term recurrence, ODE residual
    let mut bessel_fail = 0;
    for _ in 0..1000 {
        let m = rng.random_range(1u32..40);
        let x = rng.random_range(0.5..100.0);
        let o = Order::Cylindrical(m);
        let (j, jp) = (bessel_j(o, x).unwrap(), bessel_j_deriv(o, x).unwrap());
        if let (Ok(y), Ok(yp)) = (bessel_y(m, x), bessel_y_deriv(m, x)) {
            let expected = 2.0 / (PI * x);
            let scale = (j * yp).abs().max((jp * y).abs()).max(expected);
            bessel_fail += ((j * yp - jp * y - expected).abs() > 1e-10 * scale) as usize;
        }
        let lo = bessel_j(Order::Cylindrical(m - 1), x).unwrap();
        let hi = bessel_j(Order::Cylindrical(m + 1), x).unwrap();
        bessel_fail += ((lo + hi - 2.0 * m as f64 / x * j).abs() > 1e-10 * j.abs().max(1.0)) as usize;
        let h = 2e-3;
        let f = |t: f64| bessel_j(o, t).unwrap();
        let second = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        let mf = m as f64;
        let res = x * x * second + x * jp + (x * x - mf * mf) * j;
        bessel_fail += (res.abs() > 1e-8 * (x * x).max(mf * mf)) as usize;
    }
    ok &= bessel_fail == 0;
    parts.push(format!("bessel 3x1000 ({bessel_fail} fail)"));

    // ellipticity: rotating the tangent frame on the sphere changes nothing
    let ball = Domain::ball(1.0).unwrap();
    let mut gauge_fail = 0;
    for _ in 0..1000 {
        let a = spd(&mut rng, 3);
        let medium = Medium::constant(a, rng.random_range(0.2..3.0)).unwrap();
        let f = ball
            .frame_at(BoundaryParam::Sphere { polar: rng.random_range(0.0..PI), azimuth: rng.random_range(0.0..TAU) })
            .unwrap();
        let rot: f64 = rng.random_range(0.0..TAU);
        let (c, s) = (rot.cos(), rot.sin());
        let e1 = &f.tangents[0] * c + &f.tangents[1] * s;
        let e2 = &f.tangents[1] * c - &f.tangents[0] * s;
        let mut g = f.clone();
        g.transfer.set_row(0, &e1.transpose());
        g.transfer.set_row(1, &e2.transpose());
        g.tangents = vec![e1, e2];
        let (p, q) = (check_point(&medium, &f, 3).unwrap(), check_point(&medium, &g, 3).unwrap());
        let same = p.passes() == q.passes()
            && p.sigma == q.sigma
            && (p.c1 - q.c1).abs() < 1e-12 * (1.0 + p.c1.abs())
            && (p.c2 - q.c2).abs() < 1e-10 * (1.0 + p.c2.abs());
        gauge_fail += (!same) as usize;
    }
    ok &= gauge_fail == 0;
    parts.push(format!("gauge 1000 ({gauge_fail} fail)"));

    // Hamiltonian conservation along curved rays
    let variable = Medium::new(
        2,
        MatrixField::IsotropicField(ScalarField::Constant { value: 1.0 }),
        ScalarField::Affine { offset: 3.0, gradient: vec![0.8, -0.5] },
    )
    .unwrap();
    let disk = Domain::disk(1.0).unwrap();
    let tol = Tolerances::default();
    let mut energy = 0.0f64;
    for _ in 0..32 {
        let th: f64 = rng.random_range(0.0..TAU);
        let x = DVector::from_row_slice(&[rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]);
        let mut p = PhasePoint::normalized(Ham::H2, &variable, x, &DVector::from_row_slice(&[th.cos(), th.sin()])).unwrap();
        for _ in 0..3 {
            let f = flow(&p, &variable, &disk, &tol).unwrap();
            energy = energy.max((hamiltonian(Ham::H2, &variable, &f.hit.x, &f.hit.xi) - 1.0).abs());
            p = reflect_refract(&f.hit, &variable, &disk, 1e-6).unwrap().specular;
        }
    }
    ok &= energy <= 1e-8;
    parts.push(format!("energy drift {energy:.1e}"));

    // tangential momentum at random reflection events
    let aniso = Medium::constant(DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]), 2.0).unwrap();
    let ellipse = Domain::ellipse(1.3, 0.8).unwrap();
    let (mut events, mut tangential) = (0usize, 0.0f64);
    while events < 10_000 {
        let th: f64 = rng.random_range(0.0..TAU);
        let mut p =
            PhasePoint::normalized(Ham::H1, &aniso, DVector::from_row_slice(&[0.1, -0.2]), &DVector::from_row_slice(&[th.cos(), th.sin()]))
                .unwrap();
        for _ in 0..500 {
            let Ok(f) = flow(&p, &aniso, &ellipse, &tol) else { break };
            let Ok(b) = reflect_refract(&f.hit, &aniso, &ellipse, 1e-6) else { break };
            let t = &ellipse.frame_at_point(&f.hit.x).unwrap().tangents[0];
            for out in std::iter::once(&b.specular).chain(b.refracted.as_ref()) {
                tangential = tangential.max((&out.xi - &f.hit.xi).dot(t).abs());
            }
            events += 1;
            p = match b.refracted {
                Some(r) if rng.random_bool(0.5) => r,
                _ => b.specular,
            };
        }
    }
    ok &= tangential < 1e-10;
    parts.push(format!("tangential {events} events, max {tangential:.1e}"));

    // argument principle: additive over adjacent rectangles, agrees with real scans
    let p = sigma_plus();
    let mut ap_fail = 0;
    for _ in 0..24 {
        let m = rng.random_range(0u32..6);
        let split = rng.random_range(2.0..9.0);
        let h = rng.random_range(0.5..3.0);
        let a = count_rectangle(&p, m, Rect::new((0.5, split), (-h, h))).unwrap();
        let b = count_rectangle(&p, m, Rect::new((split, 10.0), (-h, h))).unwrap();
        let whole = count_rectangle(&p, m, Rect::new((0.5, 10.0), (-h, h))).unwrap();
        let thin = count_rectangle(&degenerate(), m, Rect::new((0.5, 10.0), (-0.05, 0.05))).unwrap();
        let real = real_roots(&degenerate(), m, 10.0, 0.0).iter().filter(|&&k| k > 0.5).count() as u32;
        ap_fail += (a + b != whole || thin != real) as usize;
    }
    ok &= ap_fail == 0;
    parts.push(format!("argument principle 24 ({ap_fail} fail)"));

    report(9, ok, parts.join(", "));
}

#[test]
fn criterion_10_dead_end_measure() {
    let m = Medium::isotropic(2, 1.0, 3.0);
    let disk = Domain::disk(1.0).unwrap();
    let est = measure_estimate(&m, &disk, 2024, 10_000, 50.0, &Tolerances::default()).unwrap();
    let (lo, hi) = est.dead_end_ci95;
    let ok = est.samples == 10_000 && est.dead_end_fraction < 0.01 && lo <= est.dead_end_fraction && est.dead_end_fraction <= hi;
    report(
        10,
        ok,
        format!(
            "{} samples, dead-end fraction {:.4} (95% CI [{lo:.5}, {hi:.5}]), {} grazing, {} accumulation, tol_graze {:.0e}",
            est.samples, est.dead_end_fraction, est.dead_end_grazing, est.dead_end_accumulation, est.tolerances.tol_graze
        ),
    );
}
