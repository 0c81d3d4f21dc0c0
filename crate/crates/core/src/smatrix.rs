//! Partial-wave transmission scattering by a disk or ball with `A = a · Id`
//! and constant `n`.
//!
//! Outside, `u_m = J_m(kr) + c_m H_m(kr)` with `H_m = J_m + i Y_m`; inside,
//! `v_m = b_m J_m(τkr)`. Matching `u = v`, `∂_r u = a ∂_r v` at `r = R` gives
//!
//! ```text
//! c_m = -d_m / (d_m + i D_m),   D_m = aτ Y_m(kR) J_m'(τkR) - Y_m'(kR) J_m(τkR),
//! ```
//!
//! where `d_m` is the interior transmission determinant. The S-matrix
//! eigenvalue is `z_m = 1 + 2 c_m = (i - q) / (i + q)` with `q = d_m / D_m`
//! real for real `k`, so `|z_m| = 1`, `arg z_m = 2 atan q`, and `z_m = 1`
//! exactly where `d_m` vanishes. Spherical functions replace cylindrical ones
//! in d = 3.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::radial_ite::{real_roots, scaled_determinant, RadialProblem};
use crate::report::fmt17;
use crate::special_functions::{
    bessel_j, bessel_j_deriv, bessel_y, bessel_y_deriv, scaled_j_pair, scaled_spherical_j_pair,
    scaled_spherical_y_pair, scaled_y_pair, spherical_y, spherical_y_deriv, BesselError, Order,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmatrixError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("order {m}: eigenphase could not be tracked near k = {k}")]
    PhaseAmbiguity { m: u32, k: f64 },
    #[error("order {m}: scattering denominator vanishes at k = {k}")]
    SingularDenominator { m: u32, k: f64 },
    #[error(transparent)]
    Bessel(#[from] BesselError),
}

/// One partial wave at real `k > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialWave {
    pub m: u32,
    pub k: f64,
    /// Scattering coefficient `c_m`.
    pub c: Complex64,
    /// `z_m = 1 + 2 c_m`.
    pub z: Complex64,
    /// `δ_m = arg(z_m) / 2 = atan q ∈ (-π/2, π/2]`.
    pub eigenphase: f64,
    /// `q = d_m / D_m`; infinite where `z_m = -1`.
    pub q: f64,
    /// Both `d_m` and `D_m` are tiny relative to their terms.
    pub near_singular: bool,
}

fn j_pair(order: Order, x: f64) -> (f64, f64) {
    let p = match order {
        Order::Cylindrical(m) => scaled_j_pair(m, Complex64::new(x, 0.0)),
        Order::Spherical(l) => scaled_spherical_j_pair(l, Complex64::new(x, 0.0)),
    };
    (p.value.re, p.deriv.re)
}

fn y_pair(order: Order, x: f64) -> (f64, f64) {
    match order {
        Order::Cylindrical(m) => scaled_y_pair(m, x),
        Order::Spherical(l) => scaled_spherical_y_pair(l, x),
    }
}

fn check_k(k: f64) -> Result<(), SmatrixError> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(SmatrixError::InvalidArgument(format!("k must be positive and finite, got {k}")))
    }
}

/// Scaled numerator and denominator at one `k`.
#[derive(Debug, Clone, Copy)]
struct Parts {
    /// `d̃ = d / (P(kR) P(τkR))`.
    d: f64,
    /// `D̃ = D P(kR) / P(τkR)`.
    big_d: f64,
    log_p: f64,
    near_singular: bool,
}

impl Parts {
    /// `q = P(kR)² d̃ / D̃`.
    fn q(&self) -> f64 {
        if self.d == 0.0 {
            0.0
        } else if self.big_d == 0.0 {
            f64::INFINITY.copysign(self.d)
        } else {
            let log_q = 2.0 * self.log_p + self.d.abs().ln() - self.big_d.abs().ln();
            (self.d * self.big_d).signum() * log_q.exp()
        }
    }
}

fn parts(problem: &RadialProblem, m: u32, k: f64) -> Parts {
    let order = problem.order(m);
    let at = problem.a * problem.tau();
    let x = k * problem.radius;
    let (jt, djt) = j_pair(order, problem.tau() * x);
    let (jx, djx) = j_pair(order, x);
    let (yx, dyx) = y_pair(order, x);
    let d = scaled_determinant(problem, m, Complex64::new(k, 0.0)).re;
    let big_d = at * yx * djt - dyx * jt;
    let j_scale = at.max(1.0) * jx.hypot(djx) * jt.hypot(djt);
    let y_scale = at.max(1.0) * yx.hypot(dyx) * jt.hypot(djt);
    Parts {
        d,
        big_d,
        log_p: order.log_prefactor(Complex64::new(x, 0.0)).re,
        near_singular: d.abs() < 1e-10 * j_scale && big_d.abs() < 1e-10 * y_scale,
    }
}

/// `z_m(k)` and the scattering coefficient of order `m`.
pub fn partial_wave(problem: &RadialProblem, m: u32, k: f64) -> Result<PartialWave, SmatrixError> {
    check_k(k)?;
    let p = parts(problem, m, k);
    if p.d == 0.0 && p.big_d == 0.0 {
        return Err(SmatrixError::SingularDenominator { m, k });
    }
    let q = p.q();
    let i = Complex64::new(0.0, 1.0);
    let (c, z) = if q.is_infinite() {
        (Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.0))
    } else {
        let z = (i - q) / (i + q);
        ((z - 1.0) / 2.0, z)
    };
    Ok(PartialWave { m, k, c, z, eigenphase: q.atan(), q, near_singular: p.near_singular })
}

/// Unscaled `d_m + i D_m`, the denominator with `-c_m (d_m + i D_m) = d_m`.
pub fn hankel_denominator(problem: &RadialProblem, m: u32, k: f64) -> Result<Complex64, SmatrixError> {
    check_k(k)?;
    let order = problem.order(m);
    let at = problem.a * problem.tau();
    let x = k * problem.radius;
    let tx = problem.tau() * x;
    let (y, dy) = match order {
        Order::Cylindrical(m) => (bessel_y(m, x)?, bessel_y_deriv(m, x)?),
        Order::Spherical(l) => (spherical_y(l, x)?, spherical_y_deriv(l, x)?),
    };
    let h = Complex64::new(bessel_j(order, x)?, y);
    let dh = Complex64::new(bessel_j_deriv(order, x)?, dy);
    Ok(h * (at * bessel_j_deriv(order, tx)?) - dh * bessel_j(order, tx)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSample {
    pub k: f64,
    pub z: Complex64,
    /// Continuous `arg z_m`, starting in `(-π, π)` at the left end.
    pub phase: f64,
}

/// How the unwrapped phase passes a level `2πj` (where `z_m = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Approach {
    pub k: f64,
    pub level: i64,
    /// Phase at the neighbouring refined samples.
    pub left_phase: f64,
    pub right_phase: f64,
    /// `+1` if the phase increases through the level, `-1` otherwise.
    pub direction: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenphaseFlow {
    pub m: u32,
    pub samples: Vec<PhaseSample>,
    pub approaches: Vec<Approach>,
    /// Zeros of `D_m`, where `z_m = -1` and the phase passes an odd
    /// multiple of `π`.
    pub poles: Vec<f64>,
}

/// Largest change of the unwrapped phase between output samples.
const MAX_PHASE_STEP: f64 = PI / 8.0;

/// Sign changes of `f` between consecutive grid points, each narrowed by
/// bisection to width `tol`. Exact zeros on the grid are bracketed by their
/// neighbours.
fn sign_changes<F: Fn(f64) -> f64>(f: F, grid: &[f64], values: &[f64], tol: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&k, &v) in grid.iter().zip(values) {
        if v == 0.0 {
            continue;
        }
        if let Some((k0, v0)) = last {
            if v0.signum() != v.signum() {
                let (mut lo, mut hi) = (k0, k);
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == v0.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push((lo, hi));
            }
        }
        last = Some((k, v));
    }
    out
}

/// Unwrapped `arg z_m = 2 atan q + 2πN` over `k_range`.
///
/// `N` changes by one at each zero of `D_m`, where `q` passes through
/// infinity, so the phase is tracked through the sign patterns of `d_m` and
/// `D_m` on a grid of at least `grid` steps and no coarser than the real
/// root scan of the interior transmission determinant. Output samples are
/// then refined until neighbours differ by less than `π/8`; narrow
/// resonances near the zeros of `D_m` get many samples.
pub fn eigenphase_flow(problem: &RadialProblem, m: u32, k_range: (f64, f64), grid: usize) -> Result<EigenphaseFlow, SmatrixError> {
    let (k0, k1) = k_range;
    if !(k0 > 0.0 && k1 > k0 && k1.is_finite()) || grid == 0 {
        return Err(SmatrixError::InvalidArgument(format!("need 0 < k0 < k1 and grid ≥ 1, got ({k0}, {k1}), {grid}")));
    }
    let h = ((k1 - k0) / grid as f64).min(problem.scan_step());
    let steps = ((k1 - k0) / h).ceil() as usize;
    let base: Vec<f64> = (0..=steps).map(|i| if i == steps { k1 } else { k0 + i as f64 * h }).collect();
    let at = |k: f64| parts(problem, m, k);
    let values: Vec<Parts> = base.iter().map(|&k| at(k)).collect();

    let tol = 1e-13 * k1;
    let d_values: Vec<f64> = values.iter().map(|p| p.d).collect();
    let big_d_values: Vec<f64> = values.iter().map(|p| p.big_d).collect();
    // (position, jump of N)
    let poles: Vec<(f64, i64)> = sign_changes(|k| at(k).big_d, &base, &big_d_values, tol)
        .into_iter()
        .map(|(lo, hi)| (0.5 * (lo + hi), if at(lo).q() > 0.0 { 1 } else { -1 }))
        .collect();
    let winding_before = |k: f64| poles.iter().filter(|p| p.0 < k).map(|p| p.1).sum::<i64>();
    let phase = |k: f64| -> Result<PhaseSample, SmatrixError> {
        let w = partial_wave(problem, m, k)?;
        Ok(PhaseSample { k, z: w.z, phase: 2.0 * w.eigenphase + TAU * winding_before(k) as f64 })
    };

    let mut samples = vec![phase(k0)?];
    for &target in &base[1..] {
        let mut pending = vec![target];
        while let Some(&kn) = pending.last() {
            let last = *samples.last().unwrap();
            let next = phase(kn)?;
            if (next.phase - last.phase).abs() < MAX_PHASE_STEP {
                samples.push(next);
                pending.pop();
            } else {
                if kn - last.k < 1e-13 * kn.max(1.0) {
                    return Err(SmatrixError::PhaseAmbiguity { m, k: kn });
                }
                pending.push(0.5 * (last.k + kn));
            }
        }
    }

    let mut zeros: Vec<(f64, f64)> = if values[0].d == 0.0 { vec![(k0, k0)] } else { Vec::new() };
    zeros.extend(sign_changes(|k| at(k).d, &base, &d_values, 1e-10));
    let mut approaches = Vec::with_capacity(zeros.len());
    for (lo, hi) in zeros {
        let k = 0.5 * (lo + hi);
        let i = samples.partition_point(|s| s.k <= k);
        let left = samples[i.saturating_sub(1)];
        let right = samples[i.min(samples.len() - 1)];
        approaches.push(Approach {
            k,
            level: winding_before(k),
            left_phase: left.phase,
            right_phase: right.phase,
            direction: if at(hi + 1e-9 * k).q() > at(lo - 1e-9 * k).q() { 1 } else { -1 },
        });
    }
    Ok(EigenphaseFlow { m, samples, approaches, poles: poles.iter().map(|p| p.0).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub k: f64,
    pub level: i64,
    /// Closest real interior transmission root within `1e-6`.
    pub matched_root: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub m: u32,
    pub k_range: (f64, f64),
    pub crossings: Vec<Crossing>,
    /// Real roots of `d_m` in the window with no crossing within `1e-6`.
    pub unmatched_roots: Vec<f64>,
    pub samples: usize,
}

/// Tolerance for pairing crossings with determinant roots.
pub const MATCH_TOL: f64 = 1e-6;

/// Values of `k` in `k_range` where `z_m = 1`, paired with the real roots of
/// the interior transmission determinant of the same order.
pub fn scan_unit_crossings(problem: &RadialProblem, m: u32, k_range: (f64, f64), grid: usize) -> Result<CrossingReport, SmatrixError> {
    let flow = eigenphase_flow(problem, m, k_range, grid)?;
    let roots: Vec<f64> = real_roots(problem, m, k_range.1, 0.0)
        .into_iter()
        .filter(|&r| r >= k_range.0 && r <= k_range.1)
        .collect();
    let nearest = |k: f64| {
        roots
            .iter()
            .copied()
            .min_by(|a, b| (a - k).abs().total_cmp(&(b - k).abs()))
            .filter(|r| (r - k).abs() < MATCH_TOL)
    };
    let crossings: Vec<Crossing> = flow
        .approaches
        .iter()
        .map(|a| Crossing { k: a.k, level: a.level, matched_root: nearest(a.k) })
        .collect();
    let unmatched_roots =
        roots.iter().copied().filter(|r| !crossings.iter().any(|c| (c.k - r).abs() < MATCH_TOL)).collect();
    Ok(CrossingReport { m, k_range, crossings, unmatched_roots, samples: flow.samples.len() })
}

/// CSV with columns `m, k, re_z, im_z, unwrapped_phase`.
pub fn write_csv<W: Write>(mut out: W, flows: &[EigenphaseFlow]) -> io::Result<()> {
    writeln!(out, "m,k,re_z,im_z,unwrapped_phase")?;
    for f in flows {
        for s in &f.samples {
            writeln!(out, "{},{},{},{},{}", f.m, fmt17(s.k), fmt17(s.z.re), fmt17(s.z.im), fmt17(s.phase))?;
        }
    }
    Ok(())
}
