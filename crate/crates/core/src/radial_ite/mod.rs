//! Interior transmission eigenvalues of the disk (d = 2) and ball (d = 3)
//! with `A = a · Id` and constant `n`.
//!
//! Separating variables with `u = c J_m(τkr)`, `v = J_m(kr)`, `τ = √(n/a)`,
//! the matching conditions `u = v`, `a ∂_r u = ∂_r v` at `r = R` have a
//! nontrivial solution iff
//!
//! ```text
//! d_m(k) = aτ J_m(kR) J_m'(τkR) - J_m'(kR) J_m(τkR) = 0,
//! ```
//!
//! and then `λ = k²` (spherical `j_l` in d = 3). `d_m` is odd in `k` and real
//! on the real axis, so roots come in `±k`, `±k̄` quadruples with a single
//! `λ` per `±` pair; only `Re k > 0` is searched. Roots on the imaginary axis,
//! `k = iκ`, are the negative eigenvalues `λ = -κ²` and come from the
//! modified determinant `aτ I_m(κR) I_m'(τκR) - I_m'(κR) I_m(τκR)`.
//!
//! Root finding works with the scaled determinant
//! `d̃_m = d_m / (P_m(kR) P_m(τkR))`, which has the same zeros off the origin
//! and never overflows in the searched region.

mod contour;

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Boundary, GeometryError, ProblemConfig};
use crate::report::fmt17;
use crate::special_functions::{
    bisect, scaled_i_pair, scaled_j_pair, scaled_spherical_j_pair, zeros_of, BesselError, Order, ZeroKind,
};
use crate::weyl::{CountingFunction, WeylError};

pub use contour::Rect;
use contour::{phase_change, to_count, winding};

/// Smallest `k` (and `κ`) scanned; `k = 0` is excluded.
pub const K_LOW: f64 = 1e-3;

/// Default half-height of the strip `|Im k| ≤ h` searched for complex roots.
pub const DEFAULT_STRIP_HEIGHT: f64 = 5.0;

/// Number of times a contour is nudged off a zero before giving up.
pub const MAX_CONTOUR_RETRIES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("determinant of order {m} at k = {k} is outside the representable range")]
    Overflow { m: u32, k: Complex64 },
    #[error("a zero of the order-{m} determinant sits on the contour of {rect:?} after {retries} perturbations")]
    ContourZero { m: u32, rect: Rect, retries: usize },
    #[error("order {m}: {detail}")]
    Inconsistent { m: u32, detail: String },
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

/// Disk or ball of radius `R` with `A = a · Id` and constant `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialProblem {
    pub dimension: usize,
    pub radius: f64,
    pub a: f64,
    pub n: f64,
}

impl RadialProblem {
    pub fn new(dimension: usize, radius: f64, a: f64, n: f64) -> Result<Self, RadialError> {
        if dimension != 2 && dimension != 3 {
            return Err(RadialError::InvalidProblem(format!("dimension must be 2 or 3, got {dimension}")));
        }
        for (name, v) in [("radius", radius), ("a", a), ("n", n)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RadialError::InvalidProblem(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(RadialProblem { dimension, radius, a, n })
    }

    /// Requires a disk or ball boundary and constant isotropic coefficients.
    pub fn from_config(config: &ProblemConfig) -> Result<Self, RadialError> {
        let radius = match (&config.boundary, config.dimension) {
            (Boundary::Disk { radius }, 2) | (Boundary::Ball { radius }, 3) => *radius,
            _ => return Err(RadialError::InvalidProblem("radial spectra need a disk (d = 2) or ball (d = 3)".into())),
        };
        let (a, n) = config
            .medium()?
            .isotropic_constant()
            .ok_or_else(|| RadialError::InvalidProblem("radial spectra need A = a·Id and n constant".into()))?;
        Self::new(config.dimension, radius, a, n)
    }

    pub fn tau(&self) -> f64 {
        (self.n / self.a).sqrt()
    }

    /// `a = n`: the spectrum is the union of Dirichlet and Neumann spectra.
    pub fn is_degenerate(&self) -> bool {
        self.a == self.n
    }

    fn stretch(&self) -> f64 {
        self.tau().max(1.0) * self.radius
    }

    /// Real-axis scan step `π / (4 max(1, τ) R)`.
    pub fn scan_step(&self) -> f64 {
        std::f64::consts::PI / (4.0 * self.stretch())
    }

    /// Width of the argument-principle cells, `π / (2 max(1, τ) R)`.
    pub fn cell_width(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.stretch())
    }

    /// Largest angular index that can contribute a root with `k ≤ √t_max`.
    pub fn m_max(&self, t_max: f64) -> u32 {
        (self.stretch() * t_max.sqrt()).ceil() as u32 + 10
    }

    pub fn order(&self, m: u32) -> Order {
        if self.dimension == 2 {
            Order::Cylindrical(m)
        } else {
            Order::Spherical(m)
        }
    }
}

/// Angular multiplicity: 1 for `m = 0` and 2 otherwise in the plane,
/// `2l + 1` in space.
pub fn multiplicity(dimension: usize, m: u32) -> u32 {
    if dimension == 2 {
        if m == 0 {
            1
        } else {
            2
        }
    } else {
        2 * m + 1
    }
}

fn pair(order: Order, z: Complex64) -> (Complex64, Complex64) {
    let p = match order {
        Order::Cylindrical(m) => scaled_j_pair(m, z),
        Order::Spherical(l) => scaled_spherical_j_pair(l, z),
    };
    (p.value, p.deriv)
}

/// `d̃_m(k) = aτ J̃(kR) J̃'(τkR) - J̃'(kR) J̃(τkR)`.
pub fn scaled_determinant(problem: &RadialProblem, m: u32, k: Complex64) -> Complex64 {
    let order = problem.order(m);
    let tau = problem.tau();
    let (j1, dj1) = pair(order, k * problem.radius);
    let (j2, dj2) = pair(order, k * (tau * problem.radius));
    j1 * dj2 * (problem.a * tau) - dj1 * j2
}

/// Magnitude against which determinant residuals are judged: the product of
/// the amplitudes of the two Bessel pairs.
pub fn determinant_scale(problem: &RadialProblem, m: u32, k: Complex64) -> f64 {
    let order = problem.order(m);
    let tau = problem.tau();
    let (j1, dj1) = pair(order, k * problem.radius);
    let (j2, dj2) = pair(order, k * (tau * problem.radius));
    (problem.a * tau).max(1.0) * j1.norm().hypot(dj1.norm()) * j2.norm().hypot(dj2.norm())
}

/// Unscaled `d_m(k)`; `k ≠ 0`.
pub fn determinant(problem: &RadialProblem, m: u32, k: Complex64) -> Result<Complex64, RadialError> {
    if k.norm() == 0.0 || !k.re.is_finite() || !k.im.is_finite() {
        return Err(RadialError::InvalidProblem(format!("determinant needs finite k ≠ 0, got {k}")));
    }
    let order = problem.order(m);
    let scaled = scaled_determinant(problem, m, k);
    let log_p = order.log_prefactor(k * problem.radius) + order.log_prefactor(k * (problem.tau() * problem.radius));
    if scaled == Complex64::new(0.0, 0.0) {
        return Ok(scaled);
    }
    let log_mag = scaled.norm().ln() + log_p.re;
    if !(-708.0..=709.0).contains(&log_mag) {
        return Err(RadialError::Overflow { m, k });
    }
    Ok(scaled * log_p.exp())
}

fn real_det(problem: &RadialProblem, m: u32, k: f64) -> f64 {
    scaled_determinant(problem, m, Complex64::new(k, 0.0)).re
}

/// Bisection on `[lo, hi]` stopping at width `tol` (or adjacent floats when
/// `tol` is zero).
fn refine<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, f_lo: f64, tol: f64) -> f64 {
    if tol <= 0.0 {
        return bisect(f, lo, hi, f_lo);
    }
    let (mut lo, mut hi, mut f_lo) = (lo, hi, f_lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign-change roots of `d_m` on `(K_LOW, k_max]`, ascending, refined to
/// `tol` (zero means to adjacent floating-point numbers).
pub fn real_roots(problem: &RadialProblem, m: u32, k_max: f64, tol: f64) -> Vec<f64> {
    let f = |k: f64| real_det(problem, m, k);
    let h = problem.scan_step();
    let mut roots = Vec::new();
    if !(k_max > K_LOW) {
        return roots;
    }
    let mut x_prev = K_LOW;
    let mut f_prev = f(x_prev);
    for step in 1.. {
        let x = (K_LOW + step as f64 * h).min(k_max);
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if f_prev != 0.0 && (fx > 0.0) != (f_prev > 0.0) {
            roots.push(refine(f, x_prev, x, f_prev, tol));
        }
        if x >= k_max {
            break;
        }
        x_prev = x;
        f_prev = fx;
    }
    roots
}

/// Longest step taken when tracking the phase of `d̃_m`: a quarter turn of
/// the fastest oscillation `e^{i(1+τ)Rk}`.
fn contour_step(problem: &RadialProblem) -> f64 {
    std::f64::consts::FRAC_PI_4 / ((1.0 + problem.tau()) * problem.radius)
}

/// Number of zeros of `d_m` inside `rect`, with multiplicity.
///
/// If the contour passes through a zero, every edge is pushed outward by
/// `1e-4` of the cell size and the count is retried, up to
/// [`MAX_CONTOUR_RETRIES`] times.
pub fn count_rectangle(problem: &RadialProblem, m: u32, rect: Rect) -> Result<u32, RadialError> {
    if !(rect.width() > 0.0 && rect.height() > 0.0) {
        return Err(RadialError::InvalidProblem(format!("degenerate rectangle {rect:?}")));
    }
    if rect.contains(Complex64::new(0.0, 0.0)) {
        return Err(RadialError::InvalidProblem("rectangle must not contain k = 0".into()));
    }
    let f = |k: Complex64| scaled_determinant(problem, m, k);
    let delta = 1e-4 * rect.width().max(rect.height());
    let step = contour_step(problem);
    for attempt in 0..=MAX_CONTOUR_RETRIES {
        let r = rect.expanded(delta * attempt as f64);
        if let Ok(w) = winding(&f, &r, step) {
            if let Some(c) = to_count(w) {
                return Ok(c);
            }
        }
    }
    Err(RadialError::ContourZero { m, rect, retries: MAX_CONTOUR_RETRIES })
}

/// Roots of the modified determinant `aτ I_m(κR) I_m'(τκR) - I_m'(κR) I_m(τκR)`
/// on `(K_LOW, κ_max]`; each gives `λ = -κ²`.
///
/// Evaluated with `e^{-x} I / P`, which keeps every sign and never
/// overflows. The scan is four times finer than the real-axis scan since
/// the modified functions give no oscillation-based spacing bound.
pub fn negative_scan(problem: &RadialProblem, m: u32, kappa_max: f64, tol: f64) -> Vec<f64> {
    let order = problem.order(m);
    let tau = problem.tau();
    let r = problem.radius;
    let f = |kappa: f64| {
        let (i1, di1) = scaled_i_pair(order, kappa * r);
        let (i2, di2) = scaled_i_pair(order, tau * kappa * r);
        problem.a * tau * i1 * di2 - di1 * i2
    };
    let h = 0.25 * problem.scan_step();
    let mut roots = Vec::new();
    if !(kappa_max > K_LOW) {
        return roots;
    }
    let mut x_prev = K_LOW;
    let mut f_prev = f(x_prev);
    for step in 1.. {
        let x = (K_LOW + step as f64 * h).min(kappa_max);
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if f_prev != 0.0 && (fx > 0.0) != (f_prev > 0.0) {
            roots.push(refine(f, x_prev, x, f_prev, tol));
        }
        if x >= kappa_max {
            break;
        }
        x_prev = x;
        f_prev = fx;
    }
    roots
}

/// How an eigenvalue was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RealScan,
    ArgumentPrincipleCell,
    NegativeScan,
    /// Bessel zeros of the Dirichlet and Neumann problems.
    Oracle,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::RealScan => "real_scan",
            Provenance::ArgumentPrincipleCell => "argument_principle_cell",
            Provenance::NegativeScan => "negative_scan",
            Provenance::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub lambda: Complex64,
    /// Root of the determinant that produced `λ = k²`.
    pub k: Complex64,
    pub m: u32,
    pub multiplicity: u32,
    pub provenance: Provenance,
}

/// Region of the `k` plane that was searched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRegion {
    pub k_low: f64,
    pub k_high: f64,
    /// `|Im k| ≤ strip_height` when complex roots were counted.
    pub strip_height: Option<f64>,
    pub m_max: u32,
    /// `κ` range of the negative-axis scan, when run.
    pub kappa_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ITESpectrum {
    pub problem: RadialProblem,
    pub t_max: f64,
    pub region: SearchRegion,
    /// Sorted by `|λ|`, then by `m`.
    pub entries: Vec<SpectrumEntry>,
}

impl ITESpectrum {
    fn sort(&mut self) {
        self.entries.sort_by(|x, y| {
            x.lambda
                .norm()
                .total_cmp(&y.lambda.norm())
                .then(x.m.cmp(&y.m))
                .then(x.lambda.im.total_cmp(&y.lambda.im))
        });
    }

    /// Appends negative-axis roots `λ = -κ²` with `κ² ≤ t_max`.
    pub fn add_negative(&mut self, tol: f64) {
        let neg = negative_entries(&self.problem, self.t_max, tol);
        self.region.kappa_max = Some(self.t_max.sqrt());
        self.entries.extend(neg);
        self.sort();
    }

    /// Total count with multiplicity.
    pub fn len_with_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity as u64).sum()
    }

    /// `N(t)`: all eigenvalues with `0 < |λ| ≤ t`.
    pub fn counting(&self) -> Result<CountingFunction, RadialError> {
        self.counting_where(|_| true)
    }

    /// `N⁺(t)`: eigenvalues with `Re λ > 0`.
    pub fn counting_positive(&self) -> Result<CountingFunction, RadialError> {
        self.counting_where(|e| e.lambda.re > 0.0)
    }

    /// `N⁻(t)`: eigenvalues with `Re λ < 0`.
    pub fn counting_negative(&self) -> Result<CountingFunction, RadialError> {
        self.counting_where(|e| e.lambda.re < 0.0)
    }

    fn counting_where(&self, keep: impl Fn(&SpectrumEntry) -> bool) -> Result<CountingFunction, RadialError> {
        let items = self.entries.iter().filter(|e| keep(e)).map(|e| (e.lambda.norm(), e.multiplicity));
        Ok(CountingFunction::new(items, self.t_max)?)
    }

    /// Real `λ` expanded by multiplicity, ascending.
    pub fn real_values_expanded(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.lambda.im == 0.0)
            .flat_map(|e| std::iter::repeat_n(e.lambda.re, e.multiplicity as usize))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// CSV with columns `re_lambda, im_lambda, m, multiplicity, provenance`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "re_lambda,im_lambda,m,multiplicity,provenance")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(e.lambda.re),
                fmt17(e.lambda.im),
                e.m,
                e.multiplicity,
                e.provenance.as_str()
            )?;
        }
        Ok(())
    }
}

fn entry(problem: &RadialProblem, m: u32, k: Complex64, provenance: Provenance) -> SpectrumEntry {
    SpectrumEntry { lambda: k * k, k, m, multiplicity: multiplicity(problem.dimension, m), provenance }
}

/// Complex (and any missed real) roots of `d_m` in the cells tiling
/// `[K_LOW, k_high] × [-h, h]`, given the real-scan roots.
fn cell_roots(problem: &RadialProblem, m: u32, k_high: f64, h: f64, real: &[f64]) -> Result<Vec<Complex64>, RadialError> {
    let f = |k: Complex64| scaled_determinant(problem, m, k);
    let step = contour_step(problem);
    let w = problem.cell_width();
    let cells = ((k_high - K_LOW) / w).ceil().max(1.0) as usize;
    let mut xs: Vec<f64> = (0..=cells).map(|i| (K_LOW + i as f64 * w).min(k_high)).collect();
    xs.dedup();

    'strip: for attempt in 0..=MAX_CONTOUR_RETRIES {
        let h = h * (1.0 + 1e-4 * attempt as f64);
        let strip = Rect::new((xs[0], *xs.last().unwrap()), (-h, h));
        // Shared vertical edges, nudged sideways when a root sits on them.
        let mut verticals = Vec::with_capacity(xs.len());
        for (i, x0) in xs.iter().copied().enumerate() {
            let mut got = None;
            for retry in 0..=MAX_CONTOUR_RETRIES {
                // Left and right ends only move outward.
                let sign = if i == 0 { -1.0 } else { 1.0 };
                let x = x0 + sign * 1e-4 * w * retry as f64;
                if let Ok(p) = phase_change(&f, Complex64::new(x, -h), Complex64::new(x, h), step) {
                    got = Some((x, p));
                    break;
                }
            }
            match got {
                Some(v) => verticals.push(v),
                None => return Err(RadialError::ContourZero { m, rect: strip, retries: MAX_CONTOUR_RETRIES }),
            }
        }
        let mut found = Vec::new();
        for i in 0..verticals.len() - 1 {
            let (xl, left) = verticals[i];
            let (xr, right) = verticals[i + 1];
            let bottom = phase_change(&f, Complex64::new(xl, -h), Complex64::new(xr, -h), step);
            let top = phase_change(&f, Complex64::new(xr, h), Complex64::new(xl, h), step);
            let (Ok(bottom), Ok(top)) = (bottom, top) else {
                continue 'strip;
            };
            let w_cell = (bottom + right + top - left) / std::f64::consts::TAU;
            let cell = Rect::new((xl, xr), (-h, h));
            let count = to_count(w_cell).ok_or_else(|| RadialError::Inconsistent {
                m,
                detail: format!("non-integer winding {w_cell} for {cell:?}"),
            })?;
            let known = real.iter().filter(|&&r| r > xl && r <= xr).count() as u32;
            if count < known {
                return Err(RadialError::Inconsistent {
                    m,
                    detail: format!("{known} real roots but winding {count} in {cell:?}"),
                });
            }
            if count > known {
                locate(problem, m, cell, real, count - known, &mut found)?;
            }
        }
        return Ok(found);
    }
    Err(RadialError::ContourZero {
        m,
        rect: Rect::new((K_LOW, k_high), (-h, h)),
        retries: MAX_CONTOUR_RETRIES,
    })
}

/// Splits `rect` until each piece holds one root that the real scan has not
/// already produced, then polishes it with Newton's method.
fn locate(
    problem: &RadialProblem,
    m: u32,
    rect: Rect,
    real: &[f64],
    unknown: u32,
    out: &mut Vec<Complex64>,
) -> Result<(), RadialError> {
    let f = |k: Complex64| scaled_determinant(problem, m, k);
    let size = rect.width().max(rect.height());
    if unknown == 1 {
        if let Some(root) = newton(&f, rect.center(), size) {
            if rect.expanded(1e-9 * size.max(1.0)).contains(root)
                && !real.iter().any(|&r| (Complex64::new(r, 0.0) - root).norm() < 1e-9 * r.max(1.0))
            {
                out.push(root);
                return Ok(());
            }
        }
        if size < 1e-10 * rect.center().norm().max(1.0) {
            out.push(rect.center());
            return Ok(());
        }
    }
    if size < 1e-12 * rect.center().norm().max(1.0) {
        // A cluster of `unknown` roots closer than the resolution.
        out.extend(std::iter::repeat_n(rect.center(), unknown as usize));
        return Ok(());
    }
    // Cut the longer side at an irrational fraction so that the real axis and
    // previously used lines are avoided.
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    for retry in 0..=MAX_CONTOUR_RETRIES {
        let frac = GOLDEN + 0.0137 * retry as f64;
        let (a, b) = if rect.height() > rect.width() {
            let y = rect.im.0 + frac * rect.height();
            (Rect::new(rect.re, (rect.im.0, y)), Rect::new(rect.re, (y, rect.im.1)))
        } else {
            let x = rect.re.0 + frac * rect.width();
            (Rect::new((rect.re.0, x), rect.im), Rect::new((x, rect.re.1), rect.im))
        };
        let step = contour_step(problem);
        let (Ok(wa), Ok(wb)) = (winding(&f, &a, step), winding(&f, &b, step)) else {
            continue;
        };
        let (Some(ca), Some(cb)) = (to_count(wa), to_count(wb)) else {
            continue;
        };
        let known_in = |r: &Rect| real.iter().filter(|&&x| r.contains(Complex64::new(x, 0.0))).count() as u32;
        let (ua, ub) = (ca.saturating_sub(known_in(&a)), cb.saturating_sub(known_in(&b)));
        if ua + ub != unknown {
            continue;
        }
        if ua > 0 {
            locate(problem, m, a, real, ua, out)?;
        }
        if ub > 0 {
            locate(problem, m, b, real, ub, out)?;
        }
        return Ok(());
    }
    Err(RadialError::ContourZero { m, rect, retries: MAX_CONTOUR_RETRIES })
}

/// Newton iteration with a central-difference derivative.
fn newton<F: Fn(Complex64) -> Complex64>(f: &F, start: Complex64, size: f64) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..60 {
        let h = 1e-6 * z.norm().max(1.0);
        let fz = f(z);
        let df = (f(z + h) - f(z - h)) / (2.0 * h);
        if df.norm() == 0.0 || !df.re.is_finite() {
            return None;
        }
        let dz = fz / df;
        z -= dz;
        if dz.norm() > 4.0 * size || !z.re.is_finite() {
            return None;
        }
        if dz.norm() <= 1e-15 * z.norm().max(1.0) {
            return Some(z);
        }
    }
    Some(z)
}

/// All ITEs with `|λ| ≤ t_max` over `m ≤ m_max(t_max)`: real roots from the
/// axis scan and, when `include_complex`, the remaining roots counted by the
/// argument principle in `|Im k| ≤ strip_height`.
///
/// Per-order work runs in parallel on the current rayon pool; the result
/// does not depend on the number of workers.
pub fn assemble_spectrum(
    problem: &RadialProblem,
    t_max: f64,
    include_complex: bool,
    strip_height: f64,
) -> Result<ITESpectrum, RadialError> {
    if !(t_max > 0.0) {
        return Err(RadialError::InvalidProblem("t_max must be positive".into()));
    }
    if include_complex && !(strip_height > 0.0) {
        return Err(RadialError::InvalidProblem("strip height must be positive".into()));
    }
    let k_high = t_max.sqrt();
    let m_max = problem.m_max(t_max);
    let per_m: Result<Vec<Vec<SpectrumEntry>>, RadialError> = (0..=m_max)
        .into_par_iter()
        .map(|m| {
            let real = real_roots(problem, m, k_high, 0.0);
            let mut out: Vec<SpectrumEntry> =
                real.iter().map(|&k| entry(problem, m, Complex64::new(k, 0.0), Provenance::RealScan)).collect();
            if include_complex && k_high > K_LOW {
                for k in cell_roots(problem, m, k_high, strip_height, &real)? {
                    let k = if k.im.abs() <= 1e-12 * k.norm() { Complex64::new(k.re, 0.0) } else { k };
                    if k.norm_sqr() <= t_max {
                        out.push(entry(problem, m, k, Provenance::ArgumentPrincipleCell));
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut spectrum = ITESpectrum {
        problem: *problem,
        t_max,
        region: SearchRegion {
            k_low: K_LOW,
            k_high,
            strip_height: include_complex.then_some(strip_height),
            m_max,
            kappa_max: None,
        },
        entries: per_m?.into_iter().flatten().collect(),
    };
    spectrum.sort();
    Ok(spectrum)
}

fn negative_entries(problem: &RadialProblem, t_max: f64, tol: f64) -> Vec<SpectrumEntry> {
    let kappa_max = t_max.sqrt();
    // Roots move out roughly linearly in m, so stop after a run of empty
    // orders past the oscillatory cutoff.
    let base = problem.m_max(t_max);
    let mut out = Vec::new();
    let mut empty_run = 0;
    let mut m = 0u32;
    while m <= base || empty_run < 10 {
        let roots = negative_scan(problem, m, kappa_max, tol);
        if roots.is_empty() {
            empty_run += 1;
        } else {
            empty_run = 0;
        }
        out.extend(roots.into_iter().map(|kappa| entry(problem, m, Complex64::new(0.0, kappa), Provenance::NegativeScan)));
        m += 1;
    }
    out
}

/// `{(j_{m,s}/R)²} ∪ {(j'_{m,s}/R)²}` with angular multiplicities, from
/// Bessel zeros alone.
pub fn dirichlet_neumann_oracle(dimension: usize, radius: f64, t_max: f64) -> Result<ITESpectrum, RadialError> {
    let problem = RadialProblem::new(dimension, radius, 1.0, 1.0)?;
    if !(t_max > 0.0) {
        return Err(RadialError::InvalidProblem("t_max must be positive".into()));
    }
    let k_high = t_max.sqrt() * radius;
    let mut entries = Vec::new();
    for m in 0u32.. {
        let order = problem.order(m);
        let d = zeros_of(ZeroKind::Value, order, k_high)?;
        let n = zeros_of(ZeroKind::Derivative, order, k_high)?;
        if d.is_empty() && n.is_empty() {
            break;
        }
        for x in d.into_iter().chain(n) {
            entries.push(entry(&problem, m, Complex64::new(x / radius, 0.0), Provenance::Oracle));
        }
    }
    let mut s = ITESpectrum {
        problem,
        t_max,
        region: SearchRegion { k_low: 0.0, k_high: t_max.sqrt(), strip_height: None, m_max: 0, kappa_max: None },
        entries,
    };
    s.region.m_max = s.entries.iter().map(|e| e.m).max().unwrap_or(0);
    s.sort();
    Ok(s)
}

/// Mismatch of the matching conditions at `r = R` for the separated pair
/// built from a real root, relative to the amplitude of `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryResidual {
    /// `|u - v| / amp`.
    pub trace: f64,
    /// `|a ∂_r u - ∂_r v| / (k amp)`.
    pub conormal: f64,
}

/// Reconstructs `v = J_m(kr)`, `u = c J_m(τkr)` with `c` fixed by the better
/// conditioned of the two matching conditions, and reports both mismatches.
pub fn boundary_residual(problem: &RadialProblem, m: u32, k: f64) -> BoundaryResidual {
    let order = problem.order(m);
    let tau = problem.tau();
    let (v, dv) = pair(order, Complex64::new(k * problem.radius, 0.0));
    let (w, dw) = pair(order, Complex64::new(tau * k * problem.radius, 0.0));
    let (v, dv, w, dw) = (v.re, dv.re, w.re, dw.re);
    // In scaled form, with the ratio of prefactors absorbed in c:
    //   u = c w,  ∂_r u / k = c τ w'.
    let c = if w.abs() >= (problem.a * tau * dw).abs() { v / w } else { dv / (problem.a * tau * dw) };
    let amp = v.hypot(dv);
    BoundaryResidual {
        trace: (c * w - v).abs() / amp,
        conormal: (problem.a * c * tau * dw - dv).abs() / amp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_requires_disk_and_constant_isotropic_medium() {
        let cfg = ProblemConfig::from_json(
            r#"{"dimension":2,"boundary":{"type":"ellipse","params":{"a":2,"b":1}},
                "A":{"type":"constant","data":[[2,0],[0,2]]},"n":{"type":"constant","data":1}}"#,
        )
        .unwrap();
        assert!(RadialProblem::from_config(&cfg).is_err());
        let cfg = ProblemConfig::from_json(
            r#"{"dimension":2,"boundary":{"type":"disk","params":{"radius":1.5}},
                "A":{"type":"constant","data":[[2,0],[0,2]]},"n":{"type":"constant","data":1}}"#,
        )
        .unwrap();
        let p = RadialProblem::from_config(&cfg).unwrap();
        assert_eq!((p.radius, p.a, p.n), (1.5, 2.0, 1.0));
    }

    #[test]
    fn unscaled_determinant_matches_direct_products() {
        use crate::special_functions::{bessel_j, bessel_j_deriv};
        let p = RadialProblem::new(2, 1.0, 2.0, 1.0).unwrap();
        let tau = p.tau();
        for m in [0u32, 1, 4] {
            for k in [0.7, 3.3, 9.1] {
                let o = Order::Cylindrical(m);
                let direct = p.a * tau * bessel_j(o, k).unwrap() * bessel_j_deriv(o, tau * k).unwrap()
                    - bessel_j_deriv(o, k).unwrap() * bessel_j(o, tau * k).unwrap();
                let d = determinant(&p, m, Complex64::new(k, 0.0)).unwrap();
                assert!((d.re - direct).abs() < 1e-13 * (1.0 + direct.abs()), "m={m} k={k}");
                assert!(d.im.abs() < 1e-14);
            }
        }
    }
}
