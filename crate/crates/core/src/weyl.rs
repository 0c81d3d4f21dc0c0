//! Weyl constants and counting-function analytics.
//!
//! `α = ω_d / (2π)^d ∫_𝒪 (1 + n^{d/2} / √det A) dx`, with `ω_2 = π` and
//! `ω_3 = 4π/3`, is the coefficient of the leading term of `N(t) ~ α t^{d/2}`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Domain, GeometryError, Medium};
use crate::report::fmt17;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("t = {t} lies beyond the computed spectrum (t_max = {t_max})")]
    BeyondData { t: f64, t_max: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylConstant {
    pub alpha: f64,
    pub dimension: usize,
    pub method: AlphaMethod,
    /// Absolute error estimate; zero for the closed form.
    pub error_estimate: f64,
}

/// Volume of the unit ball in `R^d`.
pub fn omega(d: usize) -> f64 {
    match d {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("dimension must be 2 or 3"),
    }
}

fn check_dimension(d: usize) -> Result<(), WeylError> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(WeylError::InvalidArgument(format!("dimension must be 2 or 3, got {d}")))
    }
}

/// Closed form for `A = a · Id` and constant `n`:
/// `α = ω_d / (2π)^d · V · (1 + (n/a)^{d/2})`.
pub fn alpha_closed(volume: f64, a: f64, n: f64, d: usize) -> Result<WeylConstant, WeylError> {
    check_dimension(d)?;
    if !(volume > 0.0 && a > 0.0 && n > 0.0) {
        return Err(WeylError::InvalidArgument("volume, a and n must be positive".into()));
    }
    let df = d as f64;
    let alpha = omega(d) / (2.0 * PI).powi(d as i32) * volume * (1.0 + (n / a).powf(df / 2.0));
    Ok(WeylConstant { alpha, dimension: d, method: AlphaMethod::ClosedForm, error_estimate: 0.0 })
}

/// `α` by quadrature of `1 + n^{d/2} / √det A` over the domain.
pub fn alpha_quadrature(medium: &Medium, domain: &Domain, target_rel_err: f64) -> Result<WeylConstant, WeylError> {
    let d = domain.dimension();
    check_dimension(d)?;
    if medium.dimension() != d {
        return Err(WeylError::InvalidArgument("medium and domain dimensions differ".into()));
    }
    let half_d = d as f64 / 2.0;
    let density = |x: &DVector<f64>| 1.0 + medium.n_at(x).powf(half_d) / medium.a_at(x).determinant().sqrt();
    let q = domain.interior_quadrature(density, target_rel_err)?;
    let c = omega(d) / (2.0 * PI).powi(d as i32);
    Ok(WeylConstant {
        alpha: c * q.value,
        dimension: d,
        method: AlphaMethod::Quadrature,
        error_estimate: c * q.error_estimate,
    })
}

/// Right-continuous step function `N(t) = Σ_{0 < λ ≤ t} multiplicity` over
/// a spectrum known completely up to `t_max`.
///
/// `λ = 0` entries are dropped: queries start strictly above zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingFunction {
    levels: Vec<f64>,
    cumulative: Vec<u64>,
    t_max: f64,
}

impl CountingFunction {
    /// `entries` are `(|λ|, multiplicity)`; order does not matter.
    pub fn new(entries: impl IntoIterator<Item = (f64, u32)>, t_max: f64) -> Result<Self, WeylError> {
        if !(t_max > 0.0) {
            return Err(WeylError::InvalidArgument("t_max must be positive".into()));
        }
        let mut items: Vec<(f64, u32)> = Vec::new();
        for (lambda, mult) in entries {
            if !(lambda >= 0.0) || !lambda.is_finite() {
                return Err(WeylError::InvalidArgument(format!("eigenvalue magnitude {lambda} is not a finite nonnegative number")));
            }
            if mult == 0 {
                return Err(WeylError::InvalidArgument("multiplicity must be positive".into()));
            }
            if lambda > 0.0 && lambda <= t_max {
                items.push((lambda, mult));
            }
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels = Vec::with_capacity(items.len());
        let mut cumulative = Vec::with_capacity(items.len());
        let mut total = 0u64;
        for (lambda, mult) in items {
            total += mult as u64;
            if levels.last() == Some(&lambda) {
                *cumulative.last_mut().unwrap() = total;
            } else {
                levels.push(lambda);
                cumulative.push(total);
            }
        }
        Ok(CountingFunction { levels, cumulative, t_max })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Distinct jump locations, ascending.
    pub fn jumps(&self) -> &[f64] {
        &self.levels
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    pub fn count(&self, t: f64) -> Result<u64, WeylError> {
        if t > self.t_max {
            return Err(WeylError::BeyondData { t, t_max: self.t_max });
        }
        if !(t >= 0.0) {
            return Err(WeylError::InvalidArgument(format!("t = {t} must be nonnegative")));
        }
        let idx = self.levels.partition_point(|&l| l <= t);
        Ok(if idx == 0 { 0 } else { self.cumulative[idx - 1] })
    }
}

/// `N(t) / (α t^{d/2})`.
pub fn main_term_ratio(n: &CountingFunction, alpha: &WeylConstant, t: f64) -> Result<f64, WeylError> {
    if !(t > 0.0) {
        return Err(WeylError::InvalidArgument("t must be positive".into()));
    }
    let count = n.count(t)?;
    Ok(count as f64 / (alpha.alpha * t.powf(alpha.dimension as f64 / 2.0)))
}

/// One row of a counting-function table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylRow {
    pub t: f64,
    pub count: u64,
    pub main_term: f64,
    /// `(N(t) - α t^{d/2}) / t^{(d-1)/2}`.
    pub scaled_residual: f64,
}

fn row(n: &CountingFunction, alpha: &WeylConstant, t: f64) -> Result<WeylRow, WeylError> {
    let d = alpha.dimension as f64;
    let count = n.count(t)?;
    let main_term = alpha.alpha * t.powf(d / 2.0);
    Ok(WeylRow { t, count, main_term, scaled_residual: (count as f64 - main_term) / t.powf((d - 1.0) / 2.0) })
}

/// Rows at the given thresholds.
pub fn table(n: &CountingFunction, alpha: &WeylConstant, ts: &[f64]) -> Result<Vec<WeylRow>, WeylError> {
    ts.iter().map(|&t| row(n, alpha, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderFit {
    pub c_hat: f64,
    pub t_at_sup: f64,
    pub window: (f64, f64),
    /// Scaled residual at `t₁`, at every jump inside the window, and at `t₂`.
    pub profile: Vec<WeylRow>,
}

/// `sup_{t ∈ [t₁, t₂]} (N(t) - α t^{d/2}) / t^{(d-1)/2}`.
///
/// Between jumps `N` is constant and the scaled residual decreases in `t`,
/// so the supremum is attained at `t₁` or at a jump.
pub fn remainder_fit(n: &CountingFunction, alpha: &WeylConstant, window: (f64, f64)) -> Result<RemainderFit, WeylError> {
    let (t1, t2) = window;
    if !(t1 > 0.0 && t2 > t1) {
        return Err(WeylError::InvalidArgument(format!("window [{t1}, {t2}] must satisfy 0 < t1 < t2")));
    }
    if t2 > n.t_max() {
        return Err(WeylError::BeyondData { t: t2, t_max: n.t_max() });
    }
    let mut ts = vec![t1];
    ts.extend(n.jumps().iter().copied().filter(|&l| l > t1 && l <= t2));
    if *ts.last().unwrap() < t2 {
        ts.push(t2);
    }
    let profile = table(n, alpha, &ts)?;
    let best = profile
        .iter()
        .max_by(|a, b| a.scaled_residual.total_cmp(&b.scaled_residual))
        .expect("profile is nonempty");
    Ok(RemainderFit { c_hat: best.scaled_residual, t_at_sup: best.t, window, profile })
}

/// CSV with columns `t, N, alpha_t_d2, scaled_residual`.
pub fn write_csv<W: Write>(mut out: W, rows: &[WeylRow]) -> io::Result<()> {
    writeln!(out, "t,N,alpha_t_d2,scaled_residual")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", fmt17(r.t), r.count, fmt17(r.main_term), fmt17(r.scaled_residual))?;
    }
    Ok(())
}
