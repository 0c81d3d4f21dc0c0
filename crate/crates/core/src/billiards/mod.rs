//! Branching billiards for the two Hamiltonians
//! `h₁(x, ξ) = |ξ|` and `h₂(x, ξ) = √(ξᵀA(x)ξ / n(x))`.
//!
//! A ray reaching `∂𝒪` splits into a specular branch (same Hamiltonian) and
//! a refracted branch (the other one). Both keep the tangential part of `ξ`
//! and solve `h = 1` for the normal part; the refracted branch is missing
//! when that has no real inward solution.
//!
//! Straight rays are used whenever `A` and `n` are constant. For `h₂` in a
//! variable isotropic medium (`A = a(x) Id`) the flow is integrated with
//! classical RK4 under step control on `|h - 1|`.

mod measure;
mod render;
mod trace;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, GeometryError, Medium};

pub use measure::{measure_estimate, wilson_interval, MeasureEstimate};
pub use render::{segments_json, svg};
pub use trace::{
    exterior_correspondence, periodicity_probe, trace_branching, trace_path, BranchNode, BranchResult, Choice,
    DeadEndReason, ExteriorRay, ExteriorTrajectory, PathClass, PeriodicOrbit, ProbeReport, ProbeRow, TraceResult,
};

/// Phase-space distance below which a path counts as closed.
pub const DEFAULT_TOL_CLOSE: f64 = 1e-9;
/// Endpoint distance below which two segments are the same.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-7;
/// Inter-event time below which an event counts toward accumulation.
pub const DEFAULT_T_MIN: f64 = 1e-6;
pub const DEFAULT_MAX_EVENTS: usize = 10_000;
/// Consecutive short inter-event times that signal accumulation.
pub const ACCUMULATION_RUN: usize = 100;
/// Allowed drift of the Hamiltonian along integrated paths.
pub const ENERGY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BilliardError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("grazing incidence (|cos| = {0:e})")]
    Grazing(f64),
    #[error("phase point has h = {0}, expected 1")]
    NotNormalized(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("step control failed at t = {0}")]
    StepControl(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trajectory is not strongly periodic")]
    NotStronglyPeriodic,
}

/// Which Hamiltonian drives the motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ham {
    #[serde(rename = "h1")]
    H1,
    #[serde(rename = "h2")]
    H2,
}

impl Ham {
    pub fn other(self) -> Ham {
        match self {
            Ham::H1 => Ham::H2,
            Ham::H2 => Ham::H1,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Ham::H1 => 1,
            Ham::H2 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: DVector<f64>,
    pub xi: DVector<f64>,
    pub ham: Ham,
}

impl PhasePoint {
    /// Scales `direction` so that `h = 1` at `x`.
    pub fn normalized(ham: Ham, medium: &Medium, x: DVector<f64>, direction: &DVector<f64>) -> Result<Self, BilliardError> {
        let h = hamiltonian(ham, medium, &x, direction);
        if !(h > 0.0 && h.is_finite()) {
            return Err(BilliardError::InvalidArgument("direction must be nonzero".into()));
        }
        Ok(PhasePoint { xi: direction / h, x, ham })
    }

    /// `√(|Δx|² + |Δξ|²)`.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        ((&self.x - &other.x).norm_squared() + (&self.xi - &other.xi).norm_squared()).sqrt()
    }
}

/// Straight piece or integrated curve between two events.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: DVector<f64>,
    pub end: DVector<f64>,
    pub duration: f64,
    pub ham: Ham,
    /// Momentum on the segment (at its start for curved segments).
    pub xi: DVector<f64>,
    /// Intermediate points of curved segments; empty for straight ones.
    pub polyline: Vec<DVector<f64>>,
}

/// Tolerances shared by the tracers, all reported with results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_graze: f64,
    pub tol_close: f64,
    pub dedup_tol: f64,
    pub t_min: f64,
    pub max_events: usize,
    /// Largest RK4 step for variable media.
    pub dt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_graze: crate::geometry::DEFAULT_TOL_GRAZE,
            tol_close: DEFAULT_TOL_CLOSE,
            dedup_tol: DEFAULT_DEDUP_TOL,
            t_min: DEFAULT_T_MIN,
            max_events: DEFAULT_MAX_EVENTS,
            dt: 1e-2,
        }
    }
}

/// `h₁ = |ξ|`, `h₂ = √(ξᵀAξ / n)`.
pub fn hamiltonian(ham: Ham, medium: &Medium, x: &DVector<f64>, xi: &DVector<f64>) -> f64 {
    match ham {
        Ham::H1 => xi.norm(),
        Ham::H2 => (xi.dot(&(medium.a_at(x) * xi)) / medium.n_at(x)).sqrt(),
    }
}

/// `∂h/∂ξ`: `ξ/|ξ|` or `Aξ / (n h₂)`.
pub fn group_velocity(ham: Ham, medium: &Medium, x: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
    match ham {
        Ham::H1 => xi / xi.norm(),
        Ham::H2 => {
            let h = hamiltonian(Ham::H2, medium, x, xi);
            medium.a_at(x) * xi / (medium.n_at(x) * h)
        }
    }
}

/// Result of flowing to the next boundary hit.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// Phase point at the boundary, still carrying the incoming momentum.
    pub hit: PhasePoint,
    pub segment: Segment,
    /// `|v̂ · ν|` at the hit.
    pub cos_incidence: f64,
    pub grazing: bool,
}

fn on_boundary(domain: &Domain, x: &DVector<f64>) -> bool {
    domain.level(x).abs() < 1e-9
}

fn is_straight(ham: Ham, medium: &Medium) -> bool {
    ham == Ham::H1 || medium.constant_values().is_some()
}

/// Flows `point` to its next boundary hit.
///
/// Straight motion along the group velocity when the active Hamiltonian has
/// constant coefficients; otherwise RK4 with steps of at most `tol.dt`,
/// halved until each step keeps `|h - 1| ≤ 1e-8`, and the boundary located
/// by bisection on the last step.
pub fn flow(point: &PhasePoint, medium: &Medium, domain: &Domain, tol: &Tolerances) -> Result<FlowResult, BilliardError> {
    let h = hamiltonian(point.ham, medium, &point.x, &point.xi);
    if (h - 1.0).abs() > 1e-6 {
        return Err(BilliardError::NotNormalized(h));
    }
    if is_straight(point.ham, medium) {
        let v = group_velocity(point.ham, medium, &point.x, &point.xi);
        let hit = if on_boundary(domain, &point.x) {
            domain.ray_exit_from_boundary(&point.x, &v, tol.tol_graze)?
        } else {
            domain.ray_exit(&point.x, &v, tol.tol_graze)?
        };
        let duration = hit.length / v.norm();
        Ok(FlowResult {
            hit: PhasePoint { x: hit.point.clone(), xi: point.xi.clone(), ham: point.ham },
            segment: Segment {
                start: point.x.clone(),
                end: hit.point,
                duration,
                ham: point.ham,
                xi: point.xi.clone(),
                polyline: Vec::new(),
            },
            cos_incidence: hit.cos_incidence,
            grazing: hit.grazing,
        })
    } else {
        integrate(point, medium, domain, tol)
    }
}

/// `(dx/dt, dξ/dt)` for `h₂` with `A = a(x) Id`: `h₂ = √q |ξ|`, `q = a/n`.
fn h2_field(medium: &Medium, x: &DVector<f64>, xi: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>), BilliardError> {
    let (a, grad_a) = medium
        .isotropic_scalar(x)
        .ok_or_else(|| BilliardError::Unsupported("curved flow needs A = a(x) Id".into()))?;
    let n = medium.n_at(x);
    let grad_q = grad_a / n - medium.grad_n(x) * (a / (n * n));
    let q = a / n;
    let xi2 = xi.norm_squared();
    let h = (q * xi2).sqrt();
    Ok((xi * (q / h), -grad_q * (xi2 / (2.0 * h))))
}

fn rk4_step(
    medium: &Medium,
    x: &DVector<f64>,
    xi: &DVector<f64>,
    dt: f64,
) -> Result<(DVector<f64>, DVector<f64>), BilliardError> {
    let (k1x, k1p) = h2_field(medium, x, xi)?;
    let (k2x, k2p) = h2_field(medium, &(x + &k1x * (dt / 2.0)), &(xi + &k1p * (dt / 2.0)))?;
    let (k3x, k3p) = h2_field(medium, &(x + &k2x * (dt / 2.0)), &(xi + &k2p * (dt / 2.0)))?;
    let (k4x, k4p) = h2_field(medium, &(x + &k3x * dt), &(xi + &k3p * dt))?;
    Ok((
        x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0),
        xi + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0),
    ))
}

fn integrate(point: &PhasePoint, medium: &Medium, domain: &Domain, tol: &Tolerances) -> Result<FlowResult, BilliardError> {
    let energy = |x: &DVector<f64>, xi: &DVector<f64>| (hamiltonian(Ham::H2, medium, x, xi) - 1.0).abs();
    let mut x = point.x.clone();
    let mut xi = point.xi.clone();
    let mut t = 0.0;
    let mut dt = tol.dt;
    let mut polyline = vec![x.clone()];
    let start_on_boundary = on_boundary(domain, &x);
    // A path may only leave through the boundary after it has moved inside.
    let mut inside = !start_on_boundary;
    let max_time = 1e3 * domain.bounding_radius() / tol.dt.max(1e-3);
    loop {
        if t > max_time {
            return Err(BilliardError::StepControl(t));
        }
        let (xn, pn) = rk4_step(medium, &x, &xi, dt)?;
        if energy(&xn, &pn) > 0.5 * ENERGY_TOL {
            dt *= 0.5;
            if dt < 1e-12 {
                return Err(BilliardError::StepControl(t));
            }
            continue;
        }
        let level = domain.level(&xn);
        if level > 0.0 && inside {
            // Bisect the sub-step at which the path meets the boundary.
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let (xm, _) = rk4_step(medium, &x, &xi, mid)?;
                if domain.level(&xm) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            let (xb, pb) = rk4_step(medium, &x, &xi, hi)?;
            t += hi;
            polyline.push(xb.clone());
            let frame = domain.frame_at_point(&xb)?;
            let v = group_velocity(Ham::H2, medium, &xb, &pb);
            let cos = v.dot(&frame.normal).abs() / v.norm();
            return Ok(FlowResult {
                hit: PhasePoint { x: xb.clone(), xi: pb, ham: Ham::H2 },
                segment: Segment {
                    start: point.x.clone(),
                    end: xb,
                    duration: t,
                    ham: Ham::H2,
                    xi: point.xi.clone(),
                    polyline,
                },
                cos_incidence: cos,
                grazing: cos < tol.tol_graze,
            });
        }
        if level < 0.0 {
            inside = true;
        } else if !inside && t > 0.0 {
            return Err(BilliardError::Geometry(GeometryError::NotInterior));
        }
        x = xn;
        xi = pn;
        t += dt;
        polyline.push(x.clone());
        if energy(&x, &xi) < 1e-3 * ENERGY_TOL {
            dt = (dt * 1.5).min(tol.dt);
        }
    }
}

/// Outgoing branches at a boundary event.
#[derive(Debug, Clone, PartialEq)]
pub struct Branches {
    pub specular: PhasePoint,
    pub refracted: Option<PhasePoint>,
}

/// Inward normal component `s` solving `h(ξ_t + s ν) = 1`, if any.
fn inward_normal_component(
    ham: Ham,
    medium: &Medium,
    x: &DVector<f64>,
    xi_t: &DVector<f64>,
    nu: &DVector<f64>,
) -> Option<f64> {
    match ham {
        Ham::H1 => {
            let disc = 1.0 - xi_t.norm_squared();
            (disc >= 0.0).then(|| -disc.sqrt())
        }
        Ham::H2 => {
            // a_νν s² + 2 b s + (ξ_tᵀAξ_t - n) = 0; velocity ∝ A(ξ_t + sν),
            // and its normal part b + a_νν s is negative on the inward root.
            let a = medium.a_at(x);
            let n = medium.n_at(x);
            let ann = nu.dot(&(&a * nu));
            let b = nu.dot(&(&a * xi_t));
            let c = xi_t.dot(&(&a * xi_t)) - n;
            let disc = b * b - ann * c;
            if disc < 0.0 {
                return None;
            }
            // (-b - √D)/a_νν without cancellation when b < 0
            let sq = disc.sqrt();
            Some(if b > 0.0 { (-b - sq) / ann } else { c / (-b + sq) })
        }
    }
}

/// Splits a boundary hit into the specular and refracted branches.
///
/// Both conserve `ξ_t = ξ - (ξ·ν)ν`. The specular branch is the second root
/// of the incident Hamiltonian's equation; for `h₁` (and `h₂` with isotropic
/// `A`) this reverses the normal component of `ξ`.
pub fn reflect_refract(event: &PhasePoint, medium: &Medium, domain: &Domain, tol_graze: f64) -> Result<Branches, BilliardError> {
    let frame = domain.frame_at_point(&event.x)?;
    let nu = &frame.normal;
    let v = group_velocity(event.ham, medium, &event.x, &event.xi);
    let cos = v.dot(nu) / v.norm();
    if cos.abs() < tol_graze {
        return Err(BilliardError::Grazing(cos.abs()));
    }
    if cos < 0.0 {
        return Err(BilliardError::InvalidArgument("event momentum points inward".into()));
    }
    let xi_t = &event.xi - nu * event.xi.dot(nu);
    let branch = |ham: Ham| {
        inward_normal_component(ham, medium, &event.x, &xi_t, nu)
            .map(|s| PhasePoint { x: event.x.clone(), xi: &xi_t + nu * s, ham })
    };
    let specular = branch(event.ham).ok_or(BilliardError::Grazing(0.0))?;
    Ok(Branches { specular, refracted: branch(event.ham.other()) })
}

/// Angle in degrees between the group velocity and the inward normal.
pub fn angle_from_normal(point: &PhasePoint, medium: &Medium, domain: &Domain) -> Result<f64, BilliardError> {
    let frame = domain.frame_at_point(&point.x)?;
    let v = group_velocity(point.ham, medium, &point.x, &point.xi);
    let c = (v.dot(&frame.normal).abs() / v.norm()).min(1.0);
    Ok(c.acos().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specular_h2_is_the_other_root_for_anisotropic_a() {
        use nalgebra::DMatrix;
        let m = Medium::constant(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), 1.0).unwrap();
        let d = Domain::disk(1.0).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        // outgoing direction with positive normal velocity
        let p = PhasePoint::normalized(Ham::H2, &m, x, &DVector::from_vec(vec![1.0, 0.3])).unwrap();
        let b = reflect_refract(&p, &m, &d, 1e-6).unwrap();
        assert!((hamiltonian(Ham::H2, &m, &b.specular.x, &b.specular.xi) - 1.0).abs() < 1e-14);
        assert!((b.specular.xi[1] - p.xi[1]).abs() < 1e-15);
        assert!(group_velocity(Ham::H2, &m, &b.specular.x, &b.specular.xi)[0] < 0.0);
    }
}
