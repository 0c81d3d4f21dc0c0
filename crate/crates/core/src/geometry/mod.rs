//! Domains, boundary frames and straight-ray intersection.
//!
//! Planar domains are star-shaped about the origin (disk, axis-aligned
//! ellipse, or a curve `r(θ)` given by a truncated Fourier series); the only
//! three-dimensional domain is the ball centred at the origin.

mod medium;
mod quadrature;

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use medium::{MatrixField, Medium, ProblemConfig, ScalarField};
pub use quadrature::Quadrature;

/// Default cosine threshold below which a boundary hit counts as grazing.
pub const DEFAULT_TOL_GRAZE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is not strictly inside the domain")]
    NotInterior,
    #[error("invalid domain parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate boundary parametrization at s = {0}")]
    DegenerateParametrization(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("quadrature did not reach relative error {target} (last estimate {estimate})")]
    QuadratureNotConverged { target: f64, estimate: f64 },
    #[error("direction must be a nonzero vector of the domain dimension")]
    BadDirection,
    #[error("configuration error: {0}")]
    Config(String),
}

/// Star-shaped curve `r(θ) = c0 + Σ_k (a_k cos kθ + b_k sin kθ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCurve {
    pub c0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierCurve {
    fn radius(&self, theta: f64) -> f64 {
        let mut r = self.c0;
        for (k, (a, b)) in self.harmonics().enumerate() {
            let (s, c) = ((k + 1) as f64 * theta).sin_cos();
            r += a * c + b * s;
        }
        r
    }

    fn radius_deriv(&self, theta: f64) -> f64 {
        let mut dr = 0.0;
        for (k, (a, b)) in self.harmonics().enumerate() {
            let kf = (k + 1) as f64;
            let (s, c) = (kf * theta).sin_cos();
            dr += kf * (b * c - a * s);
        }
        dr
    }

    fn harmonics(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.cos.len().max(self.sin.len());
        (0..n).map(|k| (self.cos.get(k).copied().unwrap_or(0.0), self.sin.get(k).copied().unwrap_or(0.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum Boundary {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Fourier(FourierCurve),
    Ball { radius: f64 },
}

/// Boundary parameter: curve parameter `s ∈ [0, 2π)` in the plane, polar and
/// azimuthal angles on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryParam {
    Curve(f64),
    Sphere { polar: f64, azimuth: f64 },
}

/// Orthonormal frame at a boundary point. `transfer` has rows
/// `e_1, …, e_{d-1}, ν`, so `y = C (x - x⁰)` are the local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFrame {
    pub point: DVector<f64>,
    pub normal: DVector<f64>,
    pub tangents: Vec<DVector<f64>>,
    pub transfer: DMatrix<f64>,
}

impl BoundaryFrame {
    fn new(point: DVector<f64>, normal: DVector<f64>, tangents: Vec<DVector<f64>>) -> Self {
        let d = point.len();
        let mut transfer = DMatrix::zeros(d, d);
        for (i, e) in tangents.iter().chain(std::iter::once(&normal)).enumerate() {
            transfer.set_row(i, &e.transpose());
        }
        BoundaryFrame { point, normal, tangents, transfer }
    }
}

/// First boundary intersection of a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayHit {
    pub point: DVector<f64>,
    pub length: f64,
    /// `|v · ν|` at the hit point.
    pub cos_incidence: f64,
    pub grazing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    dimension: usize,
    boundary: Boundary,
}

impl Domain {
    pub fn new(dimension: usize, boundary: Boundary) -> Result<Self, GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidParameter(msg.to_string()));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match (&boundary, dimension) {
            (Boundary::Ball { radius }, 3) => {
                if !positive(*radius) {
                    return bad("ball radius must be positive");
                }
            }
            (Boundary::Ball { .. }, _) => return bad("a ball needs dimension 3"),
            (_, 3) => return Err(GeometryError::Unsupported("only the ball is supported in dimension 3".into())),
            (_, d) if d != 2 => return bad("dimension must be 2 or 3"),
            (Boundary::Disk { radius }, _) => {
                if !positive(*radius) {
                    return bad("disk radius must be positive");
                }
            }
            (Boundary::Ellipse { a, b }, _) => {
                if !positive(*a) || !positive(*b) {
                    return bad("ellipse semi-axes must be positive");
                }
            }
            (Boundary::Fourier(curve), _) => {
                let min_r = (0..4096).map(|i| curve.radius(TAU * i as f64 / 4096.0)).fold(f64::INFINITY, f64::min);
                if !(min_r > 0.0) || !curve.c0.is_finite() {
                    return bad("Fourier radius must stay positive (star-shaped curve)");
                }
            }
        }
        Ok(Domain { dimension, boundary })
    }

    pub fn disk(radius: f64) -> Result<Self, GeometryError> {
        Self::new(2, Boundary::Disk { radius })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::new(2, Boundary::Ellipse { a, b })
    }

    pub fn fourier(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(2, Boundary::Fourier(FourierCurve { c0, cos, sin }))
    }

    pub fn ball(radius: f64) -> Result<Self, GeometryError> {
        Self::new(3, Boundary::Ball { radius })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    /// Radius of the disk or ball; `None` for other shapes.
    pub fn round_radius(&self) -> Option<f64> {
        match self.boundary {
            Boundary::Disk { radius } | Boundary::Ball { radius } => Some(radius),
            _ => None,
        }
    }

    /// Area (d = 2) or volume (d = 3).
    pub fn volume(&self) -> f64 {
        match &self.boundary {
            Boundary::Disk { radius } => std::f64::consts::PI * radius * radius,
            Boundary::Ellipse { a, b } => std::f64::consts::PI * a * b,
            Boundary::Ball { radius } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
            Boundary::Fourier(c) => {
                // ½∫ r² dθ is a trigonometric polynomial: the trapezoid rule is exact.
                let n = 4 * (c.cos.len().max(c.sin.len()) + 2);
                let h = TAU / n as f64;
                0.5 * h * (0..n).map(|i| c.radius(h * i as f64).powi(2)).sum::<f64>()
            }
        }
    }

    /// Radius of a centred ball containing the domain.
    pub fn bounding_radius(&self) -> f64 {
        match &self.boundary {
            Boundary::Disk { radius } | Boundary::Ball { radius } => *radius,
            Boundary::Ellipse { a, b } => a.max(*b),
            // |r(θ)| ≤ c0 + Σ |a_k| + |b_k|
            Boundary::Fourier(c) => c.c0 + c.harmonics().map(|(a, b)| a.abs() + b.abs()).sum::<f64>(),
        }
    }

    /// Distance from the origin to the boundary along the direction of `x`.
    pub fn radius_toward(&self, x: &DVector<f64>) -> f64 {
        match &self.boundary {
            Boundary::Disk { radius } | Boundary::Ball { radius } => *radius,
            Boundary::Ellipse { a, b } => {
                let theta = x[1].atan2(x[0]);
                let (s, c) = theta.sin_cos();
                a * b / ((b * c).powi(2) + (a * s).powi(2)).sqrt()
            }
            Boundary::Fourier(curve) => curve.radius(x[1].atan2(x[0])),
        }
    }

    /// Signed boundary function: negative inside, zero on the boundary.
    pub fn level(&self, x: &DVector<f64>) -> f64 {
        match &self.boundary {
            Boundary::Disk { radius } | Boundary::Ball { radius } => x.norm_squared() / (radius * radius) - 1.0,
            Boundary::Ellipse { a, b } => (x[0] / a).powi(2) + (x[1] / b).powi(2) - 1.0,
            Boundary::Fourier(_) => x.norm() / self.radius_toward(x) - 1.0,
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dimension && self.level(x) < 0.0
    }

    pub fn boundary_point(&self, param: BoundaryParam) -> Result<DVector<f64>, GeometryError> {
        Ok(self.frame_at(param)?.point)
    }

    /// Parameter of a boundary point (or of the radial projection of any
    /// nonzero point onto the boundary).
    pub fn param_of(&self, x: &DVector<f64>) -> BoundaryParam {
        match &self.boundary {
            Boundary::Ball { .. } => {
                let r = x.norm();
                BoundaryParam::Sphere { polar: (x[2] / r).clamp(-1.0, 1.0).acos(), azimuth: x[1].atan2(x[0]) }
            }
            Boundary::Ellipse { a, b } => BoundaryParam::Curve((x[1] / b).atan2(x[0] / a)),
            _ => BoundaryParam::Curve(x[1].atan2(x[0])),
        }
    }

    /// `count` boundary parameters, uniform in the curve parameter for planar
    /// domains and on a Fibonacci lattice for the sphere.
    pub fn sample_boundary(&self, count: usize) -> Vec<BoundaryParam> {
        match self.boundary {
            Boundary::Ball { .. } => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                        BoundaryParam::Sphere { polar: z.acos(), azimuth: (golden * i as f64).rem_euclid(TAU) }
                    })
                    .collect()
            }
            _ => (0..count).map(|i| BoundaryParam::Curve(TAU * i as f64 / count as f64)).collect(),
        }
    }

    /// Deterministic interior sample: concentric shells of boundary samples.
    pub fn sample_interior(&self, count: usize) -> Vec<DVector<f64>> {
        let shells = ((count as f64).sqrt().ceil() as usize).max(1);
        let per_shell = count.div_ceil(shells).max(1);
        let mut out = Vec::with_capacity(count);
        'outer: for j in 0..shells {
            let frac = (j as f64 + 0.5) / shells as f64;
            for p in self.sample_boundary(per_shell) {
                if out.len() == count {
                    break 'outer;
                }
                let b = self.frame_at(p).expect("sampled parameters are regular").point;
                out.push(b * frac);
            }
        }
        out
    }

    /// Boundary frame at a parameter.
    ///
    /// Planar curves use `e_1 = γ'(s)/|γ'(s)|` (counterclockwise) and the
    /// outward normal. On the sphere the tangents are the coordinate vectors
    /// `e_1 = ∂/∂polar`, `e_2 = ∂/∂azimuth` (normalised); written as
    /// `(cos θ cos φ, cos θ sin φ, -sin θ)` and `(-sin φ, cos φ, 0)` they
    /// stay well defined at the poles.
    pub fn frame_at(&self, param: BoundaryParam) -> Result<BoundaryFrame, GeometryError> {
        match (&self.boundary, param) {
            (Boundary::Ball { radius }, BoundaryParam::Sphere { polar, azimuth }) => {
                if !polar.is_finite() || !azimuth.is_finite() {
                    return Err(GeometryError::DegenerateParametrization(polar));
                }
                let (st, ct) = polar.sin_cos();
                let (sp, cp) = azimuth.sin_cos();
                let normal = DVector::from_vec(vec![st * cp, st * sp, ct]);
                let e1 = DVector::from_vec(vec![ct * cp, ct * sp, -st]);
                let e2 = DVector::from_vec(vec![-sp, cp, 0.0]);
                Ok(BoundaryFrame::new(&normal * *radius, normal, vec![e1, e2]))
            }
            (Boundary::Ball { .. }, BoundaryParam::Curve(_)) | (_, BoundaryParam::Sphere { .. }) => {
                Err(GeometryError::InvalidParameter("boundary parameter does not match the domain dimension".into()))
            }
            (boundary, BoundaryParam::Curve(s)) => {
                if !s.is_finite() {
                    return Err(GeometryError::DegenerateParametrization(s));
                }
                let (sn, cs) = s.sin_cos();
                let (point, tangent) = match boundary {
                    Boundary::Disk { radius } => ([radius * cs, radius * sn], [-radius * sn, radius * cs]),
                    Boundary::Ellipse { a, b } => ([a * cs, b * sn], [-a * sn, b * cs]),
                    Boundary::Fourier(curve) => {
                        let r = curve.radius(s);
                        let dr = curve.radius_deriv(s);
                        ([r * cs, r * sn], [dr * cs - r * sn, dr * sn + r * cs])
                    }
                    Boundary::Ball { .. } => unreachable!(),
                };
                let speed = tangent[0].hypot(tangent[1]);
                if !(speed > 1e-14) {
                    return Err(GeometryError::DegenerateParametrization(s));
                }
                let e1 = DVector::from_vec(vec![tangent[0] / speed, tangent[1] / speed]);
                let normal = DVector::from_vec(vec![e1[1], -e1[0]]);
                Ok(BoundaryFrame::new(DVector::from_vec(point.to_vec()), normal, vec![e1]))
            }
        }
    }

    /// Frame at (the radial projection of) a boundary point.
    pub fn frame_at_point(&self, x: &DVector<f64>) -> Result<BoundaryFrame, GeometryError> {
        self.frame_at(self.param_of(x))
    }

    /// First boundary hit of `x + t v`, `t > 0`, from a strictly interior point.
    pub fn ray_exit(&self, x: &DVector<f64>, v: &DVector<f64>, tol_graze: f64) -> Result<RayHit, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::NotInterior);
        }
        self.exit(x, v, tol_graze, false)
    }

    /// Next boundary hit of `x + t v` leaving a boundary point `x` along an
    /// inward direction `v`.
    pub fn ray_exit_from_boundary(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        tol_graze: f64,
    ) -> Result<RayHit, GeometryError> {
        if x.len() != self.dimension || self.level(x).abs() > 1e-8 {
            return Err(GeometryError::InvalidParameter("start point is not on the boundary".into()));
        }
        self.exit(x, v, tol_graze, true)
    }

    fn exit(&self, x: &DVector<f64>, v: &DVector<f64>, tol_graze: f64, on_boundary: bool) -> Result<RayHit, GeometryError> {
        let vn = v.norm();
        if v.len() != self.dimension || !(vn > 0.0) || !vn.is_finite() {
            return Err(GeometryError::BadDirection);
        }
        let v = v / vn;
        let length = match &self.boundary {
            Boundary::Disk { radius } | Boundary::Ball { radius } => {
                let w = vec![1.0 / (radius * radius); self.dimension];
                quadric_exit(x, &v, &w)
            }
            Boundary::Ellipse { a, b } => quadric_exit(x, &v, &[1.0 / (a * a), 1.0 / (b * b)]),
            Boundary::Fourier(curve) => self.march_exit(curve, x, &v, on_boundary),
        };
        let Some(length) = length else {
            // From a boundary point heading outward there is no further hit.
            return Err(GeometryError::NotInterior);
        };
        let point = x + &v * length;
        let frame = self.frame_at_point(&point)?;
        let cos_incidence = v.dot(&frame.normal).abs();
        Ok(RayHit { point, length, cos_incidence, grazing: cos_incidence < tol_graze })
    }

    fn march_exit(&self, curve: &FourierCurve, x: &DVector<f64>, v: &DVector<f64>, on_boundary: bool) -> Option<f64> {
        let r_min = (0..512).map(|i| curve.radius(TAU * i as f64 / 512.0)).fold(f64::INFINITY, f64::min);
        let r_max = (0..512).map(|i| curve.radius(TAU * i as f64 / 512.0)).fold(0.0, f64::max);
        let g = |t: f64| self.level(&(x + v * t));
        let step = r_min / 256.0;
        let mut t_prev = if on_boundary { 1e-9 * r_min } else { 0.0 };
        let mut g_prev = g(t_prev);
        if g_prev >= 0.0 {
            return None;
        }
        let t_end = 2.0 * r_max + 2.0 * x.norm() + step;
        while t_prev < t_end {
            let t = t_prev + step;
            let gt = g(t);
            if gt >= 0.0 {
                return Some(crate::special_functions::bisect(g, t_prev, t, g_prev));
            }
            t_prev = t;
            g_prev = gt;
        }
        None
    }

    /// `∫_𝒪 f dx` by a polar-map tensor Gauss–Legendre rule, doubling the
    /// order until two successive levels agree within `target_rel_err`.
    pub fn interior_quadrature<F>(&self, f: F, target_rel_err: f64) -> Result<Quadrature, GeometryError>
    where
        F: Fn(&DVector<f64>) -> f64,
    {
        quadrature::integrate(self, f, target_rel_err)
    }
}

/// Largest root of `(x + t v)ᵀ W (x + t v) = 1` for diagonal `W`; this is the
/// forward exit both from interior points and from boundary points moving
/// inward.
fn quadric_exit(x: &DVector<f64>, v: &DVector<f64>, w: &[f64]) -> Option<f64> {
    let mut qa = 0.0;
    let mut qb = 0.0;
    let mut qc = -1.0;
    for i in 0..x.len() {
        qa += w[i] * v[i] * v[i];
        qb += w[i] * x[i] * v[i];
        qc += w[i] * x[i] * x[i];
    }
    let disc = qb * qb - qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Stable pair of roots of qa t² + 2 qb t + qc.
    let q = -(qb + qb.signum() * sq);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / qa, qc / q) };
    let t = r1.max(r2);
    (t > 0.0).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v2(x: f64, y: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y])
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(Domain::disk(0.0).is_err());
        assert!(Domain::new(3, Boundary::Disk { radius: 1.0 }).is_err());
        assert!(Domain::fourier(0.5, vec![0.6], vec![]).is_err());
        assert!(Domain::fourier(1.0, vec![0.2], vec![0.1]).is_ok());
    }

    #[test]
    fn fourier_curve_with_constant_radius_is_the_disk() {
        let f = Domain::fourier(1.5, vec![], vec![]).unwrap();
        let d = Domain::disk(1.5).unwrap();
        assert!((f.volume() - d.volume()).abs() < 1e-13);
        let a = f.frame_at(BoundaryParam::Curve(0.7)).unwrap();
        let b = d.frame_at(BoundaryParam::Curve(0.7)).unwrap();
        assert!((a.transfer - b.transfer).norm() < 1e-14);
        let x = v2(0.2, -0.3);
        let v = v2(0.6, 0.8);
        let ha = f.ray_exit(&x, &v, DEFAULT_TOL_GRAZE).unwrap();
        let hb = d.ray_exit(&x, &v, DEFAULT_TOL_GRAZE).unwrap();
        assert!((ha.length - hb.length).abs() < 1e-11);
    }

    #[test]
    fn exit_from_boundary_crosses_the_disk() {
        let d = Domain::disk(1.0).unwrap();
        let x = v2(1.0, 0.0);
        let h = d.ray_exit_from_boundary(&x, &v2(-1.0, 0.0), DEFAULT_TOL_GRAZE).unwrap();
        assert!((h.length - 2.0).abs() < 1e-15);
        assert!(d.ray_exit_from_boundary(&x, &v2(1.0, 0.0), DEFAULT_TOL_GRAZE).is_err());
    }

    #[test]
    fn sphere_frame_at_pole_is_regular() {
        let b = Domain::ball(2.0).unwrap();
        let f = b.frame_at(BoundaryParam::Sphere { polar: 0.0, azimuth: 0.3 }).unwrap();
        let ctc = f.transfer.transpose() * &f.transfer;
        assert!((ctc - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((f.point[2] - 2.0).abs() < 1e-15);
    }
}
