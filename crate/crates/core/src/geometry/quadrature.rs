use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DVector;

use super::{Boundary, Domain, GeometryError};

/// Result of [`Domain::interior_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error_estimate: f64,
    /// Gauss–Legendre nodes per axis at the accepted level.
    pub order: usize,
}

/// Nodes and weights mapped to `[a, b]`.
fn rule(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("positive order"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    gl.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
}

/// Returns `(∫f, ∫|f|)` at one tensor order.
fn level<F: Fn(&DVector<f64>) -> f64>(domain: &Domain, f: &F, n: usize) -> (f64, f64) {
    let unit = rule(n, 0.0, 1.0);
    let mut sum = 0.0;
    let mut abs = 0.0;
    match domain.boundary() {
        Boundary::Ball { radius } => {
            for &(mu, wm) in &rule(n, -1.0, 1.0) {
                let st = (1.0 - mu * mu).sqrt();
                for &(phi, wp) in &rule(n, 0.0, TAU) {
                    let dir = [st * phi.cos(), st * phi.sin(), mu];
                    for &(u, wu) in &unit {
                        let rho = radius * u;
                        let x = DVector::from_vec(dir.iter().map(|c| c * rho).collect());
                        let w = wm * wp * wu * radius * rho * rho;
                        let v = f(&x);
                        sum += w * v;
                        abs += w * v.abs();
                    }
                }
            }
        }
        _ => {
            for &(theta, wt) in &rule(n, 0.0, TAU) {
                let dir = DVector::from_vec(vec![theta.cos(), theta.sin()]);
                let r = domain.radius_toward(&dir);
                for &(u, wu) in &unit {
                    let rho = r * u;
                    let x = &dir * rho;
                    let w = wt * wu * r * rho;
                    let v = f(&x);
                    sum += w * v;
                    abs += w * v.abs();
                }
            }
        }
    }
    (sum, abs)
}

pub(super) fn integrate<F>(domain: &Domain, f: F, target_rel_err: f64) -> Result<Quadrature, GeometryError>
where
    F: Fn(&DVector<f64>) -> f64,
{
    if !(target_rel_err > 0.0) {
        return Err(GeometryError::InvalidParameter("target relative error must be positive".into()));
    }
    let max_order = if domain.dimension() == 3 { 128 } else { 512 };
    let mut n = 4;
    let (mut prev, _) = level(domain, &f, n);
    let mut estimate = f64::INFINITY;
    while n < max_order {
        n *= 2;
        let (value, abs) = level(domain, &f, n);
        estimate = (value - prev).abs();
        // Relative to ∫|f| so that integrands with zero mean still terminate.
        if estimate <= target_rel_err * abs.max(f64::MIN_POSITIVE) {
            return Ok(Quadrature { value, error_estimate: estimate, order: n });
        }
        prev = value;
    }
    Err(GeometryError::QuadratureNotConverged { target: target_rel_err, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volume_and_moment() {
        let b = Domain::ball(1.0).unwrap();
        let q = b.interior_quadrature(|_| 1.0, 1e-12).unwrap();
        assert!((q.value - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
        // ∫ |x|² over the unit ball = 4π/5
        let q = b.interior_quadrature(|x| x.norm_squared(), 1e-12).unwrap();
        assert!((q.value - 0.8 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn odd_integrand_terminates() {
        let d = Domain::disk(1.0).unwrap();
        let q = d.interior_quadrature(|x| x[0] * x[1] * x[1], 1e-10).unwrap();
        assert!(q.value.abs() < 1e-14);
    }
}
