use num_complex::Complex64;

use super::{scaled_j_pair, scaled_spherical_j_pair, BesselError, Order, ZERO_SCAN_STEP};

/// Which function's zeros to look for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroKind {
    /// Zeros of `J_m` (or `j_l`): Dirichlet disk/ball eigenvalues.
    Value,
    /// Zeros of `J_m'` (or `j_l'`) excluding the origin: Neumann eigenvalues.
    Derivative,
}

/// Sign-faithful evaluation on the positive axis: the scaled functions differ
/// from the true ones by a positive factor.
fn signed_eval(kind: ZeroKind, order: Order, x: f64) -> f64 {
    let z = Complex64::new(x, 0.0);
    let pair = match order {
        Order::Cylindrical(m) => scaled_j_pair(m, z),
        Order::Spherical(l) => scaled_spherical_j_pair(l, z),
    };
    match kind {
        ZeroKind::Value => pair.value.re,
        ZeroKind::Derivative => pair.deriv.re,
    }
}

/// Bisect a sign-change bracket down to adjacent floating-point numbers.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All zeros of `J_m` / `J_m'` (or the spherical analogues) in `(0, upper]`,
/// strictly increasing.
///
/// Brackets come from a scan with step `π/4`; each bracket is refined by
/// bisection to adjacent floating-point values.
pub fn zeros_of(kind: ZeroKind, order: Order, upper: f64) -> Result<Vec<f64>, BesselError> {
    if !(upper.is_finite() && upper > 0.0) {
        return Err(BesselError::InvalidArgument { x: upper, reason: "upper bound must be positive and finite" });
    }
    let f = |x: f64| signed_eval(kind, order, x);
    let mut zeros = Vec::new();
    // Near the origin J_m' ~ x^(m-1) keeps one sign, so a tiny start is safe.
    let mut x_prev = 1e-9f64.min(upper * 1e-3);
    let mut f_prev = f(x_prev);
    for step in 1.. {
        let x = (step as f64 * ZERO_SCAN_STEP).min(upper);
        let fx = f(x);
        if fx == 0.0 {
            zeros.push(x);
        } else if f_prev != 0.0 && (fx > 0.0) != (f_prev > 0.0) {
            zeros.push(bisect(f, x_prev, x, f_prev));
        }
        if x >= upper {
            break;
        }
        x_prev = x;
        f_prev = fx;
    }
    Ok(zeros)
}
