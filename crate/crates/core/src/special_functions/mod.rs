//! Bessel-family special functions used by the radial solver and the
//! partial-wave scattering code.
//!
//! Everything here is pure and reentrant. Evaluation strategy for the
//! cylindrical functions:
//!
//! * power series when `|z|^2 / 4 <= max(m + 1, 1)` (terms decrease from the
//!   first one, so there is no cancellation to speak of);
//! * Miller's backward recurrence otherwise, normalised with the
//!   generating-function identity `exp(∓iz) = J_0 + 2 Σ (∓i)^k J_k`;
//! * for real arguments with `x >= max(25, m^2 / 2)` the Hankel asymptotic
//!   expansion, which also supplies `Y_0`, `Y_1` at large `x`.
//!
//! Besides plain values the module exposes *scaled* evaluations. The scaled
//! cylindrical function is `J̃_m(z) = J_m(z) / P_m(z)` with
//! `P_m(z) = (z/2)^m / m!`; it is entire, equals 1 at the origin, and never
//! underflows in the parameter ranges the solver visits. Since `P_m` has no
//! zeros off the origin, root locations and winding numbers of determinants
//! built from scaled functions match the unscaled ones.

mod cylindrical;
mod modified;
mod spherical;
mod zeros;

use num_complex::Complex64;
use thiserror::Error;

pub use cylindrical::{hankel1, scaled_j_pair, scaled_y_pair};
pub use modified::scaled_i_pair;
pub use spherical::{scaled_spherical_j_pair, scaled_spherical_y_pair, spherical_hankel1, spherical_y, spherical_y_deriv};
pub use zeros::{zeros_of, ZeroKind};
pub(crate) use zeros::bisect;

/// Scan step used when bracketing zeros: zeros of `J_m` and `J_m'` are more
/// than `π` apart, so a quarter of that never holds two of them.
pub const ZERO_SCAN_STEP: f64 = std::f64::consts::FRAC_PI_4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("invalid argument x = {x}: {reason}")]
    InvalidArgument { x: f64, reason: &'static str },
    #[error("value of order {order} at x = {x} is outside the representable range")]
    OutOfRange { order: u32, x: f64 },
}

/// Order of a Bessel-type function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    /// Integer-order cylindrical function `J_m`, `Y_m`, `I_m`.
    Cylindrical(u32),
    /// Spherical function `j_l`, `y_l`, `i_l`.
    Spherical(u32),
}

impl Order {
    /// Cylindrical order from a signed index, together with the sign picked
    /// up by `J_{-m} = (-1)^m J_m`.
    pub fn cylindrical_signed(m: i64) -> (Order, f64) {
        let abs = m.unsigned_abs() as u32;
        let sign = if m < 0 && abs % 2 == 1 { -1.0 } else { 1.0 };
        (Order::Cylindrical(abs), sign)
    }

    pub fn index(self) -> u32 {
        match self {
            Order::Cylindrical(m) | Order::Spherical(m) => m,
        }
    }

    /// `ln P(z)`: the logarithm of the small-argument prefactor removed by the
    /// scaled evaluations (`(z/2)^m / m!` or `z^l / (2l+1)!!`).
    pub fn log_prefactor(self, z: Complex64) -> Complex64 {
        match self {
            Order::Cylindrical(m) => {
                if m == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                (z / 2.0).ln() * m as f64 - ln_factorial(m)
            }
            Order::Spherical(l) => {
                if l == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                z.ln() * l as f64 - ln_double_factorial_odd(l)
            }
        }
    }
}

/// Value and derivative of a scaled function at one argument. Both carry the
/// same prefactor, so ratios and sign patterns are those of the unscaled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPair {
    pub value: Complex64,
    pub deriv: Complex64,
}

/// `ln m!`.
pub fn ln_factorial(m: u32) -> f64 {
    if m <= 170 {
        let mut p = 1.0f64;
        for k in 2..=m {
            p *= k as f64;
        }
        p.ln()
    } else {
        // Stirling with three correction terms; relative error < 1e-16 here.
        let x = m as f64 + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3))
            + 1.0 / (1260.0 * x.powi(5))
    }
}

/// `ln (2l+1)!!`.
fn ln_double_factorial_odd(l: u32) -> f64 {
    ln_factorial(2 * l + 1) - l as f64 * std::f64::consts::LN_2 - ln_factorial(l)
}

fn check_argument(x: f64) -> Result<(), BesselError> {
    if !x.is_finite() {
        return Err(BesselError::InvalidArgument { x, reason: "not finite" });
    }
    if x < 0.0 {
        return Err(BesselError::InvalidArgument { x, reason: "negative argument" });
    }
    Ok(())
}

fn check_positive(x: f64) -> Result<(), BesselError> {
    check_argument(x)?;
    if x == 0.0 {
        return Err(BesselError::InvalidArgument { x, reason: "argument must be positive" });
    }
    Ok(())
}

/// `value * exp(log_factor)`, reporting overflow and underflow of nonzero
/// values as out-of-range.
fn apply_log_factor(order: u32, x: f64, value: f64, log_factor: f64) -> Result<f64, BesselError> {
    if value == 0.0 {
        return Ok(0.0);
    }
    let log_mag = value.abs().ln() + log_factor;
    if !log_mag.is_finite() || log_mag > 709.0 || log_mag < -708.0 {
        return Err(BesselError::OutOfRange { order, x });
    }
    if log_factor.abs() > 600.0 {
        let half = (0.5 * log_factor).exp();
        return Ok(value * half * half);
    }
    Ok(value * log_factor.exp())
}

fn log_p(order: Order, x: f64) -> f64 {
    order.log_prefactor(Complex64::new(x, 0.0)).re
}

/// `J_m(x)` or `j_l(x)` for `x >= 0`.
pub fn bessel_j(order: Order, x: f64) -> Result<f64, BesselError> {
    check_argument(x)?;
    match order {
        Order::Cylindrical(m) => cylindrical::j_real(m, x),
        Order::Spherical(l) => {
            if x == 0.0 {
                return Ok(if l == 0 { 1.0 } else { 0.0 });
            }
            let pair = scaled_spherical_j_pair(l, Complex64::new(x, 0.0));
            apply_log_factor(l, x, pair.value.re, log_p(order, x))
        }
    }
}

/// `J_m(x)` for a signed order, via `J_{-m} = (-1)^m J_m`.
pub fn bessel_j_signed(m: i64, x: f64) -> Result<f64, BesselError> {
    let (order, sign) = Order::cylindrical_signed(m);
    Ok(sign * bessel_j(order, x)?)
}

/// `J_m'(x)` (`J_0' = -J_1`, `J_m' = (J_{m-1} - J_{m+1}) / 2`) or `j_l'(x)`.
pub fn bessel_j_deriv(order: Order, x: f64) -> Result<f64, BesselError> {
    check_argument(x)?;
    match order {
        Order::Cylindrical(0) => Ok(-cylindrical::j_real(1, x)?),
        Order::Cylindrical(m) => {
            let lo = cylindrical::j_real(m - 1, x)?;
            let hi = cylindrical::j_real(m + 1, x)?;
            Ok(0.5 * (lo - hi))
        }
        Order::Spherical(l) => {
            if x == 0.0 {
                return Ok(if l == 1 { 1.0 / 3.0 } else { 0.0 });
            }
            let pair = scaled_spherical_j_pair(l, Complex64::new(x, 0.0));
            apply_log_factor(l, x, pair.deriv.re, log_p(order, x))
        }
    }
}

/// Bessel function of the second kind `Y_m(x)`, `x > 0`.
pub fn bessel_y(m: u32, x: f64) -> Result<f64, BesselError> {
    check_positive(x)?;
    let (y, _) = scaled_y_pair(m, x);
    apply_log_factor(m, x, y, -log_p(Order::Cylindrical(m), x))
}

/// `Y_m'(x)`, `x > 0`.
pub fn bessel_y_deriv(m: u32, x: f64) -> Result<f64, BesselError> {
    check_positive(x)?;
    let (_, yp) = scaled_y_pair(m, x);
    apply_log_factor(m, x, yp, -log_p(Order::Cylindrical(m), x))
}

/// Modified Bessel function `I_m(x)`, `x >= 0`.
pub fn bessel_i(m: u32, x: f64) -> Result<f64, BesselError> {
    check_argument(x)?;
    if x == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    let pair = scaled_i_pair(Order::Cylindrical(m), x);
    apply_log_factor(m, x, pair.0, log_p(Order::Cylindrical(m), x) + x)
}

/// `I_m'(x)`, `x > 0`.
pub fn bessel_i_deriv(m: u32, x: f64) -> Result<f64, BesselError> {
    check_positive(x)?;
    let pair = scaled_i_pair(Order::Cylindrical(m), x);
    apply_log_factor(m, x, pair.1, log_p(Order::Cylindrical(m), x) + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_prefactor_matches_direct_power() {
        let z = Complex64::new(1.7, 0.4);
        let direct = (z / 2.0).powu(5) / 120.0;
        let via_log = Order::Cylindrical(5).log_prefactor(z).exp();
        assert!((direct - via_log).norm() < 1e-14 * direct.norm());
        let sph = z.powu(3) / 105.0;
        assert!((Order::Spherical(3).log_prefactor(z).exp() - sph).norm() < 1e-14 * sph.norm());
    }

    #[test]
    fn ln_factorial_branches_agree() {
        // Stirling branch continues the exact product branch smoothly.
        let exact: f64 = (2..=171u32).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(171) - exact).abs() < 1e-10);
    }

    #[test]
    fn signed_order_reduction() {
        let (o, s) = Order::cylindrical_signed(-3);
        assert_eq!(o, Order::Cylindrical(3));
        assert_eq!(s, -1.0);
        let (o, s) = Order::cylindrical_signed(-4);
        assert_eq!(o, Order::Cylindrical(4));
        assert_eq!(s, 1.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_j(Order::Cylindrical(0), -1.0).is_err());
        assert!(bessel_j(Order::Cylindrical(0), f64::NAN).is_err());
        assert!(bessel_y(0, 0.0).is_err());
        assert!(bessel_y(0, -2.0).is_err());
    }

    #[test]
    fn out_of_range_is_signalled() {
        assert!(matches!(bessel_j(Order::Cylindrical(200), 1e-6), Err(BesselError::OutOfRange { .. })));
        assert!(matches!(bessel_i(0, 800.0), Err(BesselError::OutOfRange { .. })));
        assert!(matches!(bessel_y(150, 1e-3), Err(BesselError::OutOfRange { .. })));
    }
}
