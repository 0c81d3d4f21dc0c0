use std::f64::consts::{FRAC_PI_4, LN_10, PI};

use num_complex::Complex64;

use super::{apply_log_factor, check_positive, log_p, BesselError, Order, ScaledPair};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE: f64 = 1e250;
const LN_RESCALE: f64 = 250.0 * LN_10;

/// Series region: every term after the first is smaller than its
/// predecessor.
fn series_region(m: u32, z: Complex64) -> bool {
    z.norm_sqr() / 4.0 <= (m as f64 + 1.0).max(1.0)
}

/// Hankel-asymptotic region for real arguments.
fn asymptotic_region(m: u32, x: f64) -> bool {
    let mf = m as f64;
    x >= 25.0 && x >= 0.5 * mf * mf
}

/// `Σ_k (-z²/4)^k m! / (k! (m+k)!)`, i.e. `J_m(z) / P_m(z)`.
fn series_scaled(m: u32, z: Complex64) -> Complex64 {
    let w = -z * z / 4.0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..1000u32 {
        term *= w / ((k + 1) as f64 * (m + k + 1) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Result of a backward recurrence: `J = value * exp(-log_shift)`.
#[derive(Debug, Clone, Copy)]
struct Shifted {
    value: Complex64,
    log_shift: f64,
}

/// Miller's backward recurrence for `J_m(z)` and `J_{m+1}(z)`.
///
/// The recurrence runs from an order where `J` is negligible down to zero;
/// the normalisation uses `exp(-iz) = J_0 + 2 Σ (-i)^k J_k` in the upper half
/// plane and the conjugate identity in the lower one, so the normalising sum
/// has the same magnitude as the functions themselves.
fn miller(m: u32, z: Complex64) -> [Shifted; 2] {
    let az = z.norm();
    let mx = (m as f64 + 1.0).max(az);
    let n_start = (mx + (160.0 * mx).sqrt() + 20.0 + 2.0 * z.im.abs()).ceil() as u32;

    let upper = z.im >= 0.0;
    // Powers of ∓i cycle with period four.
    let phases: [Complex64; 4] = if upper {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0)]
    } else {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)]
    };

    let two_over_z = 2.0 / z;
    let mut f_next = Complex64::new(0.0, 0.0);
    let mut f = Complex64::new(1e-30, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut shifts = 0i32;
    let mut stored = [(Complex64::new(0.0, 0.0), 0i32); 2];

    for k in (1..=n_start).rev() {
        if k == m + 1 {
            stored[1] = (f, shifts);
        } else if k == m {
            stored[0] = (f, shifts);
        }
        sum += phases[(k % 4) as usize] * f;
        let f_prev = two_over_z * (k as f64) * f - f_next;
        f_next = f;
        f = f_prev;
        if f.norm() > RESCALE {
            f /= RESCALE;
            f_next /= RESCALE;
            sum /= RESCALE;
            shifts += 1;
        }
    }
    if m == 0 {
        stored[0] = (f, shifts);
    }
    let norm_sum = f + 2.0 * sum;
    let target = if upper {
        (Complex64::new(0.0, -1.0) * z).exp()
    } else {
        (Complex64::new(0.0, 1.0) * z).exp()
    };
    // Keep magnitudes in the log shift: mant * target / norm_sum can underflow
    // long before the scaled value does.
    let log_factor = target.norm().ln() - norm_sum.norm().ln();
    let phase = (target / target.norm()) * (norm_sum.conj() / norm_sum.norm());
    stored.map(|(mant, at)| {
        let mag = mant.norm();
        Shifted {
            value: mant / mag * phase,
            log_shift: (shifts - at) as f64 * LN_RESCALE - mag.ln() - log_factor,
        }
    })
}

/// Hankel asymptotic expansion: `(J_m(x), Y_m(x))` for large real `x`.
fn asymptotic_jy(m: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (m as f64) * (m as f64);
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * eight_x);
        if next.abs() >= prev {
            break;
        }
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        prev = term.abs();
        if prev <= 1e-17 * (p.abs() + q.abs()) {
            break;
        }
    }
    // χ = x - (2m+1)π/4, reduced modulo 2π before subtracting.
    let chi = x - ((2 * m + 1) % 8) as f64 * FRAC_PI_4;
    let (s, c) = chi.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// Real `J_m(x)`, `x >= 0`.
pub(super) fn j_real(m: u32, x: f64) -> Result<f64, BesselError> {
    if x == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    if asymptotic_region(m, x) {
        return Ok(asymptotic_jy(m, x).0);
    }
    let z = Complex64::new(x, 0.0);
    if series_region(m, z) {
        let s = series_scaled(m, z).re;
        return apply_log_factor(m, x, s, log_p(Order::Cylindrical(m), x));
    }
    let [jm, _] = miller(m, z);
    apply_log_factor(m, x, jm.value.re, -jm.log_shift)
}

/// Scaled cylindrical pair `(J̃_m(z), J̃_m'(z))` where
/// `J̃_m = J_m / P_m` and `J̃_m' = J_m' / P_m`, `P_m(z) = (z/2)^m / m!`.
///
/// `z` must be nonzero when `m >= 1` (the derivative has a `m/z` term).
pub fn scaled_j_pair(m: u32, z: Complex64) -> ScaledPair {
    let (jm, jm1) = if series_region(m, z) {
        (series_scaled(m, z), series_scaled(m + 1, z))
    } else {
        let [a, b] = miller(m, z);
        let lp_m = Order::Cylindrical(m).log_prefactor(z);
        let lp_m1 = Order::Cylindrical(m + 1).log_prefactor(z);
        (a.value * (-lp_m - a.log_shift).exp(), b.value * (-lp_m1 - b.log_shift).exp())
    };
    let deriv = if m == 0 {
        -z / 2.0 * jm1
    } else {
        jm * (m as f64) / z - z / (2.0 * (m + 1) as f64) * jm1
    };
    ScaledPair { value: jm, deriv }
}

/// `J_k(x)` for all `k` up to where the sequence is negligible, real `x > 0`.
fn j_sequence(x: f64) -> Vec<f64> {
    let n_start = (x + (160.0 * x.max(1.0)).sqrt() + 20.0).ceil() as usize;
    let n_start = n_start + n_start % 2;
    let mut vals = vec![0.0f64; n_start + 2];
    vals[n_start] = 1e-30;
    for k in (1..=n_start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > RESCALE {
            for v in vals[k - 1..].iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    // J_0 + 2 Σ J_{2k} = 1
    let norm: f64 = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.iter_mut().for_each(|v| *v /= norm);
    vals
}

/// `(Y_0(x), Y_1(x))` for real `x > 0`.
fn y01(x: f64) -> (f64, f64) {
    if x >= 25.0 {
        return (asymptotic_jy(0, x).1, asymptotic_jy(1, x).1);
    }
    let j = j_sequence(x);
    let log_term = (x / 2.0).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / (2.0 * k as f64);
        k += 1;
    }
    let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * s0;
    let y0_prime = 2.0 / PI * (-log_term * j[1] + j[0] / x) - 4.0 / PI * s1;
    (y0, -y0_prime)
}

/// Scaled second-kind pair `(Ỹ_m(x), Ỹ_m'(x))` with `Ỹ = Y_m · P_m`,
/// `Ỹ' = Y_m' · P_m`, real `x > 0`. Bounded as `x → 0` for every order.
pub fn scaled_y_pair(m: u32, x: f64) -> (f64, f64) {
    let (y0, y1) = y01(x);
    if m == 0 {
        return (y0, -y1);
    }
    // Ỹ_{j+1} = j/(j+1) Ỹ_j - x²/(4j(j+1)) Ỹ_{j-1}
    let mut prev = y0;
    let mut cur = y1 * x / 2.0;
    for j in 1..m {
        let jf = j as f64;
        let next = jf / (jf + 1.0) * cur - x * x / (4.0 * jf * (jf + 1.0)) * prev;
        prev = cur;
        cur = next;
    }
    let mf = m as f64;
    (cur, x / (2.0 * mf) * prev - mf / x * cur)
}

/// Hankel function of the first kind `H_m^{(1)}(x) = J_m(x) + i Y_m(x)`.
pub fn hankel1(m: u32, x: f64) -> Result<Complex64, BesselError> {
    check_positive(x)?;
    let j = j_real(m, x)?;
    let y = super::bessel_y(m, x)?;
    Ok(Complex64::new(j, y))
}
