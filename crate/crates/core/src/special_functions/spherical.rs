use std::f64::consts::LN_10;

use num_complex::Complex64;

use super::{apply_log_factor, check_positive, log_p, BesselError, Order, ScaledPair};

const RESCALE: f64 = 1e250;
const LN_RESCALE: f64 = 250.0 * LN_10;

fn series_region(l: u32, z: Complex64) -> bool {
    z.norm_sqr() / 2.0 <= (2 * l + 3) as f64
}

/// `Σ_k (-z²/2)^k (2l+1)!! / (k! (2l+2k+1)!!)`, i.e. `j_l(z) / P_l(z)` with
/// `P_l(z) = z^l / (2l+1)!!`.
fn series_scaled(l: u32, z: Complex64) -> Complex64 {
    let w = -z * z / 2.0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..1000u32 {
        term *= w / ((k + 1) as f64 * (2 * l + 2 * k + 3) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Backward recurrence `f_{l-1} = (2l+1)/z f_l - f_{l+1}` for `j_l`, `j_{l+1}`,
/// normalised against whichever of `j_0`, `j_1` is larger in magnitude.
/// Returned values satisfy `j = value * exp(-log_shift)`.
fn miller(l: u32, z: Complex64) -> [(Complex64, f64); 2] {
    let az = z.norm();
    let mx = (l as f64 + 1.0).max(az);
    let n_start = (mx + (160.0 * mx).sqrt() + 20.0 + 2.0 * z.im.abs()).ceil() as u32;

    let mut f_next = Complex64::new(0.0, 0.0);
    let mut f = Complex64::new(1e-30, 0.0);
    let mut shifts = 0i32;
    let mut stored = [(Complex64::new(0.0, 0.0), 0i32); 2];
    let mut f1 = Complex64::new(0.0, 0.0);

    for k in (1..=n_start).rev() {
        if k == l + 1 {
            stored[1] = (f, shifts);
        } else if k == l {
            stored[0] = (f, shifts);
        }
        let f_prev = f * ((2 * k + 1) as f64) / z - f_next;
        f_next = f;
        f = f_prev;
        if k == 1 {
            f1 = f_next;
        }
        if f.norm() > RESCALE {
            f /= RESCALE;
            f_next /= RESCALE;
            f1 /= RESCALE;
            shifts += 1;
        }
    }
    if l == 0 {
        stored[0] = (f, shifts);
    }
    let (s, c) = (z.sin(), z.cos());
    let j0 = s / z;
    let j1 = s / (z * z) - c / z;
    // Division by a huge complex number goes through |f|², which overflows;
    // keep magnitude and phase apart.
    let (num, den) = if j0.norm() >= j1.norm() { (j0, f) } else { (j1, f1) };
    let log_factor = num.norm().ln() - den.norm().ln();
    let phase = (num / num.norm()) * (den.conj() / den.norm());
    stored.map(|(mant, at)| {
        let mag = mant.norm();
        (mant / mag * phase, (shifts - at) as f64 * LN_RESCALE - mag.ln() - log_factor)
    })
}

/// Scaled spherical pair `(j̃_l(z), j̃_l'(z))`, `j̃ = j_l / P_l`,
/// `P_l(z) = z^l / (2l+1)!!`. `z` must be nonzero when `l >= 1`.
pub fn scaled_spherical_j_pair(l: u32, z: Complex64) -> ScaledPair {
    let (jl, jl1) = if series_region(l, z) {
        (series_scaled(l, z), series_scaled(l + 1, z))
    } else {
        let [(a, sa), (b, sb)] = miller(l, z);
        let lp = Order::Spherical(l).log_prefactor(z);
        let lp1 = Order::Spherical(l + 1).log_prefactor(z);
        (a * (-lp - sa).exp(), b * (-lp1 - sb).exp())
    };
    // j_l' = (l/z) j_l - j_{l+1}
    let deriv = if l == 0 {
        -z / 3.0 * jl1
    } else {
        jl * (l as f64) / z - z / ((2 * l + 3) as f64) * jl1
    };
    ScaledPair { value: jl, deriv }
}

/// Scaled second-kind spherical pair `(ỹ_l, ỹ_l')`, `ỹ = y_l · P_l`, `x > 0`.
pub fn scaled_spherical_y_pair(l: u32, x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let y0 = -c / x;
    let y1 = -c / (x * x) - s / x;
    if l == 0 {
        return (y0, -y1);
    }
    // ỹ_{j+1} = (2j+1)/(2j+3) ỹ_j - x²/((2j+1)(2j+3)) ỹ_{j-1}
    let mut prev = y0;
    let mut cur = y1 * x / 3.0;
    for j in 1..l {
        let a = (2 * j + 1) as f64;
        let b = (2 * j + 3) as f64;
        let next = a / b * cur - x * x / (a * b) * prev;
        prev = cur;
        cur = next;
    }
    let lf = l as f64;
    (cur, x / (2.0 * lf + 1.0) * prev - (lf + 1.0) / x * cur)
}

/// Spherical Bessel function of the second kind `y_l(x)`, `x > 0`.
pub fn spherical_y(l: u32, x: f64) -> Result<f64, BesselError> {
    check_positive(x)?;
    let (y, _) = scaled_spherical_y_pair(l, x);
    apply_log_factor(l, x, y, -log_p(Order::Spherical(l), x))
}

/// `y_l'(x)`, `x > 0`.
pub fn spherical_y_deriv(l: u32, x: f64) -> Result<f64, BesselError> {
    check_positive(x)?;
    let (_, yp) = scaled_spherical_y_pair(l, x);
    apply_log_factor(l, x, yp, -log_p(Order::Spherical(l), x))
}

/// Spherical Hankel function `h_l^{(1)}(x) = j_l(x) + i y_l(x)`.
pub fn spherical_hankel1(l: u32, x: f64) -> Result<Complex64, BesselError> {
    check_positive(x)?;
    let j = super::bessel_j(Order::Spherical(l), x)?;
    Ok(Complex64::new(j, spherical_y(l, x)?))
}
