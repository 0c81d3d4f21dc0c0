//! Winding numbers of analytic functions along rectangle edges.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

/// Axis-aligned rectangle in the complex `k` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Self {
        Rect { re, im }
    }

    pub fn width(&self) -> f64 {
        self.re.1 - self.re.0
    }

    pub fn height(&self) -> f64 {
        self.im.1 - self.im.0
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    /// Corners counter-clockwise from the lower left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re.0, self.im.0),
            Complex64::new(self.re.1, self.im.0),
            Complex64::new(self.re.1, self.im.1),
            Complex64::new(self.re.0, self.im.1),
        ]
    }

    /// Every edge pushed outward by `delta`.
    pub fn expanded(&self, delta: f64) -> Rect {
        Rect { re: (self.re.0 - delta, self.re.1 + delta), im: (self.im.0 - delta, self.im.1 + delta) }
    }
}

/// The tracked phase could not be resolved: a zero lies on or extremely
/// close to the path, or the function is not finite there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PathZero;

fn unit(z: Complex64) -> Option<Complex64> {
    let r = z.norm();
    (r > 0.0 && r.is_finite()).then(|| z / r)
}

/// Continuous change of `arg f` along the segment `z0 → z1`.
///
/// Steps are at most `max_step` long. A step is accepted when both of its
/// halves turn the phase by less than `π/8` and agree with the full step, so
/// that no turn of `2π` can hide between samples.
pub(crate) fn phase_change<F>(f: &F, z0: Complex64, z1: Complex64, max_step: f64) -> Result<f64, PathZero>
where
    F: Fn(Complex64) -> Complex64,
{
    let len = (z1 - z0).norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let at = |s: f64| z0 + (z1 - z0) * s;
    let mut u0 = unit(f(z0)).ok_or(PathZero)?;
    let ds_max = (max_step / len).min(1.0);
    let ds_min = 1e-13 * z0.norm().max(z1.norm()).max(1.0) / len;
    let mut ds = ds_max;
    let mut s = 0.0;
    let mut total = 0.0;
    while s < 1.0 {
        let step = ds.min(1.0 - s);
        let um = unit(f(at(s + 0.5 * step))).ok_or(PathZero)?;
        let u1 = unit(f(at(s + step))).ok_or(PathZero)?;
        let d1 = (um * u0.conj()).arg();
        let d2 = (u1 * um.conj()).arg();
        let full = (u1 * u0.conj()).arg();
        if d1.abs() < PI / 8.0 && d2.abs() < PI / 8.0 && (d1 + d2 - full).abs() < 1e-9 {
            total += d1 + d2;
            s += step;
            u0 = u1;
            ds = (ds * 1.5).min(ds_max);
        } else {
            ds = 0.5 * step;
            if ds < ds_min {
                return Err(PathZero);
            }
        }
    }
    Ok(total)
}

/// Winding number of `f` around `rect`, as a float before rounding.
pub(crate) fn winding<F>(f: &F, rect: &Rect, max_step: f64) -> Result<f64, PathZero>
where
    F: Fn(Complex64) -> Complex64,
{
    let c = rect.corners();
    let mut total = 0.0;
    for i in 0..4 {
        total += phase_change(f, c[i], c[(i + 1) % 4], max_step)?;
    }
    Ok(total / TAU)
}

/// Rounds a winding number, rejecting values that are not close to an
/// integer (which would indicate an unresolved path).
pub(crate) fn to_count(w: f64) -> Option<u32> {
    let r = w.round();
    ((w - r).abs() < 0.05 && r >= 0.0).then_some(r as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_polynomial_roots() {
        let roots = [Complex64::new(1.0, 0.5), Complex64::new(1.2, -0.3), Complex64::new(3.0, 0.0)];
        let f = |z: Complex64| roots.iter().fold(Complex64::new(1.0, 0.0), |acc, r| acc * (z - r));
        let w = winding(&f, &Rect::new((0.0, 2.0), (-1.0, 1.0)), 0.1).unwrap();
        assert_eq!(to_count(w), Some(2));
        let w = winding(&f, &Rect::new((0.0, 4.0), (-1.0, 1.0)), 0.1).unwrap();
        assert_eq!(to_count(w), Some(3));
    }

    #[test]
    fn zero_on_path_is_reported() {
        let f = |z: Complex64| z - Complex64::new(1.0, 0.0);
        assert!(winding(&f, &Rect::new((1.0, 2.0), (-1.0, 1.0)), 0.1).is_err());
    }

    #[test]
    fn fast_oscillation_is_resolved() {
        // e^{i 40 z} turns 40 radians along [0, 1] with steps up to 0.5
        let f = |z: Complex64| (Complex64::new(0.0, 40.0) * z).exp();
        let p = phase_change(&f, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 0.5).unwrap();
        assert!((p - 40.0).abs() < 1e-9);
    }
}
