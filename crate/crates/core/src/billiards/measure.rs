use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::trace::DeadEndReason;
use super::{trace_path, BilliardError, Ham, PathClass, PhasePoint, Tolerances};
use crate::geometry::{Domain, Medium};

/// Two-sided 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub samples: usize,
    pub seed: u64,
    pub t_max: f64,
    pub dead_end: usize,
    pub dead_end_grazing: usize,
    pub dead_end_accumulation: usize,
    pub periodic: usize,
    pub dead_end_fraction: f64,
    pub dead_end_ci95: (f64, f64),
    pub periodic_fraction: f64,
    pub periodic_ci95: (f64, f64),
    pub tolerances: Tolerances,
}

/// Initial data for sample `index`: a uniform interior point, a uniform
/// Hamiltonian, a uniform direction scaled to `h = 1`, and 64 policy bits.
fn sample(seed: u64, index: u64, medium: &Medium, domain: &Domain) -> Result<(PhasePoint, Vec<bool>), BilliardError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let d = domain.dimension();
    let r = domain.bounding_radius();
    let x = loop {
        let x = DVector::from_fn(d, |_, _| rng.random_range(-r..r));
        if domain.level(&x) < 0.0 {
            break x;
        }
    };
    let ham = if rng.random::<bool>() { Ham::H1 } else { Ham::H2 };
    let dir = loop {
        let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let n2: f64 = v.norm_squared();
        if n2 > 1e-6 && n2 <= 1.0 {
            break v;
        }
    };
    let bits: u64 = rng.random();
    let policy = (0..64).map(|i| bits >> i & 1 == 1).collect();
    Ok((PhasePoint::normalized(ham, medium, x, &dir)?, policy))
}

/// Fractions of dead-end and periodic paths among `samples` random initial
/// data traced to `t_max`, with Wilson intervals.
///
/// Sample `i` depends only on `(seed, i)`, so results do not depend on the
/// thread count.
pub fn measure_estimate(
    medium: &Medium,
    domain: &Domain,
    seed: u64,
    samples: usize,
    t_max: f64,
    tol: &Tolerances,
) -> Result<MeasureEstimate, BilliardError> {
    if samples < 100 {
        return Err(BilliardError::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    if !(t_max > 0.0) {
        return Err(BilliardError::InvalidArgument("t_max must be positive".into()));
    }
    let classes = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let (init, policy) = sample(seed, i, medium, domain)?;
            Ok(trace_path(&init, &policy, medium, domain, tol, t_max)?.class)
        })
        .collect::<Result<Vec<PathClass>, BilliardError>>()?;
    let mut est = MeasureEstimate {
        samples,
        seed,
        t_max,
        dead_end: 0,
        dead_end_grazing: 0,
        dead_end_accumulation: 0,
        periodic: 0,
        dead_end_fraction: 0.0,
        dead_end_ci95: (0.0, 0.0),
        periodic_fraction: 0.0,
        periodic_ci95: (0.0, 0.0),
        tolerances: *tol,
    };
    for c in classes {
        match c {
            PathClass::DeadEnd { reason } => {
                est.dead_end += 1;
                match reason {
                    DeadEndReason::Grazing => est.dead_end_grazing += 1,
                    DeadEndReason::ReflectionAccumulation => est.dead_end_accumulation += 1,
                }
            }
            PathClass::Periodic { .. } => est.periodic += 1,
            PathClass::Ordinary => {}
        }
    }
    est.dead_end_fraction = est.dead_end as f64 / samples as f64;
    est.periodic_fraction = est.periodic as f64 / samples as f64;
    est.dead_end_ci95 = wilson_interval(est.dead_end, samples);
    est.periodic_ci95 = wilson_interval(est.periodic, samples);
    Ok(est)
}
