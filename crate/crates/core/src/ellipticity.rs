//! Pointwise parameter-ellipticity conditions for the transmission problem in
//! local boundary coordinates, and the σ classifier deciding whether the
//! negative real axis is also a direction of ellipticity.
//!
//! At a boundary point with frame matrix `C` (rows `e_1, …, e_{d-1}, ν`) the
//! coefficient matrix is conjugated to `Ã = C A Cᵀ`. The conditions are
//!
//! * d = 2: `c₁ = ã₂₂ n - 1 ≠ 0` and `c₂ = det A - 1 ≠ 0`, with
//!   `σ = sgn(c₁ c₂)`;
//! * d = 3: `c₁ = ã₃₃ n - 1 ≠ 0` and `c₂ = det M > 0`, where
//!   `M = [[ã₃₃ã₁₁ - ã₁₃² - 1, ã₃₃ã₁₂ - ã₁₃ã₂₃], [ã₃₃ã₂₁ - ã₁₃ã₂₃, ã₃₃ã₂₂ - ã₂₃² - 1]]`;
//!   `σ = +1` iff `diag(c₁, M)` is sign-definite.
//!
//! "≠ 0" is tested against [`MARGIN`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{BoundaryFrame, BoundaryParam, Domain, GeometryError, Medium};

/// Values with magnitude at or below this are treated as violating a "≠ 0"
/// condition.
pub const MARGIN: f64 = 1e-9;

pub const DEFAULT_SAMPLES: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticityError {
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix dimension {0} does not match the frame")]
    DimensionMismatch(usize),
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EllipticSigmaPlus,
    EllipticSigmaMinus,
    EllipticMixedSigma,
    NotParameterElliptic,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::EllipticSigmaPlus => "elliptic_sigma_plus",
            Verdict::EllipticSigmaMinus => "elliptic_sigma_minus",
            Verdict::EllipticMixedSigma => "elliptic_mixed_sigma",
            Verdict::NotParameterElliptic => "not_parameter_elliptic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    Positive,
    Negative,
    Indefinite,
}

/// Conditions evaluated at one boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCheck {
    /// Boundary parameter: `[s]` or `[polar, azimuth]`.
    pub param: Vec<f64>,
    pub a_tilde: Vec<Vec<f64>>,
    pub n: f64,
    /// `ã_dd n - 1`.
    pub c1: f64,
    /// `det A - 1` (d = 2) or `det M` (d = 3).
    pub c2: f64,
    pub c1_ok: bool,
    pub c2_ok: bool,
    pub sigma: i8,
}

impl PointCheck {
    pub fn passes(&self) -> bool {
        self.c1_ok && self.c2_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub dimension: usize,
    pub samples: usize,
    pub verdict: Verdict,
    pub min_abs_c1: f64,
    /// `min |det A - 1|` for d = 2, `min det M` for d = 3.
    pub min_c2: f64,
    pub margin: f64,
    pub failing_points: usize,
    /// `c₁` takes both signs along the boundary, so it vanishes somewhere
    /// between samples even if no sample lands on the zero.
    pub c1_sign_change: bool,
    pub c2_sign_change: bool,
    pub sigma_plus_points: usize,
    pub sigma_minus_points: usize,
    pub points: Vec<PointCheck>,
}

/// `Ã = C A Cᵀ`.
pub fn transfer(a: &DMatrix<f64>, frame: &BoundaryFrame) -> Result<DMatrix<f64>, EllipticityError> {
    let d = frame.transfer.nrows();
    if a.nrows() != d || a.ncols() != d {
        return Err(EllipticityError::DimensionMismatch(a.nrows()));
    }
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 * a.amax().max(1.0) {
        return Err(EllipticityError::NotSymmetric(asym));
    }
    let c = &frame.transfer;
    let t = c * a * c.transpose();
    // Symmetrize away rounding.
    Ok((&t + t.transpose()) * 0.5)
}

fn param_vec(p: BoundaryParam) -> Vec<f64> {
    match p {
        BoundaryParam::Curve(s) => vec![s],
        BoundaryParam::Sphere { polar, azimuth } => vec![polar, azimuth],
    }
}

/// Boundary conditions at one frame. `param` is recorded in the result only.
pub fn check_point(medium: &Medium, frame: &BoundaryFrame, d: usize) -> Result<PointCheck, EllipticityError> {
    if frame.point.len() != d {
        return Err(EllipticityError::DimensionMismatch(d));
    }
    let a = medium.a_at(&frame.point);
    let n = medium.n_at(&frame.point);
    let at = transfer(&a, frame)?;
    let c1 = at[(d - 1, d - 1)] * n - 1.0;
    let sgn = |v: f64| if v > 0.0 { 1i8 } else { -1i8 };
    let (c2, c2_ok, sigma) = if d == 2 {
        let c2 = a.determinant() - 1.0;
        (c2, c2.abs() > MARGIN, sgn(c1) * sgn(c2))
    } else {
        let m = lateral_matrix(&at);
        let det = m.determinant();
        let eig = m.symmetric_eigen().eigenvalues;
        let all_pos = c1 > 0.0 && eig.iter().all(|&e| e > 0.0);
        let all_neg = c1 < 0.0 && eig.iter().all(|&e| e < 0.0);
        (det, det > MARGIN, if all_pos || all_neg { 1 } else { -1 })
    };
    Ok(PointCheck {
        param: Vec::new(),
        a_tilde: (0..d).map(|i| (0..d).map(|j| at[(i, j)]).collect()).collect(),
        n,
        c1,
        c2,
        c1_ok: c1.abs() > MARGIN,
        c2_ok,
        sigma,
    })
}

/// The 2×2 matrix of the d = 3 condition.
pub fn lateral_matrix(at: &DMatrix<f64>) -> DMatrix<f64> {
    let a = |i: usize, j: usize| at[(i - 1, j - 1)];
    DMatrix::from_row_slice(
        2,
        2,
        &[
            a(3, 3) * a(1, 1) - a(1, 3).powi(2) - 1.0,
            a(3, 3) * a(1, 2) - a(1, 3) * a(2, 3),
            a(3, 3) * a(2, 1) - a(1, 3) * a(2, 3),
            a(3, 3) * a(2, 2) - a(2, 3).powi(2) - 1.0,
        ],
    )
}

/// Checks every sampled boundary point and aggregates a verdict.
pub fn check_domain(medium: &Medium, domain: &Domain, samples: usize) -> Result<EllipticityReport, EllipticityError> {
    if samples < 16 {
        return Err(EllipticityError::TooFewSamples { min: 16, got: samples });
    }
    let d = domain.dimension();
    let mut points = Vec::with_capacity(samples);
    for p in domain.sample_boundary(samples) {
        let frame = domain.frame_at(p)?;
        let mut check = check_point(medium, &frame, d)?;
        check.param = param_vec(p);
        points.push(check);
    }
    let min_abs_c1 = points.iter().map(|p| p.c1.abs()).fold(f64::INFINITY, f64::min);
    let min_c2 = if d == 2 {
        points.iter().map(|p| p.c2.abs()).fold(f64::INFINITY, f64::min)
    } else {
        points.iter().map(|p| p.c2).fold(f64::INFINITY, f64::min)
    };
    let sign_change = |f: &dyn Fn(&PointCheck) -> f64| {
        points.iter().any(|p| f(p) > 0.0) && points.iter().any(|p| f(p) < 0.0)
    };
    let c1_sign_change = sign_change(&|p| p.c1);
    let c2_sign_change = sign_change(&|p| p.c2);
    let failing_points = points.iter().filter(|p| !p.passes()).count();
    let plus = points.iter().filter(|p| p.sigma > 0).count();
    let minus = points.len() - plus;
    let verdict = if failing_points > 0 || c1_sign_change || c2_sign_change {
        Verdict::NotParameterElliptic
    } else if minus == 0 {
        Verdict::EllipticSigmaPlus
    } else if plus == 0 {
        Verdict::EllipticSigmaMinus
    } else {
        Verdict::EllipticMixedSigma
    };
    Ok(EllipticityReport {
        dimension: d,
        samples,
        verdict,
        min_abs_c1,
        min_c2,
        margin: MARGIN,
        failing_points,
        c1_sign_change,
        c2_sign_change,
        sigma_plus_points: plus,
        sigma_minus_points: minus,
        points,
    })
}

/// Sign classification of `(1/n) A - Id` over interior and boundary samples.
pub fn assumption_definite(medium: &Medium, domain: &Domain, samples: usize) -> Result<Definiteness, EllipticityError> {
    if samples < 16 {
        return Err(EllipticityError::TooFewSamples { min: 16, got: samples });
    }
    let d = domain.dimension();
    let mut xs: Vec<DVector<f64>> = domain.sample_interior(samples);
    for p in domain.sample_boundary(samples) {
        xs.push(domain.boundary_point(p)?);
    }
    let (mut pos, mut neg) = (true, true);
    for x in &xs {
        let m = medium.a_at(x) / medium.n_at(x) - DMatrix::identity(d, d);
        for &e in m.symmetric_eigen().eigenvalues.iter() {
            pos &= e > 0.0;
            neg &= e < 0.0;
        }
    }
    Ok(match (pos, neg) {
        (true, _) => Definiteness::Positive,
        (_, true) => Definiteness::Negative,
        _ => Definiteness::Indefinite,
    })
}
