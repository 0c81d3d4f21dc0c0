use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Boundary, Domain, GeometryError};

/// Smooth scalar field with a closed-form gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    /// `Σ_k c_k |x|^{2k}`.
    RadialPolynomial { coeffs: Vec<f64> },
    /// `offset + gradient · x`.
    Affine { offset: f64, gradient: Vec<f64> },
}

impl ScalarField {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::RadialPolynomial { coeffs } => {
                let r2 = x.norm_squared();
                coeffs.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
            }
            ScalarField::Affine { offset, gradient } => offset + gradient.iter().zip(x.iter()).map(|(g, xi)| g * xi).sum::<f64>(),
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ScalarField::Constant { .. } => DVector::zeros(x.len()),
            ScalarField::RadialPolynomial { coeffs } => {
                // d/dx Σ c_k r^{2k} = Σ 2k c_k r^{2k-2} x
                let r2 = x.norm_squared();
                let dp = coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * r2 + 2.0 * k as f64 * c);
                x * dp
            }
            ScalarField::Affine { gradient, .. } => {
                DVector::from_iterator(x.len(), (0..x.len()).map(|i| gradient.get(i).copied().unwrap_or(0.0)))
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarField::Constant { value } => Some(*value),
            ScalarField::RadialPolynomial { coeffs } if coeffs.iter().skip(1).all(|c| *c == 0.0) => {
                Some(coeffs.first().copied().unwrap_or(0.0))
            }
            ScalarField::Affine { offset, gradient } if gradient.iter().all(|g| *g == 0.0) => Some(*offset),
            _ => None,
        }
    }
}

/// Coefficient matrix `A(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
pub enum MatrixField {
    /// Row-major constant matrix.
    Constant(Vec<Vec<f64>>),
    /// `A(x) = s(x) · Id`.
    IsotropicField(ScalarField),
}

/// Refractive-index style coefficient `n(x)` as written in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
enum IndexSpec {
    Constant(f64),
    Field(ScalarField),
}

/// Coefficients `A(x)` (symmetric positive-definite) and `n(x) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    dimension: usize,
    a: MatrixField,
    n: ScalarField,
}

impl Medium {
    pub fn new(dimension: usize, a: MatrixField, n: ScalarField) -> Result<Self, GeometryError> {
        if let MatrixField::Constant(rows) = &a {
            if rows.len() != dimension || rows.iter().any(|r| r.len() != dimension) {
                return Err(GeometryError::Config(format!("A must be {dimension}x{dimension}")));
            }
        }
        Ok(Medium { dimension, a, n })
    }

    /// Constant medium `A`, `n`.
    pub fn constant(a: DMatrix<f64>, n: f64) -> Result<Self, GeometryError> {
        let d = a.nrows();
        let rows = (0..d).map(|i| a.row(i).iter().copied().collect()).collect();
        Self::new(d, MatrixField::Constant(rows), ScalarField::Constant { value: n })
    }

    /// `A = a · Id`, constant `n`.
    pub fn isotropic(dimension: usize, a: f64, n: f64) -> Self {
        Medium {
            dimension,
            a: MatrixField::IsotropicField(ScalarField::Constant { value: a }),
            n: ScalarField::Constant { value: n },
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn a_field(&self) -> &MatrixField {
        &self.a
    }

    pub fn n_field(&self) -> &ScalarField {
        &self.n
    }

    pub fn a_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.a {
            MatrixField::Constant(rows) => DMatrix::from_fn(self.dimension, self.dimension, |i, j| rows[i][j]),
            MatrixField::IsotropicField(s) => DMatrix::identity(self.dimension, self.dimension) * s.value(x),
        }
    }

    pub fn n_at(&self, x: &DVector<f64>) -> f64 {
        self.n.value(x)
    }

    pub fn grad_n(&self, x: &DVector<f64>) -> DVector<f64> {
        self.n.gradient(x)
    }

    /// Scalar `a(x)` and its gradient when `A = a(x) · Id`.
    pub fn isotropic_scalar(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        match &self.a {
            MatrixField::IsotropicField(s) => Some((s.value(x), s.gradient(x))),
            MatrixField::Constant(rows) => {
                let a = rows[0][0];
                let iso = (0..self.dimension)
                    .all(|i| (0..self.dimension).all(|j| rows[i][j] == if i == j { a } else { 0.0 }));
                iso.then(|| (a, DVector::zeros(self.dimension)))
            }
        }
    }

    /// `(A, n)` when both coefficients are constant.
    pub fn constant_values(&self) -> Option<(DMatrix<f64>, f64)> {
        let n = self.n.as_constant()?;
        let origin = DVector::zeros(self.dimension);
        match &self.a {
            MatrixField::Constant(_) => Some((self.a_at(&origin), n)),
            MatrixField::IsotropicField(s) => s.as_constant().map(|_| (self.a_at(&origin), n)),
        }
    }

    /// `(a, n)` when `A = a · Id` and both are constant.
    pub fn isotropic_constant(&self) -> Option<(f64, f64)> {
        let (a, n) = self.constant_values()?;
        let (s, _) = self.isotropic_scalar(&DVector::zeros(self.dimension))?;
        (a[(0, 0)] == s).then_some((s, n))
    }

    /// Checks symmetry, positive-definiteness of `A` and positivity of `n` at
    /// boundary and interior samples.
    pub fn validate(&self, domain: &Domain, samples: usize) -> Result<(), GeometryError> {
        if domain.dimension() != self.dimension {
            return Err(GeometryError::Config("medium and domain dimensions differ".into()));
        }
        let mut points = domain.sample_interior(samples);
        for p in domain.sample_boundary(samples) {
            points.push(domain.boundary_point(p)?);
        }
        for x in &points {
            let a = self.a_at(x);
            if (&a - a.transpose()).norm() > 1e-12 * a.norm().max(1.0) {
                return Err(GeometryError::Config("A is not symmetric".into()));
            }
            if a.clone().cholesky().is_none() {
                return Err(GeometryError::Config(format!("A is not positive-definite at {:?}", x.as_slice())));
            }
            let n = self.n_at(x);
            if !(n > 0.0) {
                return Err(GeometryError::Config(format!("n = {n} is not positive at {:?}", x.as_slice())));
            }
        }
        Ok(())
    }
}

/// JSON problem description shared by all commands.
///
/// ```json
/// {
///   "dimension": 2,
///   "boundary": {"type": "disk", "params": {"radius": 1.0}},
///   "A": {"type": "constant", "data": [[2.0, 0.0], [0.0, 2.0]]},
///   "n": {"type": "constant", "data": 1.0}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub boundary: Boundary,
    #[serde(rename = "A")]
    pub a: MatrixField,
    n: IndexSpec,
}

impl ProblemConfig {
    pub fn new(dimension: usize, boundary: Boundary, a: MatrixField, n: ScalarField) -> Self {
        let n = match n.as_constant() {
            Some(v) => IndexSpec::Constant(v),
            None => IndexSpec::Field(n),
        };
        ProblemConfig { dimension, boundary, a, n }
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        serde_json::from_str(text).map_err(|e| GeometryError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn domain(&self) -> Result<Domain, GeometryError> {
        Domain::new(self.dimension, self.boundary.clone())
    }

    pub fn medium(&self) -> Result<Medium, GeometryError> {
        let n = match &self.n {
            IndexSpec::Constant(v) => ScalarField::Constant { value: *v },
            IndexSpec::Field(f) => f.clone(),
        };
        Medium::new(self.dimension, self.a.clone(), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_polynomial_gradient_matches_difference() {
        let f = ScalarField::RadialPolynomial { coeffs: vec![1.0, 0.5, -0.25] };
        let x = DVector::from_vec(vec![0.3, -0.4]);
        let g = f.gradient(&x);
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            let fd = (f.value(&xp) - f.value(&xm)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{
            "dimension": 2,
            "boundary": {"type": "ellipse", "params": {"a": 2.0, "b": 1.0}},
            "A": {"type": "isotropic_field", "data": {"kind": "constant", "value": 2.0}},
            "n": {"type": "field", "data": {"kind": "radial_polynomial", "coeffs": [1.0, 1.0]}}
        }"#;
        let cfg = ProblemConfig::from_json(text).unwrap();
        let again = ProblemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        let m = cfg.medium().unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(m.n_at(&x), 3.0);
        assert_eq!(m.isotropic_scalar(&x).unwrap().0, 2.0);
    }

    #[test]
    fn validation_catches_indefinite_a() {
        let m = Medium::constant(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), 1.0).unwrap();
        assert!(m.validate(&Domain::disk(1.0).unwrap(), 16).is_err());
        let m = Medium::isotropic(2, 2.0, 1.0);
        assert!(m.validate(&Domain::disk(1.0).unwrap(), 16).is_ok());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ProblemConfig::from_json(r#"{"dimension":2,"boundary":{"type":"disk","params":{"radius":1}},"A":{"type":"constant","data":[[1,0],[0,1]]},"n":{"type":"constant","data":1},"x":1}"#).is_err());
    }
}
