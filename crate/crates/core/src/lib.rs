//! Numerical toolkit for interior transmission eigenvalue problems.
//!
//! * [`special_functions`]: Bessel-family evaluation and zero finding.
//! * [`geometry`]: domains, boundary frames, ray exits, quadrature, media.
//! * [`ellipticity`]: boundary-condition checks and the σ classifier.
//! * [`weyl`]: Weyl constants and counting-function analytics.
//! * [`radial_ite`]: exact spectra for the disk and ball.
//! * [`billiards`]: branching billiards with two Hamiltonians.
//! * [`smatrix`]: partial-wave S-matrix eigenvalues.
//! * [`report`]: shared float formatting.

pub mod special_functions;
pub mod geometry;
pub mod ellipticity;
pub mod weyl;
pub mod radial_ite;
pub mod billiards;
pub mod smatrix;
pub mod report;
