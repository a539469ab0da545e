//! Small-scale linear algebra: 2×2 complex matrices, realified Hilbert-space
//! points, circumcenters, and symmetric eigendecomposition.

mod mat2;
mod point;
mod symmetric;

pub use mat2::{polar_unitary, Mat2};
pub use point::{circumcenter, circumcenter_with_tol, colinear, HPoint, Point, DEFAULT_COLINEAR_TOL};
pub use symmetric::{RealMatrix, SymmetricEigen};
