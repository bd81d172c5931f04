//! Exact harmonic analysis over `F_q^d`: finite field arithmetic, the normalized Fourier
//! transform, level sets of polynomials and their decay, character sums, and generalized
//! distance sets `{P(x - y) : x in E, y in F}`.

pub mod distances;
pub mod field;
pub mod fourier;
pub mod harness;
pub mod sampling;
pub mod varieties;

pub use field::{make_field, Elem, Field, FieldElement, FieldError, FieldSpec};
pub use fourier::{fourier_transform, inverse_transform, plancherel_residual, ComplexGrid};
pub use varieties::{PointSet, Polynomial};
