//! Spectral-Galerkin solver and verification harness for time-fractional
//! elliptic problems `∂^α_t u − ∇·(a∇u) + b·∇u + c u = f` on intervals and
//! rectangles with homogeneous Dirichlet data and zero initial state.

pub mod battery;
pub mod error;
pub mod expr;
pub mod fode;
pub mod fraccalc;
pub mod grid;
pub mod problem;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{CoefficientField, Expr, ExprError};
pub use fode::{FractionalIVP, Gamma, ModalTrajectory, PicardConfig, PicardLog};
pub use fraccalc::{Kernel, KernelKind};
pub use grid::{GridSeries, TimeGrid};
pub use problem::{ProblemSpec, Scheme};
pub use special::{gamma, mittag_leffler, MLParams};
pub use spectral::{Coefficients, DomainGeometry, ModalForcing, SpectralBasis};
pub use verify::{EstimateCheck, EstimateReport, VerifyOptions};
