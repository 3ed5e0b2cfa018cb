//! Parametric estimation of income inequality from grouped Lorenz-curve data.
//!
//! The crate fits members of the generalized beta of the second kind (GB2)
//! family to cumulative income shares by nonlinear least squares or two-step
//! GMM, and derives Gini and Atkinson indices from the fitted distribution.

pub mod distributions;
pub mod error;
pub mod estimate;
pub mod grouped;
pub mod measures;
mod optim;
pub mod select;
pub mod specfun;
pub mod synth;

pub use distributions::{Family, FamilySpec, GiniMethod, GiniValue};
pub use error::{Error, Result};
pub use estimate::{FitResult, Method, WeightingMatrix};
pub use grouped::GroupedDataset;
pub use measures::{McConfig, Microdata};
pub use synth::{GroupingPolicy, MixtureSpec};

#[cfg(test)]
#[path = "../tests/common/quad.rs"]
pub(crate) mod quad;
