//! Numerical verification of the constructive steps behind second-order differentiability
//! of rank-one convex functions.
//!
//! Functions live on matrix spaces `R^{m x n}` (or symmetric matrices) and are either
//! analytic [`matrix::FunctionHandle`]s from the [`matrix::corpus`] or
//! [`matrix::SampledField`]s on tensor grids. On top of that layer:
//!
//! * [`convexity`] checks rank-one and separate convexity along segments, the local
//!   Lipschitz estimate, discrete subharmonicity, the symmetric-space operator and
//!   mollification.
//! * [`paraboloid`] computes least openings of paraboloids touching from above and the
//!   tail statistics of that field.
//! * [`envelope`] builds cone sup/inf-convolutions of partial derivatives, touch sets and
//!   second-order Taylor remainders.
//! * [`lemma`] certifies the lower bound obtained from an upper radial majorant by column
//!   splitting.
//! * [`oned`] covers piecewise-linear convex functions on the line, their atomic
//!   second-derivative measures, maximal functions and the Fubini tail argument.

pub mod error;
pub mod matrix;
pub mod stats;

pub mod convexity;
pub mod envelope;
pub mod lemma;
pub mod oned;
pub mod paraboloid;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
