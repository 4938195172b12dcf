//! Conformal solitons of mean curvature flow in the upper half-space model
//! of hyperbolic space: symmetric profiles, the graphical soliton operator,
//! barrier constructions and a Dirichlet solver.

// Index loops mirror the stencil and matrix formulas; `!(x > 0.0)` rejects NaN.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::too_many_arguments,
    clippy::type_complexity
)]

pub mod banded;
pub mod barriers;
pub mod dirichlet;
pub mod error;
pub mod exec;
pub mod fd;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod ode;
pub mod operator;
pub mod profiles;
pub mod quadrature;
pub mod roots;
pub mod special;
pub mod suite;

pub use error::{HoroError, Result};
pub use exec::Exec;
