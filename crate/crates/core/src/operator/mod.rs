//! Homogeneous nonlocal operators of order `2s` and their discretization.
//!
//! The kernel is `K(y) = c_{n,s} a(y/|y|) |y|^{-n-2s}` with `c_{n,s}` chosen so
//! that `a ≡ 1` gives `-(-Δ)^s`, whose symbol is `|ξ|^{2s}`.

mod apply;
pub mod grid;
pub mod kernel;
pub mod quad;
mod stencil;
mod symbol;

pub use apply::{
    apply_operator, far_field, BoxOperator, EvalOptions, ExteriorRule, FarField, Growth, PointEvaluator,
    PointValue, SpaceFn, SpaceTimeFn,
};
pub use grid::GridFunction;
pub use kernel::{make_kernel, norm_const, zero_moment, KernelSpec, SphericalDensity};
pub use stencil::{DriftScheme, Stencil};
pub use symbol::{effective_1d_kernel, symbol, Symbol};
