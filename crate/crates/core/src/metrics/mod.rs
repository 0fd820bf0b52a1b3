//! Hölder seminorms, regularity exponents and convergence orders.

mod fit;
mod holder;
mod regularity;

pub use fit::{convergence_order, linear_fit, LinearFit, OrderEstimate};
pub use holder::{
    global_gradient_holder, gradient, parabolic_holder_seminorm, HolderMode, HolderReport, Region, SearchOptions,
    EXACT_NODE_LIMIT,
};
pub use regularity::{
    fit_time_regularity, predicted_time_exponent, TimeRegularityReport, GOLDEN_THRESHOLD, MIN_WINDOW_STEPS,
};
