//! The filter kernel on the simplex: outcomes, pushforward of measures,
//! the transition operator on test functions, and seeded simulation.

pub mod kernel;
pub mod measure;
pub mod simulate;
pub mod test_fn;

pub use kernel::{
    evolve, evolve_measure, pushforward, step_outcomes, transition_operator, transition_operator_n,
    Evolved, Outcome, StepOutcomes, DEFAULT_PRUNE,
};
pub use measure::{barycenter, vertex_measure, DiscreteMeasure, DEFAULT_MERGE_EPS};
pub use simulate::{simulate_filter, FilterTrace, TraceStep};
pub use test_fn::TestFunction;
