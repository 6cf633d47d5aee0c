//! Kinetic tile assembly: rate laws, exact stochastic simulation and the
//! per-site growth-error model.

mod analysis;
mod errors;
mod params;
pub mod sim;

pub use analysis::{epsilon_matrix, markov_site_oracle, site_error_probability, AnalysisError, EpsilonMatrix};
pub use errors::{classify_errors, ErrorReport, ErrorSite};
pub use params::{epsilon, forward_rate, reverse_rate, KineticParams, ParamError};
pub use sim::{
    simulate, Event, EventKind, Model, SimError, SimOptions, SimResult, SimState, Simulator, Step, Termination,
};
