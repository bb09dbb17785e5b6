//! Deadline-aware flexible job-shop scheduling with STNU dispatch.
//!
//! Pipeline: [`solver::solve`] a deadline-augmented FJSP instance, turn the
//! schedule into an STNU with [`stnu::build_stnu`], certify it with
//! [`dc::check_dc`], then execute it against sampled durations with
//! [`rte::execute`] or in bulk with [`sim::run_monte_carlo`].

pub mod instance;
pub mod solver;
pub mod stnu;
pub mod dc;
pub mod rte;
pub mod sim;
pub mod calibrate;
