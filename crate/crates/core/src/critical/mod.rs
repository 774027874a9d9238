//! Mañé critical value, invariant primitives, the action potential and
//! closed magnetic geodesics in prescribed free homotopy classes.

pub mod action;
pub mod closed_orbit;
pub mod folner;
pub mod potential;
pub mod primitive;
pub mod solver;

pub use action::{lagrangian_action, uniform_times};
pub use closed_orbit::{closed_orbit_search, ClosedOrbit, ClosedOrbitOptions};
pub use folner::{folner_average_primitive, AveragingGroup};
pub use potential::{correction_potential, cover_distance, query_action, PotentialOptions, PotentialQuery, PotentialSolver};
pub use primitive::{default_primitive, DeckMap, PrimitiveField};
pub use solver::{critical_value_solve, CriticalCertificate, CriticalOptions};
