//! Multi-modal routing with shared e-mobility tools.
//!
//! A traveller moves between e-hubs on foot or on a tool (e-bike,
//! e-scooter, e-car) picked up at a hub and dropped at any hub that docks
//! its type. [`netgraph`] turns a road network into a hub-level reduced
//! graph; [`aco`] and [`qlearn`] search it heuristically and [`oracle`]
//! solves it exactly.

pub mod aco;
pub mod fixtures;
pub mod mode;
mod moves;
pub mod netgraph;
pub mod oracle;
pub mod qlearn;
pub mod rng;
pub mod route;
pub mod scenario;
pub mod synth;

pub use mode::{Mode, ModeSet, PerMode};
pub use route::{route, PlannerKind, RouteError, RouteOptions, RouteOutcome};
