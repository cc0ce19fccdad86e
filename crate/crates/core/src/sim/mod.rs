//! Seedable shepherding simulation with heterogeneous sheep.
//!
//! The dynamics follow the Strömbom collect/drive model: sheep respond to
//! local cohesion, short-range repulsion from each other and repulsion
//! from the shepherd, while the shepherd alternates between collecting the
//! furthest straggler and driving the flock towards the goal. Sheep
//! heterogeneity comes from the four per-profile weights in
//! [`AgentProfile`].

mod model;
mod profile;
mod trajectory;

pub use model::{
    init_scenario, run_from, run_scenario, sheep_force, shepherd_step, step, ShepherdMode,
    SimState,
};
pub use profile::{AgentProfile, ProfileLabel, ScenarioId, ScenarioSpec, SimConstants};
pub use trajectory::{AgentKind, Trajectory, TRAJECTORY_HEADER};
