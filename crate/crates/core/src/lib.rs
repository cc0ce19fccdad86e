//! Simulation and analytics for shepherded swarms.
//!
//! The crate is organised as a pipeline:
//!
//! * [`sim`] runs a seedable Strömbom-style shepherding model with
//!   heterogeneous sheep profiles and records [`sim::Trajectory`]s.
//! * [`markers`] holds the pure kernels that turn a window of positions
//!   into the 42 per-agent information markers.
//! * [`windowing`] slices trajectories into overlapping windows, assembles
//!   [`windowing::MarkerMatrix`] values and labelled datasets.
//! * [`recognition`] trains CART classifiers, sweeps window plans and runs
//!   the marker ablation protocols.
//! * [`interaction`] derives agent association networks and swarm
//!   attention points from marker matrices.
//! * [`experiment`] batches runs and datasets for the command line and
//!   benchmarks.

pub mod error;
pub mod experiment;
pub mod geom;
pub mod interaction;
pub mod markers;
pub mod recognition;
pub mod sim;
pub mod windowing;

pub use error::{Error, Result};
pub use geom::Vec2;
pub use markers::{MarkerId, MarkerSet};
pub use sim::{AgentProfile, ProfileLabel, ScenarioId, ScenarioSpec, SimConstants, Trajectory};
pub use windowing::{LabeledDataset, MarkerMatrix, WindowPlan};
