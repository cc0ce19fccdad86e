use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Sheep behaviour profiles A1..A7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProfileLabel {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
}

impl ProfileLabel {
    pub const ALL: [ProfileLabel; 7] = [
        ProfileLabel::A1,
        ProfileLabel::A2,
        ProfileLabel::A3,
        ProfileLabel::A4,
        ProfileLabel::A5,
        ProfileLabel::A6,
        ProfileLabel::A7,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ProfileLabel::A1 => "Scout",
            ProfileLabel::A2 => "Control Detractor",
            ProfileLabel::A3 => "Swarm Detractor",
            ProfileLabel::A4 => "Nomad",
            ProfileLabel::A5 => "Dispersed (Protector)",
            ProfileLabel::A6 => "Unwilling",
            ProfileLabel::A7 => "Classic",
        }
    }

    pub fn profile(self) -> AgentProfile {
        AgentProfile::canonical(self)
    }
}

impl fmt::Display for ProfileLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.index() + 1)
    }
}

impl FromStr for ProfileLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProfileLabel::ALL
            .into_iter()
            .find(|l| l.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown agent profile `{s}`")))
    }
}

/// Behavioural weights of one sheep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub label: ProfileLabel,
    /// Attraction towards the local centre of mass.
    pub w_lcm: f64,
    /// Repulsion from nearby sheep.
    pub w_pipi: f64,
    /// Repulsion from the shepherd.
    pub w_beta: f64,
    /// Sheep speed as a fraction of the shepherd speed.
    pub speed_ratio: f64,
}

impl AgentProfile {
    pub fn canonical(label: ProfileLabel) -> Self {
        let (w_lcm, w_pipi, w_beta, speed_ratio) = match label {
            ProfileLabel::A1 => (0.50, 2.00, 0.50, 1.00),
            ProfileLabel::A2 => (1.50, 2.00, 0.50, 0.50),
            ProfileLabel::A3 => (0.50, 3.00, 1.00, 0.67),
            ProfileLabel::A4 => (0.50, 2.00, 1.90, 0.67),
            ProfileLabel::A5 => (1.05, 3.00, 1.00, 0.67),
            ProfileLabel::A6 => (1.05, 1.50, 1.00, 0.50),
            ProfileLabel::A7 => (1.05, 2.00, 1.00, 0.67),
        };
        AgentProfile {
            label,
            w_lcm,
            w_pipi,
            w_beta,
            speed_ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, w) in [
            ("w_lcm", self.w_lcm),
            ("w_pipi", self.w_pipi),
            ("w_beta", self.w_beta),
        ] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::config(field, format!("weight must be > 0, got {w}")));
            }
        }
        if !(self.speed_ratio > 0.0 && self.speed_ratio <= 1.0) {
            return Err(Error::config(
                "speed_ratio",
                format!("must lie in (0, 1], got {}", self.speed_ratio),
            ));
        }
        Ok(())
    }
}

/// Scenario identifiers S1..S11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
    S9,
    S10,
    S11,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 11] = [
        ScenarioId::S1,
        ScenarioId::S2,
        ScenarioId::S3,
        ScenarioId::S4,
        ScenarioId::S5,
        ScenarioId::S6,
        ScenarioId::S7,
        ScenarioId::S8,
        ScenarioId::S9,
        ScenarioId::S10,
        ScenarioId::S11,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::S1 => "Find and Guide",
            ScenarioId::S2 => "Disrupted",
            ScenarioId::S3 => "Separated",
            ScenarioId::S4 => "Dispersed Search",
            ScenarioId::S5 => "Classic",
            ScenarioId::S6 => "Homogeneous A1",
            ScenarioId::S7 => "Homogeneous A2",
            ScenarioId::S8 => "Homogeneous A3",
            ScenarioId::S9 => "Homogeneous A4",
            ScenarioId::S10 => "Homogeneous A5",
            ScenarioId::S11 => "Homogeneous A6",
        }
    }

    /// S1..S4 mix profiles; S5..S11 are single-profile swarms.
    pub fn is_homogeneous(self) -> bool {
        self.index() >= 4
    }

    pub fn mixture(self) -> Vec<(ProfileLabel, f64)> {
        use ProfileLabel::*;
        match self {
            ScenarioId::S1 => vec![(A1, 0.20), (A7, 0.80)],
            ScenarioId::S2 => vec![(A2, 0.20), (A3, 0.20), (A6, 0.20), (A7, 0.40)],
            ScenarioId::S3 => vec![(A4, 0.80), (A7, 0.20)],
            ScenarioId::S4 => vec![(A1, 0.20), (A5, 0.20), (A7, 0.60)],
            ScenarioId::S5 => vec![(A7, 1.0)],
            ScenarioId::S6 => vec![(A1, 1.0)],
            ScenarioId::S7 => vec![(A2, 1.0)],
            ScenarioId::S8 => vec![(A3, 1.0)],
            ScenarioId::S9 => vec![(A4, 1.0)],
            ScenarioId::S10 => vec![(A5, 1.0)],
            ScenarioId::S11 => vec![(A6, 1.0)],
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index() + 1)
    }
}

impl FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scenario `{s}`")))
    }
}

/// Model constants shared by every agent in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConstants {
    /// Sheep react to the shepherd within this radius.
    pub r_shepherd_detect: f64,
    /// Sheep repel each other within this radius.
    pub r_agent_repulse: f64,
    /// Neighbourhood size for the local centre of mass.
    pub n_neighbours: usize,
    pub inertia: f64,
    pub noise_scale: f64,
    /// Shepherd speed per tick.
    pub base_speed_beta: f64,
    /// Width of the sector behind a sheep in which the shepherd goes unseen.
    pub blind_angle_behind_beta: f64,
    /// Chance per tick that an undisturbed sheep takes a random grazing step.
    pub grazing_probability: f64,
    /// The shepherd stops when within this many `r_agent_repulse` of a sheep.
    pub shepherd_freeze_factor: f64,
}

impl Default for SimConstants {
    fn default() -> Self {
        SimConstants {
            r_shepherd_detect: 65.0,
            r_agent_repulse: 2.0,
            n_neighbours: 19,
            inertia: 0.5,
            noise_scale: 0.3,
            base_speed_beta: 1.5,
            blind_angle_behind_beta: 0.0,
            grazing_probability: 0.05,
            shepherd_freeze_factor: 3.0,
        }
    }
}

impl SimConstants {
    pub fn validate(&self, n_sheep: usize) -> Result<()> {
        for (field, v) in [
            ("sim_constants.r_shepherd_detect", self.r_shepherd_detect),
            ("sim_constants.r_agent_repulse", self.r_agent_repulse),
            ("sim_constants.base_speed_beta", self.base_speed_beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be > 0, got {v}")));
            }
        }
        if n_sheep > 0 && self.n_neighbours >= n_sheep {
            return Err(Error::config(
                "sim_constants.n_neighbours",
                format!("must be < n_sheep ({n_sheep}), got {}", self.n_neighbours),
            ));
        }
        if !(0.0..1.0).contains(&self.inertia) {
            return Err(Error::config(
                "sim_constants.inertia",
                format!("must lie in [0, 1), got {}", self.inertia),
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::config("sim_constants.noise_scale", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.grazing_probability) {
            return Err(Error::config(
                "sim_constants.grazing_probability",
                "must lie in [0, 1]",
            ));
        }
        if !(0.0..=std::f64::consts::TAU).contains(&self.blind_angle_behind_beta) {
            return Err(Error::config(
                "sim_constants.blind_angle_behind_beta",
                "must lie in [0, 2pi]",
            ));
        }
        if !(self.shepherd_freeze_factor >= 0.0) {
            return Err(Error::config(
                "sim_constants.shepherd_freeze_factor",
                "must be >= 0",
            ));
        }
        Ok(())
    }
}

/// One shepherding scenario: the sheep mixture plus arena and model constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub mixture: BTreeMap<ProfileLabel, f64>,
    pub n_sheep: usize,
    pub arena_side: f64,
    pub goal: Vec2,
    pub goal_radius: f64,
    pub max_ticks: usize,
    #[serde(default)]
    pub sim_constants: SimConstants,
}

impl ScenarioSpec {
    pub const DEFAULT_N: usize = 20;
    pub const DEFAULT_ARENA: f64 = 150.0;
    pub const DEFAULT_GOAL_RADIUS: f64 = 15.0;
    pub const DEFAULT_MAX_TICKS: usize = 600;

    /// The canonical scenario with default arena and constants.
    pub fn canonical(id: ScenarioId) -> Self {
        let l = Self::DEFAULT_ARENA;
        ScenarioSpec {
            id,
            mixture: id.mixture().into_iter().collect(),
            n_sheep: Self::DEFAULT_N,
            arena_side: l,
            goal: Vec2::new(0.9 * l, 0.9 * l),
            goal_radius: Self::DEFAULT_GOAL_RADIUS,
            max_ticks: Self::DEFAULT_MAX_TICKS,
            sim_constants: SimConstants {
                n_neighbours: Self::DEFAULT_N - 1,
                ..SimConstants::default()
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ScenarioSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_data() {
                Error::config(field, inner.to_string())
            } else {
                Error::Json(inner)
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn is_homogeneous(&self) -> bool {
        self.mixture.values().filter(|f| **f > 0.0).count() == 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sheep == 0 {
            return Err(Error::config("n_sheep", "must be at least 1"));
        }
        if !(self.arena_side > 0.0 && self.arena_side.is_finite()) {
            return Err(Error::config("arena_side", "must be a positive length"));
        }
        if !self.goal.is_finite() {
            return Err(Error::config("goal", "must be a finite position"));
        }
        if !(self.goal_radius >= 0.0) {
            return Err(Error::config("goal_radius", "must be >= 0"));
        }
        self.sim_constants.validate(self.n_sheep)?;
        self.profile_counts().map(|_| ())
    }

    /// Number of sheep per profile; every fraction must give a whole count.
    pub fn profile_counts(&self) -> Result<Vec<(ProfileLabel, usize)>> {
        if self.mixture.is_empty() {
            return Err(Error::config("mixture", "no profiles given"));
        }
        let total: f64 = self.mixture.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "mixture",
                format!("fractions sum to {total}, expected 1"),
            ));
        }
        let mut counts = Vec::with_capacity(self.mixture.len());
        for (&label, &frac) in &self.mixture {
            if !(frac >= 0.0) {
                return Err(Error::config(
                    format!("mixture.{label}"),
                    format!("fraction must be >= 0, got {frac}"),
                ));
            }
            let exact = frac * self.n_sheep as f64;
            let count = exact.round();
            if (exact - count).abs() > 1e-6 {
                return Err(Error::config(
                    format!("mixture.{label}"),
                    format!(
                        "{frac} of {} sheep is not a whole number ({exact})",
                        self.n_sheep
                    ),
                ));
            }
            if count > 0.0 {
                counts.push((label, count as usize));
            }
        }
        Ok(counts)
    }
}
