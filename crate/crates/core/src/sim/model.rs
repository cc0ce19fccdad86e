use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::profile::{AgentProfile, ScenarioSpec, SimConstants};
use super::trajectory::Trajectory;
use crate::error::Result;
use crate::geom::{centroid, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShepherdMode {
    Drive,
    Collect,
}

/// Complete state of a run, including its random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub sheep: Vec<Vec2>,
    /// Last movement direction of each sheep (unit or zero).
    pub headings: Vec<Vec2>,
    pub profiles: Vec<AgentProfile>,
    pub shepherd: Vec2,
    pub goal: Vec2,
    pub constants: SimConstants,
    pub tick: usize,
    rng: ChaCha8Rng,
}

impl SimState {
    /// Builds a state from explicit positions; headings start at zero.
    pub fn new(
        sheep: Vec<Vec2>,
        profiles: Vec<AgentProfile>,
        shepherd: Vec2,
        goal: Vec2,
        constants: SimConstants,
        seed: u64,
    ) -> Self {
        assert_eq!(sheep.len(), profiles.len(), "one profile per sheep");
        SimState {
            headings: vec![Vec2::ZERO; sheep.len()],
            sheep,
            profiles,
            shepherd,
            goal,
            constants,
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn n_sheep(&self) -> usize {
        self.sheep.len()
    }

    pub fn global_centre(&self) -> Vec2 {
        centroid(&self.sheep)
    }

    fn sees_shepherd(&self, i: usize) -> bool {
        let c = &self.constants;
        let away = self.shepherd - self.sheep[i];
        if away.norm() > c.r_shepherd_detect {
            return false;
        }
        if c.blind_angle_behind_beta > 0.0 && self.headings[i] != Vec2::ZERO {
            let behind = -self.headings[i];
            let off = behind.dot(away.unit_or_zero()).clamp(-1.0, 1.0).acos();
            if off < c.blind_angle_behind_beta / 2.0 {
                return false;
            }
        }
        true
    }

    fn local_centre(&self, i: usize) -> Option<Vec2> {
        let k = self.constants.n_neighbours.min(self.n_sheep().saturating_sub(1));
        if k == 0 {
            return None;
        }
        let me = self.sheep[i];
        if k + 1 == self.n_sheep() {
            let total = self.sheep.iter().fold(Vec2::ZERO, |a, &p| a + p);
            return Some((total - me) * (1.0 / k as f64));
        }
        let mut others: Vec<(f64, usize)> = (0..self.n_sheep())
            .filter(|&j| j != i)
            .map(|j| (self.sheep[j].distance(me), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let near: Vec<Vec2> = others[..k].iter().map(|&(_, j)| self.sheep[j]).collect();
        Some(centroid(&near))
    }

    fn repulsion(&self, i: usize) -> Vec2 {
        let me = self.sheep[i];
        let r = self.constants.r_agent_repulse;
        let mut acc = Vec2::ZERO;
        for (j, &p) in self.sheep.iter().enumerate() {
            if j != i && me.distance(p) < r {
                acc += (me - p).unit_or_zero();
            }
        }
        acc.unit_or_zero()
    }
}

/// Places the flock and shepherd for a scenario.
///
/// Sheep start uniformly in the half-side square at the arena corner
/// opposite the goal, the shepherd at the corner nearest the goal. Profiles
/// are shuffled over agent ids with the run's random stream.
pub fn init_scenario(spec: &ScenarioSpec, seed: u64) -> Result<SimState> {
    spec.validate()?;
    let counts = spec.profile_counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut profiles: Vec<AgentProfile> = counts
        .iter()
        .flat_map(|&(label, n)| std::iter::repeat(AgentProfile::canonical(label)).take(n))
        .collect();
    profiles.shuffle(&mut rng);

    let l = spec.arena_side;
    let half = l / 2.0;
    let goal_corner = Vec2::new(
        if spec.goal.x >= half { l } else { 0.0 },
        if spec.goal.y >= half { l } else { 0.0 },
    );
    let start_corner = Vec2::new(l - goal_corner.x, l - goal_corner.y);
    let inward = Vec2::new(
        if start_corner.x == 0.0 { 1.0 } else { -1.0 },
        if start_corner.y == 0.0 { 1.0 } else { -1.0 },
    );
    let sheep: Vec<Vec2> = (0..spec.n_sheep)
        .map(|_| {
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            start_corner + Vec2::new(inward.x * u * half, inward.y * v * half)
        })
        .collect();

    let mut state = SimState::new(
        sheep,
        profiles,
        goal_corner,
        spec.goal,
        spec.sim_constants.clone(),
        seed,
    );
    state.rng = rng;
    Ok(state)
}

/// Heading chosen by sheep `i` for the next tick, before scaling by speed.
///
/// `noise` is the unit noise direction drawn for this sheep. When the
/// shepherd is out of sight only sheep-sheep repulsion acts.
pub fn sheep_force(state: &SimState, i: usize, noise: Vec2) -> Vec2 {
    let c = &state.constants;
    let p = &state.profiles[i];
    let repel = state.repulsion(i);
    if !state.sees_shepherd(i) {
        return (repel * p.w_pipi).unit_or_zero();
    }
    let me = state.sheep[i];
    let cohesion = state
        .local_centre(i)
        .map(|lcm| (lcm - me).unit_or_zero())
        .unwrap_or(Vec2::ZERO);
    let flee = (me - state.shepherd).unit_or_zero();
    let h = state.headings[i] * c.inertia
        + cohesion * p.w_lcm
        + repel * p.w_pipi
        + flee * p.w_beta
        + noise.unit_or_zero() * c.noise_scale;
    h.unit_or_zero()
}

/// Distance within which every sheep must lie of the flock centre for the
/// shepherd to drive rather than collect.
pub fn flock_radius(r_agent_repulse: f64, n: usize) -> f64 {
    r_agent_repulse * (n as f64).powf(2.0 / 3.0)
}

/// Chooses the shepherd's behaviour and its steering point.
pub fn shepherd_step(state: &SimState) -> (ShepherdMode, Vec2) {
    let r_a = state.constants.r_agent_repulse;
    let n = state.n_sheep();
    let gcm = state.global_centre();
    let mut far = 0;
    let mut far_d = f64::NEG_INFINITY;
    for (i, p) in state.sheep.iter().enumerate() {
        let d = p.distance(gcm);
        if d > far_d {
            far_d = d;
            far = i;
        }
    }
    if far_d <= flock_radius(r_a, n) {
        let behind = (gcm - state.goal).unit_or_zero();
        (ShepherdMode::Drive, gcm + behind * (r_a * (n as f64).sqrt()))
    } else {
        let straggler = state.sheep[far];
        let behind = (straggler - gcm).unit_or_zero();
        (ShepherdMode::Collect, straggler + behind * r_a)
    }
}

/// Advances the run by one tick.
///
/// All sheep move from the pre-step snapshot, then the shepherd reacts to
/// the new flock. Random draws are taken per sheep in index order.
pub fn step(state: &SimState) -> SimState {
    let mut next = state.clone();
    let c = &state.constants;
    let speed_beta = c.base_speed_beta;

    for i in 0..state.n_sheep() {
        let noise = Vec2::from_angle(next.rng.gen::<f64>() * std::f64::consts::TAU);
        let graze_draw: f64 = next.rng.gen();
        let graze_dir = Vec2::from_angle(next.rng.gen::<f64>() * std::f64::consts::TAU);

        let speed = state.profiles[i].speed_ratio * speed_beta;
        let mut heading = sheep_force(state, i, noise);
        if heading == Vec2::ZERO
            && !state.sees_shepherd(i)
            && graze_draw < c.grazing_probability
        {
            heading = graze_dir;
        }
        next.sheep[i] = state.sheep[i] + heading * speed;
        if heading != Vec2::ZERO {
            next.headings[i] = heading;
        }
    }

    let (_, target) = shepherd_step(&next);
    let freeze = c.shepherd_freeze_factor * c.r_agent_repulse;
    let blocked = next
        .sheep
        .iter()
        .any(|p| p.distance(state.shepherd) < freeze);
    if !blocked {
        let to = target - state.shepherd;
        let d = to.norm();
        if d > 0.0 {
            next.shepherd = state.shepherd + to.unit_or_zero() * d.min(speed_beta);
        }
    }
    next.tick += 1;
    next
}

/// Steps `state` until the flock centre is within `goal_radius` of the
/// goal or `max_ticks` steps have been taken. Returns the visited states'
/// positions (initial state included) and whether the goal was reached.
pub fn run_from(
    mut state: SimState,
    max_ticks: usize,
    goal_radius: f64,
) -> (Vec<Vec<Vec2>>, bool) {
    let snapshot = |s: &SimState| {
        let mut row = s.sheep.clone();
        row.push(s.shepherd);
        row
    };
    let at_goal = |s: &SimState| s.global_centre().distance(s.goal) <= goal_radius;
    let mut frames = vec![snapshot(&state)];
    let mut reached = at_goal(&state);
    while !reached && state.tick < max_ticks {
        state = step(&state);
        frames.push(snapshot(&state));
        reached = at_goal(&state);
    }
    (frames, reached)
}

/// Simulates one scenario from a seed.
pub fn run_scenario(spec: &ScenarioSpec, seed: u64) -> Result<Trajectory> {
    let state = init_scenario(spec, seed)?;
    let labels = state.profiles.iter().map(|p| p.label).collect();
    let (positions, reached_goal) = run_from(state, spec.max_ticks, spec.goal_radius);
    Ok(Trajectory {
        positions,
        dt: 1.0,
        profile_labels: labels,
        scenario_id: spec.id,
        seed,
        reached_goal,
    })
}
