//! Attacker behaviours: seeking the protected area, evading nearby
//! defenders, random heading holds and fixed velocity scripts.
//!
//! Randomness comes from a ChaCha8 stream seeded with `seed_from_u64`, which
//! produces the same sequence on every platform.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capture::repulsive_force;
use crate::geometry::{saturate, Obstacle, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Seeker,
    EvadeRandom,
    Scripted,
}

/// Constant velocity held for `duration` seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptLeg {
    pub duration: f64,
    pub velocity: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackerConfig {
    pub v_max: f64,
    pub escape_range: f64,
    pub seed: u64,
    /// Steps between heading draws of the random walk.
    pub resample_period: u32,
    pub capture_strategy: StrategyKind,
    pub escort_strategy: StrategyKind,
    pub k_evade: f64,
    pub k_obstacle: f64,
    pub obstacle_range: f64,
    /// Interception distance: the attacker cannot close in on a defender
    /// nearer than this.
    pub contact_radius: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<ScriptLeg>,
}

impl Default for AttackerConfig {
    fn default() -> Self {
        AttackerConfig {
            v_max: 1.2,
            escape_range: 0.8,
            seed: 1,
            resample_period: 20,
            capture_strategy: StrategyKind::Seeker,
            escort_strategy: StrategyKind::EvadeRandom,
            k_evade: 1.0,
            k_obstacle: 2.0,
            obstacle_range: 2.0,
            contact_radius: 0.1,
            script: Vec::new(),
        }
    }
}

impl AttackerConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("v_max", self.v_max),
            ("escape_range", self.escape_range),
            ("k_evade", self.k_evade),
            ("k_obstacle", self.k_obstacle),
            ("obstacle_range", self.obstacle_range),
            ("contact_radius", self.contact_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("attacker {name} = {v} must be positive"));
            }
        }
        if self.resample_period == 0 {
            return Err("attacker resample_period must be at least 1".into());
        }
        if self
            .script
            .iter()
            .any(|l| !(l.duration >= 0.0) || !l.velocity.is_finite())
        {
            return Err("attacker script legs need non-negative durations and finite velocities".into());
        }
        Ok(())
    }
}

/// Mutable random-walk state, owned by the engine.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackerState {
    rng: ChaCha8Rng,
    heading: f64,
    steps_left: u32,
}

impl AttackerState {
    pub fn new(seed: u64) -> Self {
        AttackerState {
            rng: ChaCha8Rng::seed_from_u64(seed),
            heading: 0.0,
            steps_left: 0,
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }
}

fn obstacle_push(x: Vec2, obstacles: &[Obstacle], config: &AttackerConfig) -> Vec2 {
    obstacles
        .iter()
        .map(|o| repulsive_force(x, o, config.k_obstacle, config.obstacle_range))
        .sum()
}

/// Full-speed run at the protected area, bent by obstacle repulsion.
pub fn seeker_input(xa: Vec2, x_pc: Vec2, obstacles: &[Obstacle], config: &AttackerConfig) -> Vec2 {
    let pull = (x_pc - xa).normalized().map_or(Vec2::ZERO, |d| d * config.v_max);
    saturate(pull + obstacle_push(xa, obstacles, config), config.v_max)
}

/// Evasion from defenders within the escape range, otherwise a heading held
/// for `resample_period` steps and then redrawn uniformly.
pub fn evade_or_random(
    xa: Vec2,
    defenders: &[Vec2],
    obstacles: &[Obstacle],
    config: &AttackerConfig,
    state: &mut AttackerState,
) -> Vec2 {
    let mut push = Vec2::ZERO;
    let mut threatened = false;
    for &xd in defenders {
        let away = xa - xd;
        let d = away.norm();
        if d < config.escape_range && d > 0.0 {
            threatened = true;
            push += away * (config.k_evade / (d * d * d));
        }
    }
    if threatened {
        return saturate(push + obstacle_push(xa, obstacles, config), config.v_max);
    }
    if state.steps_left == 0 {
        state.heading = state.rng.gen_range(0.0..TAU);
        state.steps_left = config.resample_period;
    }
    state.steps_left -= 1;
    saturate(Vec2::polar(config.v_max, state.heading), config.v_max)
}

/// Defenders are solid at `radius`: the attacker's speed toward each
/// defender is capped so that one step of length `dt` cannot end inside it.
pub fn block_contacts(xa: Vec2, u: Vec2, defenders: &[Vec2], radius: f64, dt: f64) -> Vec2 {
    let mut out = u;
    for &xd in defenders {
        let Some(n) = (xd - xa).normalized() else {
            continue;
        };
        let allowed = ((xa.distance(xd) - radius) / dt).max(0.0);
        let into = out.dot(n);
        if into > allowed {
            out -= n * (into - allowed);
        }
    }
    out
}

/// Velocity of the leg active at time `t`; zero after the script ends.
pub fn scripted_input(t: f64, script: &[ScriptLeg], v_max: f64) -> Vec2 {
    let mut start = 0.0;
    for leg in script {
        if t < start + leg.duration {
            return saturate(leg.velocity, v_max);
        }
        start += leg.duration;
    }
    Vec2::ZERO
}
