//! Escort plan layer: one translational velocity shared by every beacon,
//! from the summed potential field felt by the defenders and capped so the
//! fence motion never hands the attacker an advantage.

use serde::{Deserialize, Serialize};

use crate::capture::repulsive_force;
use crate::error::EscortError;
use crate::geometry::{saturate, Obstacle, Vec2};

/// Floor on the protected-area distance in the repulsion term.
const PROTECTED_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanGains {
    pub k_ta: f64,
    /// Repulsion gain of the protected area.
    pub k_pr: f64,
    pub k_r: f64,
    pub gamma_ect: f64,
}

impl Default for PlanGains {
    fn default() -> Self {
        PlanGains {
            k_ta: 0.05,
            k_pr: 5.0,
            k_r: 2.0,
            gamma_ect: 8.0,
        }
    }
}

impl PlanGains {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("k_ta", self.k_ta),
            ("k_pr", self.k_pr),
            ("k_r", self.k_r),
            ("gamma_ect", self.gamma_ect),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("plan gain {name} = {v} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeaconCommand {
    pub v_fc: Vec2,
    pub bound: f64,
}

/// Potential-field force on one defender. `obstacles` must already be
/// snapshots at the current time.
pub fn defender_plan_force(x: Vec2, x_tc: Vec2, x_pc: Vec2, obstacles: &[Obstacle], gains: &PlanGains) -> Vec2 {
    let away = x - x_pc;
    let d = away.norm().max(PROTECTED_FLOOR);
    let mut f = (x_tc - x) * gains.k_ta + away * (gains.k_pr / d.powi(4));
    for o in obstacles {
        f += repulsive_force(x, o, gains.k_r, gains.gamma_ect);
    }
    f
}

pub fn joint_force(defenders: &[Vec2], x_tc: Vec2, x_pc: Vec2, obstacles: &[Obstacle], gains: &PlanGains) -> Vec2 {
    defenders
        .iter()
        .map(|&x| defender_plan_force(x, x_tc, x_pc, obstacles, gains))
        .sum()
}

/// Largest common beacon speed that keeps the effective speed ratio below
/// the design ratio.
pub fn beacon_speed_bound(v_d: f64, v_a: f64, alpha_hat: f64) -> Result<f64, EscortError> {
    let ratio = v_a / v_d;
    if alpha_hat < ratio {
        return Err(EscortError::BeaconBound { alpha_hat, ratio });
    }
    let bound = ((alpha_hat * v_d - v_a) / (1.0 + alpha_hat)).min(v_a).max(0.0);
    if effective_ratio(v_d, v_a, bound) <= alpha_hat {
        return Ok(bound);
    }
    // the formula meets the ratio with equality and rounding can overshoot;
    // the ratio grows with the speed and holds at zero, so bisect
    let (mut lo, mut hi) = (0.0, bound);
    for _ in 0..128 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if effective_ratio(v_d, v_a, mid) <= alpha_hat {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn beacon_velocity(force: Vec2, bound: f64) -> BeaconCommand {
    BeaconCommand {
        v_fc: saturate(force, bound),
        bound,
    }
}

/// Effective speed ratio seen by a defender while the fence moves at `speed`.
pub fn effective_ratio(v_d: f64, v_a: f64, speed: f64) -> f64 {
    (v_a + speed) / (v_d - speed)
}
