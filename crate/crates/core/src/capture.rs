//! Capture-stage potential field: attraction to the assigned slot, obstacle
//! repulsion and mutual exclusion between defenders.

use serde::{Deserialize, Serialize};

use crate::geometry::{saturate, Obstacle, Vec2};

/// Magnitude cap of the exclusion force, as a multiple of its gain.
pub const EXCLUSION_CAP: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaptureGains {
    pub k_a: f64,
    pub k_r: f64,
    pub gamma_cap: f64,
    pub k_int: f64,
    pub gamma_int: f64,
}

impl Default for CaptureGains {
    fn default() -> Self {
        CaptureGains {
            k_a: 8.0,
            k_r: 2.0,
            gamma_cap: 8.0,
            k_int: 1.0,
            gamma_int: 1.0,
        }
    }
}

impl CaptureGains {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("k_a", self.k_a),
            ("k_r", self.k_r),
            ("gamma_cap", self.gamma_cap),
            ("k_int", self.k_int),
            ("gamma_int", self.gamma_int),
        ];
        match fields.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            Some((name, v)) => Err(format!("capture gain {name} = {v} must be positive")),
            None => Ok(()),
        }
    }
}

pub fn attractive_force(x: Vec2, target: Vec2, k_a: f64) -> Vec2 {
    (target - x) * k_a
}

/// Obstacle repulsion with support `d < gamma`, `d` the boundary distance.
/// The caller must pass a snapshot at the current time for moving obstacles.
pub fn repulsive_force(x: Vec2, obstacle: &Obstacle, k_r: f64, gamma: f64) -> Vec2 {
    let (d, p_min) = obstacle.boundary_distance(x);
    if d >= gamma || d <= 0.0 {
        return Vec2::ZERO;
    }
    (x - p_min) * (k_r * (1.0 / d - 1.0 / gamma) / (d * d * d))
}

pub fn inter_defender_force(xi: Vec2, xj: Vec2, k_int: f64, gamma_int: f64) -> Vec2 {
    let offset = xi - xj;
    let rho = offset.norm();
    if rho >= gamma_int {
        return Vec2::ZERO;
    }
    if rho == 0.0 {
        return Vec2::ZERO;
    }
    let f = offset * (k_int * (1.0 / rho - 1.0 / gamma_int));
    saturate(f, EXCLUSION_CAP * k_int)
}

/// Saturated capture command for one defender; `peers` excludes itself.
pub fn capture_input(
    x: Vec2,
    target: Vec2,
    obstacles: &[Obstacle],
    peers: &[Vec2],
    gains: &CaptureGains,
    v_max: f64,
) -> Vec2 {
    let mut f = attractive_force(x, target, gains.k_a);
    for o in obstacles {
        f += repulsive_force(x, o, gains.k_r, gains.gamma_cap);
    }
    for &p in peers {
        f += inter_defender_force(x, p, gains.k_int, gains.gamma_int);
    }
    saturate(f, v_max)
}
