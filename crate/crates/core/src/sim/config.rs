use serde::{Deserialize, Serialize};

use crate::attacker::AttackerConfig;
use crate::capture::CaptureGains;
use crate::error::SimError;
use crate::escort_game::GameLayerParams;
use crate::escort_plan::{beacon_speed_bound, PlanGains};
use crate::formation::{FormationParams, FormationSpec};
use crate::geometry::{Obstacle, ObstacleKind, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioGeometry {
    pub protected_center: Vec2,
    pub protected_radius: f64,
    pub target_center: Vec2,
    pub target_radius: f64,
    pub attacker_start: Vec2,
    /// Radius of the starting ring around the protected area, used when
    /// `defender_starts` is empty.
    pub defender_ring_radius: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub defender_starts: Vec<Vec2>,
    /// Skip the capture stage: defenders start on their slots around the
    /// attacker and the escort begins at t = 0.
    pub start_in_escort: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<Obstacle>,
}

impl Default for ScenarioGeometry {
    fn default() -> Self {
        ScenarioGeometry {
            protected_center: Vec2::new(5.0, 20.0),
            protected_radius: 2.0,
            target_center: Vec2::new(20.0, 20.0),
            target_radius: 1.5,
            attacker_start: Vec2::new(0.0, 0.0),
            defender_ring_radius: 8.0,
            defender_starts: Vec::new(),
            start_in_escort: false,
            obstacles: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssignmentConfig {
    pub clearance: f64,
    pub overlap_weight: f64,
}

impl Default for AssignmentConfig {
    fn default() -> Self {
        AssignmentConfig {
            clearance: crate::assignment::DEFAULT_CLEARANCE,
            overlap_weight: 1.0,
        }
    }
}

/// When the capture stage hands over to the escort.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrivalConfig {
    /// Every defender within this distance of its slot.
    pub tolerance: f64,
    /// Largest funnel occupancy `|ẽ|/ρ` allowed at the handover, with ρ = 1.
    pub max_occupancy: f64,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        ArrivalConfig {
            tolerance: 0.1,
            max_occupancy: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub max_time: f64,
    pub defender_speed: f64,
    pub formation: FormationSpec,
    pub capture: CaptureGains,
    pub game: GameLayerParams,
    pub plan: PlanGains,
    pub attacker: AttackerConfig,
    pub assignment: AssignmentConfig,
    pub arrival: ArrivalConfig,
    pub scenario: ScenarioGeometry,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.05,
            max_time: 200.0,
            defender_speed: 3.0,
            formation: FormationSpec::default(),
            capture: CaptureGains::default(),
            game: GameLayerParams::default(),
            plan: PlanGains::default(),
            attacker: AttackerConfig::default(),
            assignment: AssignmentConfig::default(),
            arrival: ArrivalConfig::default(),
            scenario: ScenarioGeometry::default(),
        }
    }
}

/// Quantities computed once from a validated configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derived {
    pub formation: FormationParams,
    pub beacon_bound: f64,
    pub speed_ratio: f64,
}

fn positive(name: &str, v: f64) -> Result<(), SimError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SimError::Config(format!("{name} = {v} must be positive")))
    }
}

impl SimConfig {
    /// Checks every parameter block and the feasibility of the formation and
    /// of the beacon speed bound.
    pub fn validate(&self) -> Result<Derived, SimError> {
        positive("dt", self.dt)?;
        if !(self.max_time >= 0.0 && self.max_time.is_finite()) {
            return Err(SimError::Config(format!(
                "max_time = {} must be non-negative",
                self.max_time
            )));
        }
        positive("defender_speed", self.defender_speed)?;
        self.capture.validate().map_err(SimError::Config)?;
        self.game.validate().map_err(SimError::Config)?;
        self.plan.validate().map_err(SimError::Config)?;
        self.attacker.validate().map_err(SimError::Config)?;
        positive("assignment.clearance", self.assignment.clearance)?;
        if !(self.assignment.overlap_weight >= 0.0) {
            return Err(SimError::Config(
                "assignment.overlap_weight must be non-negative".into(),
            ));
        }
        positive("arrival.tolerance", self.arrival.tolerance)?;
        if !(self.arrival.max_occupancy > 0.0 && self.arrival.max_occupancy < 1.0) {
            return Err(SimError::Config("arrival.max_occupancy must lie in (0, 1)".into()));
        }
        let s = &self.scenario;
        positive("scenario.protected_radius", s.protected_radius)?;
        positive("scenario.target_radius", s.target_radius)?;
        positive("scenario.defender_ring_radius", s.defender_ring_radius)?;
        if !s.defender_starts.is_empty() && s.defender_starts.len() != self.formation.n {
            return Err(SimError::Config(format!(
                "{} defender starts given for N = {}",
                s.defender_starts.len(),
                self.formation.n
            )));
        }
        for (k, o) in s.obstacles.iter().enumerate() {
            positive(&format!("obstacle {k} radius"), o.radius)?;
            if o.kind == ObstacleKind::Dynamic && o.waypoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(SimError::Config(format!("obstacle {k} waypoint times must increase")));
            }
        }
        for p in [s.protected_center, s.target_center, s.attacker_start]
            .iter()
            .chain(&s.defender_starts)
        {
            if !p.is_finite() {
                return Err(SimError::Config(format!("non-finite position {p}")));
            }
        }

        let formation = FormationParams::synthesize(&self.formation)?;
        let speed_ratio = self.attacker.v_max / self.defender_speed;
        let alpha_hat = self.formation.alpha_hat;
        if !(alpha_hat > speed_ratio) {
            return Err(SimError::Config(format!(
                "alpha_hat = {alpha_hat} must exceed the speed ratio V_A/V_D = {speed_ratio}"
            )));
        }
        let beacon_bound = beacon_speed_bound(self.defender_speed, self.attacker.v_max, alpha_hat)
            .map_err(|e| SimError::Config(e.to_string()))?;
        Ok(Derived {
            formation,
            beacon_bound,
            speed_ratio,
        })
    }

    pub fn defender_starts(&self) -> Vec<Vec2> {
        let s = &self.scenario;
        if !s.defender_starts.is_empty() {
            return s.defender_starts.clone();
        }
        let n = self.formation.n;
        (0..n)
            .map(|i| {
                s.protected_center + Vec2::polar(s.defender_ring_radius, i as f64 * std::f64::consts::TAU / n as f64)
            })
            .collect()
    }
}
