use serde::{Deserialize, Serialize};

use crate::escort_game::EdgeTelemetry;
use crate::geometry::Vec2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureReason {
    FunnelViolation { defender: usize, detail: String },
    JudgmentNonPositive { edge: usize, j: f64 },
    FenceBreach,
    ObstaclePenetration { agent: String, obstacle: usize, depth: f64 },
    ProtectedAreaEntered,
    BeaconSpeedExceeded { speed: f64, bound: f64 },
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::FunnelViolation { defender, detail } => {
                write!(f, "defender {defender} left its funnel: {detail}")
            }
            FailureReason::JudgmentNonPositive { edge, j } => write!(f, "judgment on edge {edge} dropped to {j}"),
            FailureReason::FenceBreach => write!(f, "attacker left the fence"),
            FailureReason::ObstaclePenetration { agent, obstacle, depth } => {
                write!(f, "{agent} penetrated obstacle {obstacle} by {depth} m")
            }
            FailureReason::ProtectedAreaEntered => write!(f, "attacker entered the protected area"),
            FailureReason::BeaconSpeedExceeded { speed, bound } => {
                write!(f, "fence speed {speed} above bound {bound}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Capture,
    Escort,
    Done,
    Failed { reason: FailureReason },
    Timeout,
}

impl Stage {
    pub fn label(&self) -> &'static str {
        match self {
            Stage::Capture => "capture",
            Stage::Escort => "escort",
            Stage::Done => "done",
            Stage::Failed { .. } => "failed",
            Stage::Timeout => "timeout",
        }
    }

    pub fn from_label(label: &str) -> Option<Stage> {
        Some(match label {
            "capture" => Stage::Capture,
            "escort" => Stage::Escort,
            "done" => Stage::Done,
            "timeout" => Stage::Timeout,
            _ => return None,
        })
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self, Stage::Capture | Stage::Escort)
    }
}

/// State at time `t` together with the commands applied over the following
/// step. The last record of a run carries zero commands.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub stage: Stage,
    pub attacker: Vec2,
    pub attacker_u: Vec2,
    pub defenders: Vec<Vec2>,
    pub defender_u: Vec<Vec2>,
    pub beacons: Vec<Vec2>,
    /// Fence edge guarded by each defender.
    pub edge_of: Vec<usize>,
    pub pc_center: Vec2,
    pub v_fc: Vec2,
    /// Per defender, present during the escort.
    pub channels: Option<Vec<EdgeTelemetry>>,
    /// Judgment function of each defender against its edge at the design
    /// ratio; NaN when undefined.
    pub j: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<StepRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Minimum judgment over edges and escort steps.
    pub min_j: f64,
    /// Maximum `|ẽ|/ρ` over channels and escort steps.
    pub max_occupancy: f64,
    /// Smallest agent-to-obstacle boundary distance.
    pub min_obstacle_clearance: f64,
    /// Maximum of `(V_A + |v_Fc|)/(V_D − |v_Fc|)` over escort steps.
    pub max_speed_ratio: f64,
    pub max_fence_speed: f64,
}

impl Default for Metrics {
    fn default() -> Self {
        Metrics {
            min_j: f64::INFINITY,
            max_occupancy: 0.0,
            min_obstacle_clearance: f64::INFINITY,
            max_speed_ratio: 0.0,
            max_fence_speed: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub stage: Stage,
    pub t_end: f64,
    pub t_f1: Option<f64>,
    pub t_f2: Option<f64>,
    pub pc_updates: u32,
    pub steps: usize,
    pub metrics: Metrics,
}

impl Outcome {
    pub fn succeeded(&self) -> bool {
        self.stage == Stage::Done
    }
}
