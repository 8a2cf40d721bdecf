//! Reach-avoid herding of a single attacker by a defender team: pursuit-circle
//! capture, a virtual fence of beacons, and a funnel-constrained escort that
//! drives the fenced attacker to a target area.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod attacker;
pub mod capture;
pub mod error;
pub mod escort_game;
pub mod escort_plan;
pub mod formation;
pub mod geometry;
pub mod reach_avoid;
pub mod sim;

pub use error::{AssignmentError, EscortError, FormationError, GeometryError, ReachError, SimError};
pub use geometry::{saturate, DefenseLineFrame, Obstacle, ObstacleKind, Vec2};
