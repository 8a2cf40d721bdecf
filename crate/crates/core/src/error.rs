use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("defense line endpoints coincide")]
    DegenerateSegment,
    #[error("attacker and defender positions coincide")]
    CoincidentPlayers,
    #[error("position penetrates obstacle by {depth} m")]
    Penetration { depth: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReachError {
    #[error("speed ratio {0} outside (0, 1)")]
    SpeedRatio(f64),
    #[error("line-of-sight angle {0} makes sin(phi) vanish")]
    SingularAngle(f64),
    #[error("distances must be non-negative (l_a = {l_a}, l_d = {l_d})")]
    NegativeDistance { l_a: f64, l_d: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormationError {
    #[error("invalid formation parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible fence: eps_D = {eps_d} does not exceed the critical distance {l_xi_min}")]
    Infeasible { eps_d: f64, l_xi_min: f64 },
    #[error("fence apothem {apothem} does not exceed the pursuit radius {eps_p}")]
    FenceTooSmall { apothem: f64, eps_p: f64 },
    #[error("beacons do not form a convex counter-clockwise polygon")]
    NonConvexFence,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignmentError {
    #[error("cost matrix is not square ({rows} rows, row {row} has {cols} columns)")]
    NonSquare { rows: usize, row: usize, cols: usize },
    #[error("overlap tensor does not match the cost matrix size {0}")]
    OverlapShape(usize),
    #[error("goal {0} lies inside an obstacle")]
    GoalBlocked(crate::Vec2),
    #[error("no collision-free path found")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EscortError {
    #[error("normalized error {ratio} left the funnel (-{lower}, {upper})")]
    FunnelViolation { ratio: f64, lower: f64, upper: f64 },
    #[error("line-of-sight error {e_phi} rad outside the admissible band {limit} rad")]
    AngleOutOfBand { e_phi: f64, limit: f64 },
    #[error("channel normalizer {0} is singular")]
    SingularChannel(f64),
    #[error("beacon speed bound infeasible: alpha_hat {alpha_hat} <= V_A/V_D = {ratio}")]
    BeaconBound { alpha_hat: f64, ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite state at t = {t}: {what}")]
    NonFinite { t: f64, what: String },
    #[error("step called in terminal stage")]
    Terminal,
    #[error(transparent)]
    Formation(#[from] FormationError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
}
