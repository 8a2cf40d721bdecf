//! Reachability of the attacker against one or more defenders.
//!
//! The attacker reaches a point `p` no later than defender `D` iff
//! `|x_A - p| <= alpha |x_D - p|`; for `alpha < 1` the boundary of that set is
//! an Apollonius circle. The judgment function `J` is the closed-form sign
//! test for whether that disc crosses a straight defense line.

use crate::error::ReachError;
use crate::geometry::{closest_point_on_segment, Vec2};

/// `|J|` below this is classified as lying on the barrier.
pub const BARRIER_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApolloniusCircle {
    pub center: Vec2,
    pub radius: f64,
}

impl ApolloniusCircle {
    pub fn contains(&self, p: Vec2) -> bool {
        p.distance(self.center) <= self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameTag {
    DefenderWin,
    OnBarrier,
    AttackerWin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameStatus {
    pub tag: GameTag,
    pub j: f64,
    pub risk_margin: f64,
}

fn check_alpha(alpha: f64) -> Result<(), ReachError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ReachError::SpeedRatio(alpha))
    }
}

fn check_game_args(l_a: f64, l_d: f64, phi: f64, alpha: f64) -> Result<f64, ReachError> {
    check_alpha(alpha)?;
    if !(l_a >= 0.0 && l_d >= 0.0) {
        return Err(ReachError::NegativeDistance { l_a, l_d });
    }
    let s = phi.sin();
    if !(phi > 0.0 && phi < std::f64::consts::PI) || s <= 0.0 {
        return Err(ReachError::SingularAngle(phi));
    }
    Ok(s)
}

pub fn apollonius_circle(xa: Vec2, xd: Vec2, alpha: f64) -> Result<ApolloniusCircle, ReachError> {
    check_alpha(alpha)?;
    if xa == xd {
        return Err(crate::error::GeometryError::CoincidentPlayers.into());
    }
    let k = 1.0 - alpha * alpha;
    Ok(ApolloniusCircle {
        center: (xa - xd * (alpha * alpha)) / k,
        radius: alpha / k * xd.distance(xa),
    })
}

/// `J = l_a (1 - a/sin phi) - l_d (a/sin phi - a^2)`; positive when the
/// defender can always intercept before the line is reached.
pub fn judgment(l_a: f64, l_d: f64, phi: f64, alpha: f64) -> Result<f64, ReachError> {
    let s = check_game_args(l_a, l_d, phi, alpha)?;
    Ok(l_a * (1.0 - alpha / s) - l_d * (alpha / s - alpha * alpha))
}

/// Clearance between the Apollonius disc and the line, `J / (1 - alpha^2)`.
pub fn risk_margin(l_a: f64, l_d: f64, phi: f64, alpha: f64) -> Result<f64, ReachError> {
    Ok(judgment(l_a, l_d, phi, alpha)? / (1.0 - alpha * alpha))
}

/// Risk margin computed as `l_p - R_AC` from the disc center's distance to
/// the line and the disc radius. Algebraically identical to [`risk_margin`].
pub fn risk_margin_from_disc(l_a: f64, l_d: f64, phi: f64, alpha: f64) -> Result<f64, ReachError> {
    let s = check_game_args(l_a, l_d, phi, alpha)?;
    let k = 1.0 - alpha * alpha;
    let l_p = alpha * alpha / k * l_d + l_a / k;
    let separation = (l_a + l_d) / s;
    let r_ac = alpha / k * separation;
    Ok(l_p - r_ac)
}

pub fn game_status(l_a: f64, l_d: f64, phi: f64, alpha: f64) -> Result<GameStatus, ReachError> {
    let j = judgment(l_a, l_d, phi, alpha)?;
    let tag = if j > BARRIER_TOLERANCE {
        GameTag::DefenderWin
    } else if j < -BARRIER_TOLERANCE {
        GameTag::AttackerWin
    } else {
        GameTag::OnBarrier
    };
    Ok(GameStatus {
        tag,
        j,
        risk_margin: j / (1.0 - alpha * alpha),
    })
}

/// The two necessary conditions for a defender win:
/// the line-of-sight angle lies in `[pi/2 - acos a, pi/2 + acos a]`, and
/// `l_d < l_a (sin phi - a) / (a (1 - a sin phi))`.
pub fn conditions(l_a: f64, l_d: f64, phi: f64, alpha: f64) -> Result<(bool, bool), ReachError> {
    let s = check_game_args(l_a, l_d, phi, alpha)?;
    let half_band = alpha.acos();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let p = phi.abs();
    let cond1 = p >= half_pi - half_band && p <= half_pi + half_band;
    let cond2 = l_d < l_a * (s - alpha) / (alpha * (1.0 - alpha * s));
    Ok((cond1, cond2))
}

/// Membership of `p` in the attacker's combined reachable set.
pub fn reachable_set_contains(p: Vec2, xa: Vec2, defenders: &[Vec2], alpha: f64) -> bool {
    let da = xa.distance(p);
    defenders.iter().all(|xd| da <= alpha * xd.distance(p))
}

/// Parameter interval `[t0, t1]` of segment `a + t (b - a)`, `t in [0, 1]`,
/// that lies strictly inside `disc`; tangency and misses return `None`.
fn disc_segment_interval(disc: &ApolloniusCircle, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
    let ab = b - a;
    let len = ab.norm();
    let dir = ab / len;
    let foot = (disc.center - a).dot(dir);
    let dist = (disc.center - a).cross(dir).abs();
    if disc.radius - dist <= BARRIER_TOLERANCE {
        return None;
    }
    let half = (disc.radius * disc.radius - dist * dist).sqrt();
    let t0 = ((foot - half) / len).max(0.0);
    let t1 = ((foot + half) / len).min(1.0);
    (t0 < t1).then_some((t0, t1))
}

/// Whether the combined reachable set crosses any fence edge.
///
/// Each Apollonius disc meets a segment in an interval; the combined set
/// meets it iff the intervals of all defenders overlap with positive length.
/// Tangent contact counts as no breach.
pub fn fence_breach_possible(xa: Vec2, defenders: &[Vec2], fence: &[Vec2], alpha: f64) -> Result<bool, ReachError> {
    check_alpha(alpha)?;
    let discs = defenders
        .iter()
        .map(|&xd| apollonius_circle(xa, xd, alpha))
        .collect::<Result<Vec<_>, _>>()?;
    let n = fence.len();
    for i in 0..n {
        let (a, b) = (fence[i], fence[(i + 1) % n]);
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut open = true;
        for disc in &discs {
            match disc_segment_interval(disc, a, b) {
                Some((t0, t1)) => {
                    lo = lo.max(t0);
                    hi = hi.min(t1);
                    if lo >= hi {
                        open = false;
                        break;
                    }
                }
                None => {
                    open = false;
                    break;
                }
            }
        }
        if open && lo < hi {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Sampling version of [`fence_breach_possible`]: walks every edge at
/// `resolution` spacing and tests strict membership.
pub fn fence_breach_sampled(xa: Vec2, defenders: &[Vec2], fence: &[Vec2], alpha: f64, resolution: f64) -> bool {
    let n = fence.len();
    (0..n).any(|i| {
        let (a, b) = (fence[i], fence[(i + 1) % n]);
        let steps = (a.distance(b) / resolution).ceil().max(1.0) as usize;
        (0..=steps).any(|k| {
            let p = a + (b - a) * (k as f64 / steps as f64);
            let da = xa.distance(p);
            defenders.iter().all(|xd| da < alpha * xd.distance(p))
        })
    })
}

/// Smallest distance between the disc and the segment; negative when they
/// overlap.
pub fn disc_segment_clearance(disc: &ApolloniusCircle, a: Vec2, b: Vec2) -> f64 {
    disc.center.distance(closest_point_on_segment(disc.center, a, b)) - disc.radius
}
