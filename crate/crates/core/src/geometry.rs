//! Planar vector algebra, defense-line frames, obstacle distance queries and
//! the velocity saturation operator.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// A point or vector in the ground frame, in meters (or meters/second).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn polar(radius: f64, theta: f64) -> Self {
        Vec2::from_angle(theta) * radius
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| self / n)
    }

    /// Quarter turn `(-y, x)`, i.e. multiplication by `[[0, -1], [1, 0]]`.
    ///
    /// Applied to the direction `B_i -> B_{i+1}` of a counter-clockwise fence
    /// edge this yields the inward normal.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        rhs * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::iter::Sum for Vec2 {
    fn sum<I: Iterator<Item = Vec2>>(iter: I) -> Vec2 {
        iter.fold(Vec2::ZERO, Add::add)
    }
}

/// Clamp the norm of `v` to `bound`, preserving direction.
///
/// The zero vector maps to itself.
pub fn saturate(v: Vec2, bound: f64) -> Vec2 {
    let n = v.norm();
    if n <= bound || n == 0.0 {
        return v;
    }
    let mut out = v * (bound / n);
    // rounding can leave the scaled norm an ulp or two above the bound
    while out.norm() > bound {
        out = out * (1.0 - f64::EPSILON);
    }
    out
}

/// Wrap an angle into `[-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    a
}

/// Local frame attached to a defense line.
///
/// `axis` is the unit direction `B_i -> B_{i+1}`; `normal` is the inward
/// normal `axis.perp()`. `theta` is the clockwise angle from the ground x-axis
/// to `axis`, which makes [`DefenseLineFrame::to_ground`] exactly the matrix
/// `[[cos θ, sin θ], [-sin θ, cos θ]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefenseLineFrame {
    pub origin: Vec2,
    pub axis: Vec2,
    pub theta: f64,
}

impl DefenseLineFrame {
    pub fn new(from: Vec2, to: Vec2) -> Result<Self, GeometryError> {
        let axis = (to - from).normalized().ok_or(GeometryError::DegenerateSegment)?;
        Ok(DefenseLineFrame {
            origin: from,
            axis,
            theta: normalize_angle(-axis.angle()),
        })
    }

    pub fn normal(&self) -> Vec2 {
        self.axis.perp()
    }

    /// Map frame coordinates `(along, inward)` to a ground vector.
    pub fn to_ground(&self, local: Vec2) -> Vec2 {
        let (s, c) = self.theta.sin_cos();
        Vec2::new(c * local.x + s * local.y, -s * local.x + c * local.y)
    }

    /// Inverse of [`DefenseLineFrame::to_ground`].
    pub fn to_local(&self, ground: Vec2) -> Vec2 {
        let (s, c) = self.theta.sin_cos();
        Vec2::new(c * ground.x - s * ground.y, s * ground.x + c * ground.y)
    }

    /// Signed distance of `p` from the line, positive on the inward side.
    pub fn signed_offset(&self, p: Vec2) -> f64 {
        (p - self.origin).dot(self.normal())
    }

    /// Coordinate of `p` along the line, measured from the origin beacon.
    pub fn along(&self, p: Vec2) -> f64 {
        (p - self.origin).dot(self.axis)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Static,
    Dynamic,
}

/// Circular obstacle. Dynamic obstacles follow a piecewise-linear waypoint
/// script `(time, position)`; their velocity is constant between waypoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    pub center: Vec2,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<(f64, Vec2)>,
}

impl Obstacle {
    pub fn fixed(center: Vec2, radius: f64) -> Self {
        Obstacle {
            kind: ObstacleKind::Static,
            center,
            radius,
            waypoints: Vec::new(),
        }
    }

    pub fn scripted(radius: f64, waypoints: Vec<(f64, Vec2)>) -> Self {
        let center = waypoints.first().map(|w| w.1).unwrap_or_default();
        Obstacle {
            kind: ObstacleKind::Dynamic,
            center,
            radius,
            waypoints,
        }
    }

    /// Position at time `t` according to the script; static obstacles and
    /// empty scripts return the stored center.
    pub fn position_at(&self, t: f64) -> Vec2 {
        if self.kind == ObstacleKind::Static || self.waypoints.is_empty() {
            return self.center;
        }
        let w = &self.waypoints;
        if t <= w[0].0 {
            return w[0].1;
        }
        for pair in w.windows(2) {
            let (t0, p0) = pair[0];
            let (t1, p1) = pair[1];
            if t < t1 {
                let s = (t - t0) / (t1 - t0);
                return p0 + (p1 - p0) * s;
            }
        }
        w[w.len() - 1].1
    }

    pub fn velocity_at(&self, t: f64) -> Vec2 {
        if self.kind == ObstacleKind::Static {
            return Vec2::ZERO;
        }
        for pair in self.waypoints.windows(2) {
            let (t0, p0) = pair[0];
            let (t1, p1) = pair[1];
            if t >= t0 && t < t1 {
                return (p1 - p0) / (t1 - t0);
            }
        }
        Vec2::ZERO
    }

    /// Static copy at the scripted position of time `t`.
    pub fn snapshot(&self, t: f64) -> Obstacle {
        Obstacle::fixed(self.position_at(t), self.radius)
    }

    /// Distance from `x` to the boundary and the nearest boundary point.
    ///
    /// The distance is negative when `x` is inside the obstacle. At the exact
    /// center the nearest point is taken along +x.
    pub fn boundary_distance(&self, x: Vec2) -> (f64, Vec2) {
        let offset = x - self.center;
        let dir = offset.normalized().unwrap_or(Vec2::new(1.0, 0.0));
        (offset.norm() - self.radius, self.center + dir * self.radius)
    }
}

/// Distance to the obstacle boundary and the closest boundary point;
/// penetrating positions are reported as an error carrying the depth.
pub fn min_distance_to_obstacle(x: Vec2, obstacle: &Obstacle) -> Result<(f64, Vec2), GeometryError> {
    let (d, p) = obstacle.boundary_distance(x);
    if d < 0.0 {
        Err(GeometryError::Penetration { depth: -d })
    } else {
        Ok((d, p))
    }
}

/// Line-of-sight quantities of one attacker/defender pair against a defense
/// line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LosGeometry {
    /// Unsigned distance of the attacker to the line.
    pub l_a: f64,
    /// Unsigned distance of the defender to the line.
    pub l_d: f64,
    /// Angle between the line of sight and the line, in `[0, pi]`.
    pub phi: f64,
    /// `pi/2 - phi`.
    pub e_phi: f64,
    /// Attacker on the inward side of `B_i -> B_{i+1}`.
    pub attacker_inside: bool,
    /// Defender on the inward side of `B_i -> B_{i+1}`.
    pub defender_inside: bool,
}

impl LosGeometry {
    /// Attacker and defender strictly on opposite sides of the line.
    pub fn opposite_sides(&self) -> bool {
        self.l_a > 0.0 && self.l_d > 0.0 && self.attacker_inside != self.defender_inside
    }
}

pub fn los_geometry(xa: Vec2, xd: Vec2, bi: Vec2, bnext: Vec2) -> Result<LosGeometry, GeometryError> {
    let frame = DefenseLineFrame::new(bi, bnext)?;
    let los = (xa - xd).normalized().ok_or(GeometryError::CoincidentPlayers)?;
    let sa = frame.signed_offset(xa);
    let sd = frame.signed_offset(xd);
    let phi = PI - los.dot(frame.axis).clamp(-1.0, 1.0).acos();
    Ok(LosGeometry {
        l_a: sa.abs(),
        l_d: sd.abs(),
        phi,
        e_phi: PI / 2.0 - phi,
        attacker_inside: sa > 0.0,
        defender_inside: sd > 0.0,
    })
}

/// Closest point to `p` on segment `a`-`b`.
pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * s
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.distance(closest_point_on_segment(p, a, b))
}
