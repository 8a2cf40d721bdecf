//! Escort game layer: each defender keeps its line-of-sight error and its
//! distance-to-line error inside a shrinking performance funnel, which keeps
//! its edge in the defender-win region.
//!
//! Conventions. In the frame of edge `i` the horizontal axis runs along
//! `B_i -> B_{i+1}` and the vertical channel is measured outward, away from
//! the fence interior: `l_d` is the defender's outward distance to the line
//! and `g_v` is its outward speed relative to the line. The horizontal error
//! is the along-line offset of the defender from the attacker.

use serde::{Deserialize, Serialize};

use crate::error::EscortError;
use crate::geometry::{los_geometry, saturate, DefenseLineFrame, Vec2};
use crate::reach_avoid::judgment;

/// Smallest admissible `normalizer · ρ` in the channel laws.
pub const SINGULAR_GUARD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameLayerParams {
    /// Split of the admissible distance band around `ℓ_D`.
    pub k_delta: f64,
    pub kappa: f64,
    pub k_inf: f64,
    pub k_v: f64,
    pub k_h: f64,
    /// Channel commands are relative to the translating line; add the
    /// fence velocity to get the ground command.
    pub fence_feedforward: bool,
}

impl Default for GameLayerParams {
    fn default() -> Self {
        GameLayerParams {
            k_delta: 0.5,
            kappa: 1.0,
            k_inf: 0.8,
            k_v: 2.0,
            k_h: 2.0,
            fence_feedforward: true,
        }
    }
}

impl GameLayerParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.k_delta > 0.0 && self.k_delta < 1.0) {
            return Err(format!("k_delta = {} must lie in (0, 1)", self.k_delta));
        }
        if !(self.k_inf > 0.0 && self.k_inf < 1.0) {
            return Err(format!("k_inf = {} must lie in (0, 1)", self.k_inf));
        }
        for (name, v) in [("kappa", self.kappa), ("k_v", self.k_v), ("k_h", self.k_h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} = {v} must be positive"));
            }
        }
        Ok(())
    }
}

/// `(cos e_φ − α̂)/(1 − α̂ cos e_φ)`, positive iff `|e_φ| < acos α̂`.
fn angle_factor(e_phi: f64, alpha_hat: f64) -> Result<f64, EscortError> {
    let c = e_phi.cos();
    let limit = alpha_hat.acos();
    if e_phi.abs() >= limit {
        return Err(EscortError::AngleOutOfBand { e_phi, limit });
    }
    Ok((c - alpha_hat) / (1.0 - alpha_hat * c))
}

/// Adaptive desired defender-to-line distance.
pub fn desired_distance(l_a: f64, e_phi: f64, k_delta: f64, alpha_hat: f64) -> Result<f64, EscortError> {
    Ok((1.0 - k_delta) * l_a / alpha_hat * angle_factor(e_phi, alpha_hat)?)
}

/// Which side of `ℓ_D` the vertical error started on; decides the
/// asymmetric funnel and the vertical normalizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerticalSide {
    Above,
    Below,
}

impl VerticalSide {
    pub fn from_initial_error(e_v: f64) -> Self {
        if e_v > 0.0 {
            VerticalSide::Above
        } else {
            VerticalSide::Below
        }
    }
}

/// Funnel `−lower·ρ < ẽ < upper·ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunnelBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FunnelBounds {
    pub const SYMMETRIC: FunnelBounds = FunnelBounds { lower: 1.0, upper: 1.0 };

    pub fn vertical(side: VerticalSide, k_delta: f64) -> Self {
        match side {
            VerticalSide::Above => FunnelBounds {
                lower: ((1.0 - k_delta) / k_delta).min(1.0),
                upper: 1.0,
            },
            VerticalSide::Below => FunnelBounds {
                lower: 1.0,
                upper: (k_delta / (1.0 - k_delta)).min(1.0),
            },
        }
    }
}

/// Horizontal and vertical normalizers `(g̃, f̃)`.
pub fn normalizers(
    l_a: f64,
    l_d: f64,
    e_phi: f64,
    k_delta: f64,
    alpha_hat: f64,
    side: VerticalSide,
) -> Result<(f64, f64), EscortError> {
    let psi_bar = alpha_hat.acos();
    let g = (l_d + l_a) * psi_bar.tan();
    let share = match side {
        VerticalSide::Above => k_delta,
        VerticalSide::Below => 1.0 - k_delta,
    };
    let f = angle_factor(e_phi, alpha_hat)? * share * l_a / alpha_hat;
    Ok((g, f))
}

pub fn ppf_rho(t: f64, kappa: f64, k_inf: f64) -> f64 {
    (1.0 - k_inf) * (-kappa * t).exp() + k_inf
}

pub fn ppf_rho_dot(t: f64, kappa: f64, k_inf: f64) -> f64 {
    -kappa * (1.0 - k_inf) * (-kappa * t).exp()
}

/// Inverse of the transformation function: maps `s = ẽ/ρ ∈ (−lower, upper)`
/// onto the real line. With unit bounds this is `artanh`.
pub fn transform_error(e_tilde: f64, rho: f64, bounds: FunnelBounds) -> Result<f64, EscortError> {
    let s = e_tilde / rho;
    if !(s > -bounds.lower && s < bounds.upper) {
        return Err(EscortError::FunnelViolation {
            ratio: s,
            lower: bounds.lower,
            upper: bounds.upper,
        });
    }
    if bounds == FunnelBounds::SYMMETRIC {
        return Ok(s.atanh());
    }
    Ok(0.5 * ((bounds.lower + s) / (bounds.upper - s)).ln())
}

/// The transformation function itself, `S(ε) = ẽ/ρ`.
pub fn transform_inverse(epsilon: f64, bounds: FunnelBounds) -> f64 {
    if bounds == FunnelBounds::SYMMETRIC {
        return epsilon.tanh();
    }
    let (p, m) = (epsilon.exp(), (-epsilon).exp());
    (bounds.upper * p - bounds.lower * m) / (p + m)
}

/// `dε/ds` at `s = ẽ/ρ`.
fn transform_slope(s: f64, bounds: FunnelBounds) -> f64 {
    0.5 * (bounds.lower + bounds.upper) / ((bounds.lower + s) * (bounds.upper - s))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelState {
    pub e: f64,
    pub normalizer: f64,
    pub e_tilde: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub bounds: FunnelBounds,
}

impl ChannelState {
    pub fn new(e: f64, normalizer: f64, rho: f64, bounds: FunnelBounds) -> Result<Self, EscortError> {
        if !(normalizer * rho > SINGULAR_GUARD) {
            return Err(EscortError::SingularChannel(normalizer * rho));
        }
        let e_tilde = e / normalizer;
        Ok(ChannelState {
            e,
            normalizer,
            e_tilde,
            rho,
            epsilon: transform_error(e_tilde, rho, bounds)?,
            bounds,
        })
    }

    /// `ẽ/ρ`, the funnel occupancy.
    pub fn occupancy(&self) -> f64 {
        self.e_tilde / self.rho
    }
}

/// Error rate that makes the transformed error obey `ε̇ = −gain·ε`.
pub fn desired_error_rate(
    state: &ChannelState,
    normalizer_dot: f64,
    rho_dot: f64,
    gain: f64,
) -> Result<f64, EscortError> {
    let scale = state.normalizer * state.rho;
    if !(scale > SINGULAR_GUARD) {
        return Err(EscortError::SingularChannel(scale));
    }
    let s = state.e / scale;
    let room = scale * scale / transform_slope(s, state.bounds);
    Ok((-gain * state.epsilon * room + state.e * (normalizer_dot * state.rho + state.normalizer * rho_dot)) / scale)
}

/// Outward speed command of the vertical channel.
pub fn vertical_control(
    state: &ChannelState,
    f_dot: f64,
    rho_dot: f64,
    ell_d_dot: f64,
    k_v: f64,
) -> Result<f64, EscortError> {
    Ok(desired_error_rate(state, f_dot, rho_dot, k_v)? + ell_d_dot)
}

/// Along-line speed command of the horizontal channel.
pub fn horizontal_control(
    state: &ChannelState,
    g_dot: f64,
    rho_dot: f64,
    attacker_dl_velocity: f64,
    k_h: f64,
) -> Result<f64, EscortError> {
    Ok(desired_error_rate(state, g_dot, rho_dot, k_h)? + attacker_dl_velocity)
}

/// Ground-frame command from the along-line and outward components.
pub fn escort_input(g_h: f64, g_v: f64, frame: &DefenseLineFrame, v_max: f64) -> Vec2 {
    saturate(frame.to_ground(Vec2::new(g_h, -g_v)), v_max)
}

/// Per-edge quantities the controller needs, measured on one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeMeasurement {
    pub frame: DefenseLineFrame,
    /// Inward distance of the attacker (negative once it is outside).
    pub l_a: f64,
    /// Outward distance of the defender (negative once it is inside).
    pub l_d: f64,
    pub phi: f64,
    pub e_phi: f64,
    pub e_h: f64,
    /// Attacker coordinate along the edge.
    pub attacker_along: f64,
}

pub fn measure_edge(xa: Vec2, xd: Vec2, bi: Vec2, bnext: Vec2) -> Result<EdgeMeasurement, EscortError> {
    let frame = DefenseLineFrame::new(bi, bnext).map_err(|_| EscortError::SingularChannel(0.0))?;
    let los = los_geometry(xa, xd, bi, bnext).map_err(|_| EscortError::SingularChannel(0.0))?;
    Ok(EdgeMeasurement {
        frame,
        l_a: frame.signed_offset(xa),
        l_d: -frame.signed_offset(xd),
        phi: los.phi,
        e_phi: los.e_phi,
        e_h: (xd - xa).dot(frame.axis),
        attacker_along: frame.along(xa),
    })
}

/// Exogenous signals of the previous step, differenced for the
/// feed-forward terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelMemory {
    pub side: VerticalSide,
    prev: Option<(f64, f64, f64, f64)>,
}

impl ChannelMemory {
    pub fn new(side: VerticalSide) -> Self {
        ChannelMemory { side, prev: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeTelemetry {
    pub e_h: f64,
    pub e_v: f64,
    pub e_tilde_h: f64,
    pub e_tilde_v: f64,
    pub rho: f64,
    pub eps_h: f64,
    pub eps_v: f64,
    pub g_h: f64,
    pub g_v: f64,
    /// Judgment function at the design ratio.
    pub j: f64,
    pub occupancy_h: f64,
    pub occupancy_v: f64,
}

/// One escort control step for the defender guarding `bi -> bnext`.
///
/// `t` is the time since the escort began. Exogenous derivatives are
/// backward differences over `dt` and vanish on the first call.
#[allow(clippy::too_many_arguments)]
pub fn edge_control(
    xa: Vec2,
    xd: Vec2,
    bi: Vec2,
    bnext: Vec2,
    fence_velocity: Vec2,
    t: f64,
    dt: f64,
    params: &GameLayerParams,
    alpha_hat: f64,
    v_max: f64,
    memory: &mut ChannelMemory,
) -> Result<(Vec2, EdgeTelemetry), EscortError> {
    let m = measure_edge(xa, xd, bi, bnext)?;
    let ell_d = desired_distance(m.l_a, m.e_phi, params.k_delta, alpha_hat)?;
    let (g_n, f_n) = normalizers(m.l_a, m.l_d, m.e_phi, params.k_delta, alpha_hat, memory.side)?;
    let rho = ppf_rho(t, params.kappa, params.k_inf);
    let rho_dot = ppf_rho_dot(t, params.kappa, params.k_inf);
    let e_v = m.l_d - ell_d;

    let h = ChannelState::new(m.e_h, g_n, rho, FunnelBounds::SYMMETRIC)?;
    let v = ChannelState::new(e_v, f_n, rho, FunnelBounds::vertical(memory.side, params.k_delta))?;

    let (g_dot, f_dot, ell_dot, xa_dot) = match memory.prev {
        Some((g0, f0, l0, a0)) => (
            (g_n - g0) / dt,
            (f_n - f0) / dt,
            (ell_d - l0) / dt,
            (m.attacker_along - a0) / dt,
        ),
        None => (0.0, 0.0, 0.0, 0.0),
    };
    memory.prev = Some((g_n, f_n, ell_d, m.attacker_along));

    let g_h = horizontal_control(&h, g_dot, rho_dot, xa_dot, params.k_h)?;
    let g_v = vertical_control(&v, f_dot, rho_dot, ell_dot, params.k_v)?;
    let mut ground = m.frame.to_ground(Vec2::new(g_h, -g_v));
    if params.fence_feedforward {
        ground += fence_velocity;
    }
    let j = if m.l_a > 0.0 && m.l_d > 0.0 {
        judgment(m.l_a, m.l_d, m.phi, alpha_hat).unwrap_or(f64::NEG_INFINITY)
    } else {
        f64::NEG_INFINITY
    };
    Ok((
        saturate(ground, v_max),
        EdgeTelemetry {
            e_h: m.e_h,
            e_v,
            e_tilde_h: h.e_tilde,
            e_tilde_v: v.e_tilde,
            rho,
            eps_h: h.epsilon,
            eps_v: v.epsilon,
            g_h,
            g_v,
            j,
            occupancy_h: h.occupancy(),
            occupancy_v: v.occupancy(),
        },
    ))
}
