//! Event-triggered pursuit circle and synthesis of the initial defender ring
//! and virtual fence around it.
//!
//! The fence is a regular N-gon with beacon `i` at angle `i·λ` and radius
//! `ε_B` around the pursuit-circle center; defender slot `i` sits at angle
//! `(i + ½)·λ` and radius `ε_D`, on the perpendicular bisector of edge `i`.
//! `ε_D` is the smallest radius that keeps the line-of-sight condition on the
//! extended pursuit circle (radius `K_p·ε_P`); `ε_B` is then the smallest fence
//! whose edges keep the defender-win condition for every attacker position on
//! the pursuit circle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::FormationError;
use crate::geometry::Vec2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PursuitCircle {
    pub center: Vec2,
    pub radius: f64,
    pub update_count: u32,
}

impl PursuitCircle {
    pub fn new(center: Vec2, radius: f64) -> Self {
        PursuitCircle {
            center,
            radius,
            update_count: 0,
        }
    }

    /// Re-center on the attacker once it has reached the boundary.
    ///
    /// At a fixed step the exact crossing is missed, so the trigger fires on
    /// the first sample at or beyond the radius.
    pub fn update(&self, xa: Vec2) -> Option<PursuitCircle> {
        (xa.distance(self.center) >= self.radius).then(|| PursuitCircle {
            center: xa,
            radius: self.radius,
            update_count: self.update_count + 1,
        })
    }
}

/// User-chosen inputs of the formation synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormationSpec {
    /// Number of defenders and fence edges.
    pub n: usize,
    /// Pursuit circle radius.
    pub eps_p: f64,
    /// Zoom factor of the extended pursuit circle.
    pub k_p: f64,
    /// Design speed ratio, strictly between the true ratio and 1.
    pub alpha_hat: f64,
}

/// Reference three-defender formation.
impl Default for FormationSpec {
    fn default() -> Self {
        FormationSpec {
            n: 3,
            eps_p: 0.5,
            k_p: 2.0,
            alpha_hat: 0.65,
        }
    }
}

/// Synthesized ring and fence geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormationParams {
    pub n: usize,
    pub lambda: f64,
    pub eps_p: f64,
    pub k_p: f64,
    pub alpha_hat: f64,
    pub eps_d: f64,
    /// Smallest admissible defender-to-line distance over the pursuit arc.
    pub l_xi_min: f64,
    /// Interior extremum of the defender-to-line distance, when it exists.
    pub eta_star: Option<f64>,
    pub eps_b: f64,
    /// `asin(alpha_hat)`, lower bound of the line-of-sight angle.
    pub psi: f64,
    /// `acos(alpha_hat)`, bound on the line-of-sight angle error.
    pub psi_bar: f64,
}

impl FormationParams {
    pub fn synthesize(spec: &FormationSpec) -> Result<Self, FormationError> {
        let FormationSpec {
            n,
            eps_p,
            k_p,
            alpha_hat,
        } = *spec;
        if eps_p <= 0.0 || !eps_p.is_finite() {
            return Err(FormationError::InvalidParameter(format!(
                "eps_p = {eps_p} must be positive"
            )));
        }
        let lambda = 2.0 * PI / n as f64;
        let eps_d = compute_eps_d(n, eps_p, k_p, alpha_hat)?;
        let (l_xi_min, eta_star) = critical_vertical_distance(eps_p, eps_d, alpha_hat, lambda)?;
        let eps_b = compute_eps_b(eps_d, l_xi_min, lambda)?;
        let apothem = eps_b * (lambda / 2.0).cos();
        if apothem <= eps_p {
            return Err(FormationError::FenceTooSmall { apothem, eps_p });
        }
        Ok(FormationParams {
            n,
            lambda,
            eps_p,
            k_p,
            alpha_hat,
            eps_d,
            l_xi_min,
            eta_star,
            eps_b,
            psi: alpha_hat.asin(),
            psi_bar: alpha_hat.acos(),
        })
    }

    /// Distance from the fence center to each defense line.
    pub fn apothem(&self) -> f64 {
        self.eps_b * (self.lambda / 2.0).cos()
    }

    /// Distance between neighbouring defender slots, `2 ε_D sin(λ/2)`.
    pub fn slot_spacing(&self) -> f64 {
        2.0 * self.eps_d * (self.lambda / 2.0).sin()
    }
}

fn check_spec(n: usize, k_p: f64, alpha_hat: f64) -> Result<(), FormationError> {
    if n < 3 {
        return Err(FormationError::InvalidParameter(format!("N = {n} must be at least 3")));
    }
    if !(k_p > 1.0) {
        return Err(FormationError::InvalidParameter(format!("K_p = {k_p} must exceed 1")));
    }
    if !(alpha_hat > 0.0 && alpha_hat < 1.0) {
        return Err(FormationError::InvalidParameter(format!(
            "alpha_hat = {alpha_hat} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// Radius of the defender ring.
pub fn compute_eps_d(n: usize, eps_p: f64, k_p: f64, alpha_hat: f64) -> Result<f64, FormationError> {
    check_spec(n, k_p, alpha_hat)?;
    let half = PI / n as f64;
    let cos_psi = (1.0 - alpha_hat * alpha_hat).sqrt();
    let psi = alpha_hat.asin();
    Ok(if psi > half {
        k_p * eps_p * (half.sin() * alpha_hat / cos_psi + half.cos())
    } else {
        k_p * eps_p / cos_psi
    })
}

/// Defender-to-line distance at which the judgment function vanishes for an
/// attacker on the pursuit arc at angle `eta` from the edge bisector.
pub fn critical_distance_at(eta: f64, eps_p: f64, eps_d: f64, alpha_hat: f64) -> f64 {
    let los = (eps_p * eps_p + eps_d * eps_d - 2.0 * eps_p * eps_d * eta.cos()).sqrt();
    (eps_d - eps_p * eta.cos() - alpha_hat * los) / (1.0 - alpha_hat * alpha_hat)
}

/// Minimum of [`critical_distance_at`] over `eta ∈ [0, λ/2]`, with the
/// interior stationary point when it falls in range.
pub fn critical_vertical_distance(
    eps_p: f64,
    eps_d: f64,
    alpha_hat: f64,
    lambda: f64,
) -> Result<(f64, Option<f64>), FormationError> {
    if !(eps_d > eps_p) {
        return Err(FormationError::InvalidParameter(format!(
            "eps_D = {eps_d} must exceed eps_P = {eps_p}"
        )));
    }
    let f = |eta: f64| critical_distance_at(eta, eps_p, eps_d, alpha_hat);
    let half = lambda / 2.0;
    let chi = (eps_p * eps_p + (1.0 - alpha_hat * alpha_hat) * eps_d * eps_d) / (2.0 * eps_p * eps_d);
    let eta_star = (chi <= 1.0).then(|| chi.acos()).filter(|e| *e <= half);
    let mut min = f(0.0).min(f(half));
    if let Some(e) = eta_star {
        min = min.min(f(e));
    }
    Ok((min, eta_star))
}

/// Circumradius of the fence that puts each edge at the critical distance
/// `l_xi_min` from its defender slot.
pub fn compute_eps_b(eps_d: f64, l_xi_min: f64, lambda: f64) -> Result<f64, FormationError> {
    if !(eps_d > l_xi_min) {
        return Err(FormationError::Infeasible { eps_d, l_xi_min });
    }
    Ok((eps_d - l_xi_min) / (lambda / 2.0).cos())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormationLayout {
    pub defender_targets: Vec<Vec2>,
    pub beacon_targets: Vec<Vec2>,
}

pub fn layout(center: Vec2, params: &FormationParams) -> FormationLayout {
    let n = params.n;
    let lambda = params.lambda;
    FormationLayout {
        defender_targets: (0..n)
            .map(|i| center + Vec2::polar(params.eps_d, (i as f64 + 0.5) * lambda))
            .collect(),
        beacon_targets: (0..n)
            .map(|i| center + Vec2::polar(params.eps_b, i as f64 * lambda))
            .collect(),
    }
}

/// Strict containment in a convex counter-clockwise polygon.
pub fn point_in_fence(p: Vec2, beacons: &[Vec2]) -> Result<bool, FormationError> {
    let n = beacons.len();
    if n < 3 {
        return Err(FormationError::NonConvexFence);
    }
    let mut inside = true;
    for i in 0..n {
        let a = beacons[i];
        let b = beacons[(i + 1) % n];
        let c = beacons[(i + 2) % n];
        if (b - a).cross(c - b) <= 0.0 {
            return Err(FormationError::NonConvexFence);
        }
        if (b - a).cross(p - a) <= 0.0 {
            inside = false;
        }
    }
    Ok(inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table_one() -> FormationSpec {
        FormationSpec {
            n: 3,
            eps_p: 0.5,
            k_p: 2.0,
            alpha_hat: 0.65,
        }
    }

    #[test]
    fn pursuit_circle_trigger() {
        let pc = PursuitCircle::new(Vec2::ZERO, 0.5);
        assert!(pc.update(Vec2::new(0.2, 0.0)).is_none());
        let up = pc.update(Vec2::new(0.5, 0.0)).unwrap();
        assert_eq!(up.center, Vec2::new(0.5, 0.0));
        assert_eq!(up.update_count, 1);
        assert_eq!(up.radius, 0.5);
        let over = pc.update(Vec2::new(0.51, 0.0)).unwrap();
        assert_eq!(over.center, Vec2::new(0.51, 0.0));
    }

    #[test]
    fn eps_d_reference_values() {
        let d = compute_eps_d(3, 0.5, 2.0, 0.65).unwrap();
        assert_abs_diff_eq!(d, 1.0 / 0.5775f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 1.31590, epsilon = 1e-5);
        assert_abs_diff_eq!(3f64.sqrt() * d, 2.279, epsilon = 1e-3);

        let d8 = compute_eps_d(8, 0.5, 2.0, 0.65).unwrap();
        let tan_psi = 0.65 / 0.5775f64.sqrt();
        let expect = (PI / 8.0).sin() * tan_psi + (PI / 8.0).cos();
        assert_abs_diff_eq!(d8, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(d8, 1.25121, epsilon = 1e-5);

        let tiny = compute_eps_d(5, 0.5, 2.0, 1e-9).unwrap();
        assert_abs_diff_eq!(tiny, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn eps_d_rejects_bad_input() {
        assert!(compute_eps_d(2, 0.5, 2.0, 0.65).is_err());
        assert!(compute_eps_d(3, 0.5, 1.0, 0.65).is_err());
        assert!(compute_eps_d(3, 0.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn eps_d_branches_meet() {
        // psi = lambda/2 exactly: N = 6, alpha = sin(30°)
        let alpha = (PI / 6.0).sin();
        let cos_psi = (1.0 - alpha * alpha).sqrt();
        let lower = 1.3 / cos_psi;
        let upper = 1.3 * ((PI / 6.0).sin() * alpha / cos_psi + (PI / 6.0).cos());
        assert_abs_diff_eq!(lower, upper, epsilon = 1e-9);
        let d = compute_eps_d(6, 0.65, 2.0, alpha).unwrap();
        assert_abs_diff_eq!(d, lower, epsilon = 1e-9);
    }

    #[test]
    fn critical_distance_reference_values() {
        let eps_d = compute_eps_d(3, 0.5, 2.0, 0.65).unwrap();
        let lambda = 2.0 * PI / 3.0;
        let (min, eta) = critical_vertical_distance(0.5, eps_d, 0.65, lambda).unwrap();
        let eta = eta.unwrap();
        assert_abs_diff_eq!(eta, 0.949918f64.acos(), epsilon = 1e-5);
        assert_abs_diff_eq!(eta, 0.31782, epsilon = 1e-5);
        assert_abs_diff_eq!(critical_distance_at(0.0, 0.5, eps_d, 0.65), 0.49449, epsilon = 1e-5);
        assert_abs_diff_eq!(critical_distance_at(eta, 0.5, eps_d, 0.65), 0.49347, epsilon = 1e-5);
        assert_abs_diff_eq!(
            critical_distance_at(lambda / 2.0, 0.5, eps_d, 0.65),
            0.55079,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(min, 0.49347, epsilon = 1e-5);
    }

    #[test]
    fn critical_distance_point_pursuit_circle() {
        let (min, _) = critical_vertical_distance(1e-9, 2.0, 0.5, PI / 2.0).unwrap();
        assert_abs_diff_eq!(min, 2.0 / 1.5, epsilon = 1e-8);
    }

    #[test]
    fn eps_b_reference_values() {
        let p = FormationParams::synthesize(&table_one()).unwrap();
        assert_abs_diff_eq!(p.eps_b, 1.64486, epsilon = 1e-4);
        assert_abs_diff_eq!(p.apothem(), 0.82243, epsilon = 1e-4);
        assert!(p.apothem() > p.eps_p);
        assert_abs_diff_eq!(compute_eps_b(1.0, 0.0, 2.0 * PI / 3.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(compute_eps_b(1.0, 0.25, 1e-8).unwrap(), 0.75, epsilon = 1e-12);
        assert!(matches!(
            compute_eps_b(0.4, 0.5, 1.0),
            Err(FormationError::Infeasible { .. })
        ));
    }

    #[test]
    fn layout_examples() {
        let mut p = FormationParams::synthesize(&table_one()).unwrap();
        p.eps_d = 1.0;
        p.eps_b = 1.0;
        let l = layout(Vec2::ZERO, &p);
        assert_abs_diff_eq!(l.defender_targets[0].x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(l.defender_targets[0].y, 0.8660254, epsilon = 1e-7);
        assert_abs_diff_eq!(l.beacon_targets[0].x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.beacon_targets[0].y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn slots_on_edge_bisectors() {
        let p = FormationParams::synthesize(&table_one()).unwrap();
        let l = layout(Vec2::new(3.0, -2.0), &p);
        for i in 0..p.n {
            let a = l.beacon_targets[i];
            let b = l.beacon_targets[(i + 1) % p.n];
            let d = l.defender_targets[i];
            assert_abs_diff_eq!(d.distance(a), d.distance(b), epsilon = 1e-12);
        }
    }

    #[test]
    fn fence_containment() {
        let p = FormationParams::synthesize(&table_one()).unwrap();
        let l = layout(Vec2::new(1.0, 1.0), &p);
        assert!(point_in_fence(Vec2::new(1.0, 1.0), &l.beacon_targets).unwrap());
        assert!(!point_in_fence(l.beacon_targets[1], &l.beacon_targets).unwrap());
        let mut cw = l.beacon_targets.clone();
        cw.reverse();
        assert!(point_in_fence(Vec2::ZERO, &cw).is_err());
        assert!(point_in_fence(Vec2::ZERO, &l.beacon_targets[..2]).is_err());
    }

    #[test]
    fn critical_distance_matches_grid_search() {
        let p = FormationParams::synthesize(&table_one()).unwrap();
        let half = p.lambda / 2.0;
        let grid_min = (0..=10_000)
            .map(|k| critical_distance_at(half * k as f64 / 10_000.0, p.eps_p, p.eps_d, p.alpha_hat))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(grid_min, p.l_xi_min, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn layout_is_translation_equivariant(tx in -100.0..100.0f64, ty in -100.0..100.0f64) {
            let p = FormationParams::synthesize(&table_one()).unwrap();
            let t = Vec2::new(tx, ty);
            let a = layout(Vec2::ZERO, &p);
            let b = layout(t, &p);
            for (u, v) in a.defender_targets.iter().zip(&b.defender_targets) {
                prop_assert!((*u + t - *v).norm() < 1e-12 * (1.0 + t.norm()));
            }
            for (u, v) in a.beacon_targets.iter().zip(&b.beacon_targets) {
                prop_assert!((*u + t - *v).norm() < 1e-12 * (1.0 + t.norm()));
            }
        }

        #[test]
        fn point_in_fence_matches_half_planes(px in -3.0..3.0f64, py in -3.0..3.0f64) {
            let p = FormationParams::synthesize(&table_one()).unwrap();
            let b = layout(Vec2::ZERO, &p).beacon_targets;
            let q = Vec2::new(px, py);
            // each edge's inward normal points at the center
            let oracle = (0..3).all(|i| {
                let mid = (b[i] + b[(i + 1) % 3]) / 2.0;
                (q - mid).dot(-mid) > 0.0
            });
            prop_assert_eq!(point_in_fence(q, &b).unwrap(), oracle);
        }

        #[test]
        fn apothem_exceeds_pursuit_radius(n in 3usize..12, eps_p in 0.1..2.0f64,
                                          k_p in 1.05..3.0f64, alpha in 0.05..0.95f64) {
            let spec = FormationSpec { n, eps_p, k_p, alpha_hat: alpha };
            if let Ok(p) = FormationParams::synthesize(&spec) {
                prop_assert!(p.apothem() > p.eps_p);
            }
        }

        #[test]
        fn critical_minimum_matches_grid(n in 3usize..9, eps_p in 0.2..1.0f64,
                                         k_p in 1.2..2.5f64, alpha in 0.1..0.9f64) {
            let eps_d = compute_eps_d(n, eps_p, k_p, alpha).unwrap();
            let lambda = 2.0 * PI / n as f64;
            let (min, _) = critical_vertical_distance(eps_p, eps_d, alpha, lambda).unwrap();
            let grid = (0..=10_000)
                .map(|k| critical_distance_at(lambda / 2.0 * k as f64 / 10_000.0, eps_p, eps_d, alpha))
                .fold(f64::INFINITY, f64::min);
            prop_assert!((grid - min).abs() <= 1e-6);
            prop_assert!(min <= grid + 1e-12);
        }
    }
}
