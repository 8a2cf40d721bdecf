//! Sizing sweep for the synthesized formation: each defender, on its slot,
//! covers the attacker positions of its own sector.

use std::f64::consts::PI;

use herding_core::formation::{layout, FormationParams, FormationSpec};
use herding_core::Vec2;

const SAMPLES: usize = 720;

struct Case {
    alpha: f64,
    params: FormationParams,
}

fn cases() -> Vec<Case> {
    let mut out = Vec::new();
    for n in 3..=8 {
        for a in 3..=9 {
            for k_p in [1.5, 2.0] {
                let alpha = a as f64 / 10.0;
                let spec = FormationSpec {
                    n,
                    eps_p: 0.5,
                    k_p,
                    alpha_hat: alpha,
                };
                let params =
                    FormationParams::synthesize(&spec).unwrap_or_else(|e| panic!("n={n} alpha={alpha} k_p={k_p}: {e}"));
                out.push(Case { alpha, params });
            }
        }
    }
    out
}

/// Signed distance of `p` from the line through `a`, `b`; positive on the
/// left, which is the fence interior for counter-clockwise beacons.
fn left_offset(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    d.cross(p - a) / d.norm()
}

/// Angle in `[0, π]` between the defender-to-attacker line of sight and the edge.
fn los_angle(xa: Vec2, xd: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let s = xa - xd;
    (d.dot(s) / (d.norm() * s.norm())).clamp(-1.0, 1.0).acos()
}

/// Calls `f(edge, attacker)` for every sampled attacker on the circle of
/// `radius` that lies in the angular sector facing `edge`.
fn for_sector_samples(case: &Case, radius: f64, mut f: impl FnMut(usize, Vec2)) {
    let lambda = case.params.lambda;
    for k in 0..SAMPLES {
        let beta = 2.0 * PI * k as f64 / SAMPLES as f64;
        for i in 0..case.params.n {
            let lo = i as f64 * lambda - 1e-12;
            let hi = (i + 1) as f64 * lambda + 1e-12;
            if beta >= lo && beta <= hi {
                f(i, Vec2::polar(radius, beta));
            }
        }
    }
}

#[test]
fn line_of_sight_band_holds_on_the_extended_circle() {
    for case in cases() {
        let p = &case.params;
        let l = layout(Vec2::ZERO, p);
        let band = case.alpha.acos();
        for_sector_samples(&case, p.k_p * p.eps_p, |i, xa| {
            let (a, b) = (l.beacon_targets[i], l.beacon_targets[(i + 1) % p.n]);
            let phi = los_angle(xa, l.defender_targets[i], a, b);
            assert!(
                (phi - PI / 2.0).abs() <= band + 1e-9,
                "n={} alpha={} k_p={} edge {i}: phi={phi}",
                p.n,
                case.alpha,
                p.k_p
            );
        });
    }
}

#[test]
fn judgment_nonnegative_on_the_pursuit_circle() {
    for case in cases() {
        let p = &case.params;
        let l = layout(Vec2::ZERO, p);
        let alpha = case.alpha;
        for_sector_samples(&case, p.eps_p, |i, xa| {
            let (a, b) = (l.beacon_targets[i], l.beacon_targets[(i + 1) % p.n]);
            let xd = l.defender_targets[i];
            let l_a = left_offset(xa, a, b);
            let l_d = -left_offset(xd, a, b);
            assert!(l_a > 0.0 && l_d > 0.0, "players on the wrong sides of edge {i}");
            let s = los_angle(xa, xd, a, b).sin();
            let j = l_a * (1.0 - alpha / s) - l_d * (alpha / s - alpha * alpha);
            assert!(
                j >= -1e-9,
                "n={} alpha={alpha} k_p={} edge {i} at {xa}: J={j}",
                p.n,
                p.k_p
            );
        });
    }
}

#[test]
fn reference_extended_circle_reaches_past_the_fence() {
    // with the reference values part of the extended circle lies outside
    // the fence, so no edge can satisfy both conditions around all of it
    let p = FormationParams::synthesize(&FormationSpec::default()).unwrap();
    assert!(p.k_p * p.eps_p > p.apothem());
    assert!((p.apothem() - 0.82243).abs() < 1e-5);
}
