//! SVG snapshots of a logged run: areas, obstacles, trajectories so far, the
//! fence and the Apollonius circle of every defender against the attacker.
//!
//! All geometry sits inside one group flipped to world coordinates, so every
//! `cx`, `cy`, `r` and `points` value is in meters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use herding_core::reach_avoid::apollonius_circle;
use herding_core::sim::{SimConfig, StepRecord, TrajectoryLog};
use herding_core::Vec2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("time {t} outside the logged range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("the log is empty")]
    EmptyLog,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const MARGIN: f64 = 2.0;
const PIXELS_PER_METER: f64 = 30.0;

/// Index of the record nearest to `t`, within half a control period.
pub fn record_at(log: &TrajectoryLog, t: f64, dt: f64) -> Result<usize, SnapshotError> {
    let (first, last) = match (log.records.first(), log.records.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(SnapshotError::EmptyLog),
    };
    let out = SnapshotError::OutOfRange {
        t,
        start: first,
        end: last,
    };
    if !(t >= first - 0.5 * dt && t <= last + 0.5 * dt) {
        return Err(out);
    }
    log.records
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.t - t).abs().total_cmp(&(b.1.t - t).abs()))
        .map(|(i, _)| i)
        .ok_or(out)
}

fn points(ps: impl IntoIterator<Item = Vec2>) -> String {
    ps.into_iter()
        .map(|p| format!("{:.4},{:.4}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(" ")
}

fn bounds(log: &TrajectoryLog, config: &SimConfig) -> (Vec2, Vec2) {
    let s = &config.scenario;
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Vec2, r: f64| {
        lo = Vec2::new(lo.x.min(p.x - r), lo.y.min(p.y - r));
        hi = Vec2::new(hi.x.max(p.x + r), hi.y.max(p.y + r));
    };
    grow(s.protected_center, s.protected_radius);
    grow(s.target_center, s.target_radius);
    for r in &log.records {
        for &p in std::iter::once(&r.attacker).chain(&r.defenders).chain(&r.beacons) {
            grow(p, 0.0);
        }
    }
    for o in &s.obstacles {
        grow(o.center, o.radius);
        for &(_, p) in &o.waypoints {
            grow(p, o.radius);
        }
    }
    (lo - Vec2::new(MARGIN, MARGIN), hi + Vec2::new(MARGIN, MARGIN))
}

fn circle(svg: &mut String, class: &str, c: Vec2, r: f64, extra: &str) {
    let _ = writeln!(
        svg,
        r#"  <circle class="{class}" cx="{:.6}" cy="{:.6}" r="{:.6}"{extra}/>"#,
        c.x, c.y, r
    );
}

/// SVG document for record `index` of `log`.
pub fn render_snapshot(log: &TrajectoryLog, config: &SimConfig, index: usize) -> String {
    let rec: &StepRecord = &log.records[index];
    let (lo, hi) = bounds(log, config);
    let size = hi - lo;
    let s = &config.scenario;
    let alpha = config.formation.alpha_hat;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{:.4} {:.4} {:.4} {:.4}">"#,
        size.x * PIXELS_PER_METER,
        size.y * PIXELS_PER_METER,
        lo.x,
        -hi.y,
        size.x,
        size.y
    );
    let _ = writeln!(svg, "<title>t = {:.2} s, {}</title>", rec.t, rec.stage.label());
    let _ = writeln!(svg, r#"<g transform="scale(1,-1)" fill="none" stroke-width="0.05">"#);

    circle(
        &mut svg,
        "protected",
        s.protected_center,
        s.protected_radius,
        r##" stroke="#c0392b""##,
    );
    circle(
        &mut svg,
        "target",
        s.target_center,
        s.target_radius,
        r##" stroke="#27ae60""##,
    );
    for o in &s.obstacles {
        circle(
            &mut svg,
            "obstacle",
            o.position_at(rec.t),
            o.radius,
            r##" fill="#7f8c8d""##,
        );
    }

    let path = &log.records[..=index];
    let _ = writeln!(
        svg,
        r##"  <polyline class="trajectory attacker" stroke="#c0392b" points="{}"/>"##,
        points(path.iter().map(|r| r.attacker))
    );
    for i in 0..rec.defenders.len() {
        let _ = writeln!(
            svg,
            r##"  <polyline class="trajectory defender" data-defender="{i}" stroke="#2980b9" points="{}"/>"##,
            points(path.iter().map(|r| r.defenders[i]))
        );
    }

    if rec.beacons.len() >= 3 {
        let _ = writeln!(
            svg,
            r##"  <polygon class="fence" stroke="#8e44ad" points="{}"/>"##,
            points(rec.beacons.iter().copied())
        );
    }
    for (i, &xd) in rec.defenders.iter().enumerate() {
        if let Ok(c) = apollonius_circle(rec.attacker, xd, alpha) {
            let edge = rec.edge_of.get(i).copied().unwrap_or(i);
            let extra = format!(r##" data-defender="{i}" data-edge="{edge}" stroke="#f39c12""##);
            circle(&mut svg, "apollonius", c.center, c.radius, &extra);
        }
    }

    circle(&mut svg, "attacker", rec.attacker, 0.15, r##" fill="#c0392b""##);
    for (i, &xd) in rec.defenders.iter().enumerate() {
        circle(
            &mut svg,
            "defender",
            xd,
            0.15,
            &format!(r##" data-defender="{i}" fill="#2980b9""##),
        );
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

/// Writes one `snapshot_t<time>.svg` per requested time into `dir`.
pub fn emit_snapshots(
    log: &TrajectoryLog,
    config: &SimConfig,
    times: &[f64],
    dir: &Path,
) -> Result<Vec<PathBuf>, SnapshotError> {
    // check every time before writing anything
    let indices = times
        .iter()
        .map(|&t| record_at(log, t, config.dt))
        .collect::<Result<Vec<_>, _>>()?;
    if indices.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(indices.len());
    for (&t, &i) in times.iter().zip(&indices) {
        let path = dir.join(format!("snapshot_t{t:.2}.svg"));
        std::fs::write(&path, render_snapshot(log, config, i))?;
        out.push(path);
    }
    Ok(out)
}
