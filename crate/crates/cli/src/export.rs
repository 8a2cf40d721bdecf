//! Trajectory CSV and outcome JSON.
//!
//! Numbers are written in scientific notation with 9 significant digits,
//! independent of locale. The stage column holds the stage label, or the
//! JSON form of the stage for failed runs so that the reason survives a
//! round trip.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use herding_core::escort_game::EdgeTelemetry;
use herding_core::sim::{Derived, Outcome, SimConfig, Stage, StepRecord, TrajectoryLog};
use herding_core::Vec2;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

const CHANNEL_FIELDS: [&str; 12] = [
    "e_h",
    "e_v",
    "e_tilde_h",
    "e_tilde_v",
    "rho",
    "eps_h",
    "eps_v",
    "g_h",
    "g_v",
    "j_edge",
    "occ_h",
    "occ_v",
];

fn channel_values(c: &EdgeTelemetry) -> [f64; 12] {
    [
        c.e_h,
        c.e_v,
        c.e_tilde_h,
        c.e_tilde_v,
        c.rho,
        c.eps_h,
        c.eps_v,
        c.g_h,
        c.g_v,
        c.j,
        c.occupancy_h,
        c.occupancy_v,
    ]
}

fn channel_from(v: &[f64]) -> EdgeTelemetry {
    EdgeTelemetry {
        e_h: v[0],
        e_v: v[1],
        e_tilde_h: v[2],
        e_tilde_v: v[3],
        rho: v[4],
        eps_h: v[5],
        eps_v: v[6],
        g_h: v[7],
        g_v: v[8],
        j: v[9],
        occupancy_h: v[10],
        occupancy_v: v[11],
    }
}

pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else {
        v.to_string()
    }
}

fn header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "stage", "xA.x", "xA.y", "uA.x", "uA.y"]
        .map(String::from)
        .to_vec();
    for i in 0..n {
        h.extend([
            format!("xD{i}.x"),
            format!("xD{i}.y"),
            format!("uD{i}.x"),
            format!("uD{i}.y"),
        ]);
    }
    for i in 0..n {
        h.extend([format!("B{i}.x"), format!("B{i}.y")]);
    }
    for i in 0..n {
        h.push(format!("edge{i}"));
    }
    h.extend(["pc.x", "pc.y", "v_Fc.x", "v_Fc.y"].map(String::from));
    for i in 0..n {
        h.push(format!("J{i}"));
    }
    for i in 0..n {
        h.extend(CHANNEL_FIELDS.iter().map(|f| format!("{f}{i}")));
    }
    h
}

fn stage_cell(stage: &Stage) -> String {
    match stage {
        Stage::Failed { .. } => serde_json::to_string(stage).expect("stage serializes"),
        s => s.label().to_string(),
    }
}

fn parse_stage(cell: &str) -> Option<Stage> {
    if cell.starts_with('{') {
        serde_json::from_str(cell).ok()
    } else {
        Stage::from_label(cell)
    }
}

/// Writes one row per log record.
pub fn write_trajectory_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<(), ExportError> {
    let n = log.records.first().map_or(0, |r| r.defenders.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(n))?;
    for r in &log.records {
        let mut row = vec![format_number(r.t), stage_cell(&r.stage)];
        let push = |row: &mut Vec<String>, v: Vec2| row.extend([format_number(v.x), format_number(v.y)]);
        push(&mut row, r.attacker);
        push(&mut row, r.attacker_u);
        for i in 0..n {
            push(&mut row, r.defenders[i]);
            push(&mut row, r.defender_u[i]);
        }
        for i in 0..n {
            match r.beacons.get(i) {
                Some(&b) => push(&mut row, b),
                None => row.extend([String::new(), String::new()]),
            }
        }
        row.extend(r.edge_of.iter().map(|e| e.to_string()));
        push(&mut row, r.pc_center);
        push(&mut row, r.v_fc);
        row.extend(r.j.iter().map(|&j| format_number(j)));
        for i in 0..n {
            match r.channels.as_ref().map(|c| c[i]) {
                Some(c) => row.extend(channel_values(&c).map(format_number)),
                None => row.extend(std::iter::repeat_n(String::new(), CHANNEL_FIELDS.len())),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectoryLog, ExportError> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let col: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let n = (0..)
        .take_while(|i| col.contains_key(format!("xD{i}.x").as_str()))
        .count();
    let mut records = Vec::new();
    for (k, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |message: String| ExportError::Format { row: k + 1, message };
        let cell = |name: &str| -> Result<&str, ExportError> {
            col.get(name)
                .and_then(|&i| row.get(i))
                .ok_or_else(|| bad(format!("missing column {name}")))
        };
        let num = |name: &str| -> Result<f64, ExportError> {
            let s = cell(name)?;
            s.parse().map_err(|_| bad(format!("column {name}: cannot parse {s:?}")))
        };
        let vec = |name: &str| -> Result<Vec2, ExportError> {
            Ok(Vec2::new(num(&format!("{name}.x"))?, num(&format!("{name}.y"))?))
        };

        let stage_text = cell("stage")?;
        let stage = parse_stage(stage_text).ok_or_else(|| bad(format!("unknown stage {stage_text:?}")))?;
        let mut beacons = Vec::with_capacity(n);
        for i in 0..n {
            if cell(&format!("B{i}.x"))?.is_empty() {
                break;
            }
            beacons.push(vec(&format!("B{i}"))?);
        }
        let has_channels = n > 0 && !cell(&format!("{}0", CHANNEL_FIELDS[0]))?.is_empty();
        let channels = if has_channels {
            let mut cs = Vec::with_capacity(n);
            for i in 0..n {
                let v = CHANNEL_FIELDS
                    .iter()
                    .map(|f| num(&format!("{f}{i}")))
                    .collect::<Result<Vec<f64>, _>>()?;
                cs.push(channel_from(&v));
            }
            Some(cs)
        } else {
            None
        };
        records.push(StepRecord {
            t: num("t")?,
            stage,
            attacker: vec("xA")?,
            attacker_u: vec("uA")?,
            defenders: (0..n).map(|i| vec(&format!("xD{i}"))).collect::<Result<_, _>>()?,
            defender_u: (0..n).map(|i| vec(&format!("uD{i}"))).collect::<Result<_, _>>()?,
            beacons,
            edge_of: (0..n)
                .map(|i| {
                    let s = cell(&format!("edge{i}"))?;
                    s.parse()
                        .map_err(|_| bad(format!("column edge{i}: cannot parse {s:?}")))
                })
                .collect::<Result<_, _>>()?,
            pc_center: vec("pc")?,
            v_fc: vec("v_Fc")?,
            channels,
            j: (0..n).map(|i| num(&format!("J{i}"))).collect::<Result<_, _>>()?,
        });
    }
    Ok(TrajectoryLog { records })
}

/// Summary written next to the trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct OutcomeReport<'a> {
    pub seed: u64,
    pub succeeded: bool,
    pub eps_d: f64,
    pub eps_b: f64,
    pub beacon_bound: f64,
    pub violations: Vec<String>,
    #[serde(flatten)]
    pub outcome: &'a Outcome,
}

impl<'a> OutcomeReport<'a> {
    pub fn new(config: &SimConfig, derived: &Derived, outcome: &'a Outcome) -> Self {
        let violations = match &outcome.stage {
            Stage::Failed { reason } => vec![reason.to_string()],
            _ => Vec::new(),
        };
        OutcomeReport {
            seed: config.attacker.seed,
            succeeded: outcome.succeeded(),
            eps_d: derived.formation.eps_d,
            eps_b: derived.formation.eps_b,
            beacon_bound: derived.beacon_bound,
            violations,
            outcome,
        }
    }
}

pub fn write_outcome_json<W: Write>(report: &OutcomeReport<'_>, out: W) -> Result<(), ExportError> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

/// Writes `trajectory.csv` and `outcome.json` into `dir`, creating it.
pub fn export_run(
    dir: &Path,
    log: &TrajectoryLog,
    report: &OutcomeReport<'_>,
) -> Result<(PathBuf, PathBuf), ExportError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("trajectory.csv");
    let json_path = dir.join("outcome.json");
    write_trajectory_csv(log, std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(&json_path)?);
    write_outcome_json(report, &mut f)?;
    f.write_all(b"\n")?;
    Ok((csv_path, json_path))
}
