use crate::assignment::{build_problem, solve_assignment, AssignmentProblem, OverlapTensor};
use crate::attacker::{block_contacts, evade_or_random, scripted_input, seeker_input, AttackerState, StrategyKind};
use crate::capture::capture_input;
use crate::error::{EscortError, SimError};
use crate::escort_game::{
    desired_distance, edge_control, measure_edge, normalizers, ppf_rho, ChannelMemory, ChannelState, EdgeTelemetry,
    FunnelBounds, VerticalSide,
};
use crate::escort_plan::{beacon_velocity, effective_ratio, joint_force};
use crate::formation::{layout, point_in_fence, PursuitCircle};
use crate::geometry::{saturate, Obstacle, Vec2};
use crate::reach_avoid::judgment;

use super::config::{Derived, SimConfig};
use super::log::{FailureReason, Metrics, Outcome, Stage, StepRecord, TrajectoryLog};

/// Complete simulation state between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub t: f64,
    pub step_index: usize,
    pub stage: Stage,
    pub attacker: Vec2,
    pub defenders: Vec<Vec2>,
    pub beacons: Vec<Vec2>,
    /// Capture target of each defender.
    pub slots: Vec<Vec2>,
    /// Fence edge guarded by each defender.
    pub edge_of: Vec<usize>,
    pub pursuit_circle: PursuitCircle,
    pub v_fc: Vec2,
    pub attacker_state: AttackerState,
    pub channels: Vec<ChannelMemory>,
    pub t_f1: Option<f64>,
    pub t_f2: Option<f64>,
}

impl World {
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.beacons.len();
        let k = self.edge_of[i];
        (self.beacons[k], self.beacons[(k + 1) % n])
    }

    /// Time since the escort began.
    pub fn escort_time(&self) -> f64 {
        self.t - self.t_f1.unwrap_or(self.t)
    }
}

fn judgment_of(xa: Vec2, xd: Vec2, (bi, bj): (Vec2, Vec2), alpha: f64) -> f64 {
    match measure_edge(xa, xd, bi, bj) {
        Ok(m) if m.l_a > 0.0 && m.l_d > 0.0 => judgment(m.l_a, m.l_d, m.phi, alpha).unwrap_or(f64::NAN),
        Ok(_) => f64::NEG_INFINITY,
        Err(_) => f64::NAN,
    }
}

/// Normalized channel errors `(ẽ_h/ρ, ẽ_v/ρ)` of defender `i` and its vertical funnel.
fn channel_occupancy(
    world: &World,
    i: usize,
    side: VerticalSide,
    rho: f64,
    config: &SimConfig,
) -> Result<(f64, f64, FunnelBounds), EscortError> {
    let (bi, bj) = world.edge(i);
    let alpha = config.formation.alpha_hat;
    let m = measure_edge(world.attacker, world.defenders[i], bi, bj)?;
    let ell = desired_distance(m.l_a, m.e_phi, config.game.k_delta, alpha)?;
    let (g, f) = normalizers(m.l_a, m.l_d, m.e_phi, config.game.k_delta, alpha, side)?;
    let bounds = FunnelBounds::vertical(side, config.game.k_delta);
    let h = ChannelState::new(m.e_h, g, rho, FunnelBounds::SYMMETRIC)?;
    let v = ChannelState::new(m.l_d - ell, f, rho, bounds)?;
    Ok((h.occupancy(), v.occupancy(), bounds))
}

/// Every escort guarantee that fails in `world`: containment, positive
/// judgment per edge, funnel membership, obstacle clearance and the fence
/// speed bound.
pub fn check_escort_guarantees(world: &World, config: &SimConfig, derived: &Derived) -> Vec<FailureReason> {
    let mut out = Vec::new();
    if !point_in_fence(world.attacker, &world.beacons).unwrap_or(false) {
        out.push(FailureReason::FenceBreach);
    }
    let alpha = config.formation.alpha_hat;
    let rho = ppf_rho(world.escort_time(), config.game.kappa, config.game.k_inf);
    for i in 0..world.defenders.len() {
        let j = judgment_of(world.attacker, world.defenders[i], world.edge(i), alpha);
        if !(j > 0.0) {
            out.push(FailureReason::JudgmentNonPositive {
                edge: world.edge_of[i],
                j,
            });
        }
        let side = world.channels.get(i).map_or(VerticalSide::Above, |c| c.side);
        if let Err(e) = channel_occupancy(world, i, side, rho, config) {
            out.push(FailureReason::FunnelViolation {
                defender: i,
                detail: e.to_string(),
            });
        }
    }
    out.extend(penetrations(world, &config.scenario.obstacles, true));
    let speed = world.v_fc.norm();
    if speed > derived.beacon_bound {
        out.push(FailureReason::BeaconSpeedExceeded {
            speed,
            bound: derived.beacon_bound,
        });
    }
    out
}

/// Agents touching or inside an obstacle; with `touch` false only strict
/// penetration counts.
fn penetrations(world: &World, obstacles: &[Obstacle], touch: bool) -> Vec<FailureReason> {
    let mut out = Vec::new();
    let agents = std::iter::once(("attacker".to_string(), world.attacker)).chain(
        world
            .defenders
            .iter()
            .enumerate()
            .map(|(i, &x)| (format!("defender {i}"), x)),
    );
    for (name, x) in agents {
        for (k, o) in obstacles.iter().enumerate() {
            let (d, _) = o.snapshot(world.t).boundary_distance(x);
            if d < 0.0 || (touch && d == 0.0) {
                out.push(FailureReason::ObstaclePenetration {
                    agent: name.clone(),
                    obstacle: k,
                    depth: -d,
                });
            }
        }
    }
    out
}

pub struct Simulation {
    config: SimConfig,
    derived: Derived,
    world: World,
    log: TrajectoryLog,
    metrics: Metrics,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        let derived = config.validate()?;
        let s = &config.scenario;
        let pc = PursuitCircle::new(s.attacker_start, config.formation.eps_p);
        let n = config.formation.n;
        let mut world = World {
            t: 0.0,
            step_index: 0,
            stage: Stage::Capture,
            attacker: s.attacker_start,
            defenders: config.defender_starts(),
            beacons: Vec::new(),
            slots: Vec::new(),
            edge_of: (0..n).collect(),
            pursuit_circle: pc,
            v_fc: Vec2::ZERO,
            attacker_state: AttackerState::new(config.attacker.seed),
            channels: Vec::new(),
            t_f1: None,
            t_f2: None,
        };
        let mut sim = Simulation {
            derived,
            world: world.clone(),
            log: TrajectoryLog::default(),
            metrics: Metrics::default(),
            config,
        };
        if sim.config.scenario.start_in_escort {
            let l = layout(pc.center, &sim.derived.formation);
            world.defenders = l.defender_targets.clone();
            world.slots = l.defender_targets;
            world.beacons = l.beacon_targets;
            sim.world = world;
            sim.begin_escort();
        } else {
            sim.world = world;
            sim.relayout()?;
        }
        Ok(sim)
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn derived(&self) -> &Derived {
        &self.derived
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Lay the formation out around the current pursuit circle and reassign
    /// defenders to slots.
    fn relayout(&mut self) -> Result<(), SimError> {
        let w = &mut self.world;
        let l = layout(w.pursuit_circle.center, &self.derived.formation);
        let problem = match build_problem(
            &w.defenders,
            &l.defender_targets,
            &self.config.scenario.obstacles,
            w.t,
            self.config.defender_speed,
            self.config.assignment.clearance,
            self.config.assignment.overlap_weight,
        ) {
            Ok((p, _)) => p,
            // a slot inside an obstacle: fall back to straight-line times
            Err(_) => AssignmentProblem {
                travel_times: w
                    .defenders
                    .iter()
                    .map(|d| {
                        l.defender_targets
                            .iter()
                            .map(|s| d.distance(*s) / self.config.defender_speed)
                            .collect()
                    })
                    .collect(),
                overlaps: OverlapTensor::zeros(w.defenders.len()),
                overlap_weight: 0.0,
            },
        };
        let a = solve_assignment(&problem)?;
        w.slots = a.perm.iter().map(|&j| l.defender_targets[j]).collect();
        w.edge_of = a.perm;
        w.beacons = l.beacon_targets;
        Ok(())
    }

    fn begin_escort(&mut self) {
        let w = &mut self.world;
        w.stage = Stage::Escort;
        w.t_f1 = Some(w.t);
        w.v_fc = Vec2::ZERO;
        let alpha = self.config.formation.alpha_hat;
        w.channels = (0..w.defenders.len())
            .map(|i| {
                let (bi, bj) = w.edge(i);
                let side = measure_edge(w.attacker, w.defenders[i], bi, bj)
                    .and_then(|m| {
                        desired_distance(m.l_a, m.e_phi, self.config.game.k_delta, alpha).map(|ell| m.l_d - ell)
                    })
                    .map_or(VerticalSide::Above, VerticalSide::from_initial_error);
                ChannelMemory::new(side)
            })
            .collect();
        self.check_done();
    }

    fn check_done(&mut self) {
        let s = &self.config.scenario;
        if self.world.attacker.distance(s.target_center) < s.target_radius {
            self.world.stage = Stage::Done;
            self.world.t_f2 = Some(self.world.t);
        }
    }

    fn fail(&mut self, reason: FailureReason) {
        self.world.stage = Stage::Failed { reason };
    }

    /// Handover predicate: defenders on their slots, attacker strictly inside
    /// the fence and every channel comfortably inside its initial funnel.
    fn ready_for_escort(&self) -> bool {
        let w = &self.world;
        let a = &self.config.arrival;
        if w.defenders
            .iter()
            .zip(&w.slots)
            .any(|(d, s)| d.distance(*s) > a.tolerance)
        {
            return false;
        }
        if !point_in_fence(w.attacker, &w.beacons).unwrap_or(false) {
            return false;
        }
        let alpha = self.config.formation.alpha_hat;
        (0..w.defenders.len()).all(|i| {
            let (bi, bj) = w.edge(i);
            let Ok(m) = measure_edge(w.attacker, w.defenders[i], bi, bj) else {
                return false;
            };
            let Ok(ell) = desired_distance(m.l_a, m.e_phi, self.config.game.k_delta, alpha) else {
                return false;
            };
            let side = VerticalSide::from_initial_error(m.l_d - ell);
            match channel_occupancy(w, i, side, 1.0, &self.config) {
                Ok((h, v, b)) => {
                    m.l_d > 0.0
                        && h.abs() <= a.max_occupancy
                        && v > -b.lower * a.max_occupancy
                        && v < b.upper * a.max_occupancy
                }
                Err(_) => false,
            }
        })
    }

    fn attacker_command(&mut self, kind: StrategyKind, obstacles: &[Obstacle]) -> Vec2 {
        let w = &mut self.world;
        let c = &self.config.attacker;
        let u = match kind {
            StrategyKind::Seeker => seeker_input(w.attacker, self.config.scenario.protected_center, obstacles, c),
            StrategyKind::EvadeRandom => evade_or_random(w.attacker, &w.defenders, obstacles, c, &mut w.attacker_state),
            StrategyKind::Scripted => scripted_input(w.t, &c.script, c.v_max),
        };
        saturate(
            block_contacts(w.attacker, u, &w.defenders, c.contact_radius, self.config.dt),
            c.v_max,
        )
    }

    fn record(&mut self, attacker_u: Vec2, defender_u: Vec<Vec2>, channels: Option<Vec<EdgeTelemetry>>) {
        let w = &self.world;
        let alpha = self.config.formation.alpha_hat;
        let j = (0..w.defenders.len())
            .map(|i| judgment_of(w.attacker, w.defenders[i], w.edge(i), alpha))
            .collect();
        self.log.records.push(StepRecord {
            t: w.t,
            stage: w.stage.clone(),
            attacker: w.attacker,
            attacker_u,
            defenders: w.defenders.clone(),
            defender_u,
            beacons: w.beacons.clone(),
            edge_of: w.edge_of.clone(),
            pc_center: w.pursuit_circle.center,
            v_fc: w.v_fc,
            channels,
            j,
        });
    }

    /// Advance one control period.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.world.stage.is_terminal() {
            return Err(SimError::Terminal);
        }
        let t = self.world.t;
        let dt = self.config.dt;
        let obstacles: Vec<Obstacle> = self.config.scenario.obstacles.iter().map(|o| o.snapshot(t)).collect();
        let n = self.world.defenders.len();
        let v_d = self.config.defender_speed;
        let escort = self.world.stage == Stage::Escort;

        let mut defender_u = Vec::with_capacity(n);
        let mut telemetry = None;
        let attacker_u;
        if escort {
            let s = &self.config.scenario;
            let force = joint_force(
                &self.world.defenders,
                s.target_center,
                s.protected_center,
                &obstacles,
                &self.config.plan,
            );
            self.world.v_fc = beacon_velocity(force, self.derived.beacon_bound).v_fc;
            let mut tel = Vec::with_capacity(n);
            for i in 0..n {
                let w = &mut self.world;
                let (bi, bj) = w.edge(i);
                let result = edge_control(
                    w.attacker,
                    w.defenders[i],
                    bi,
                    bj,
                    w.v_fc,
                    w.escort_time(),
                    dt,
                    &self.config.game,
                    self.config.formation.alpha_hat,
                    v_d,
                    &mut w.channels[i],
                );
                match result {
                    Ok((u, e)) => {
                        defender_u.push(u);
                        tel.push(e);
                    }
                    Err(e) => {
                        self.fail(FailureReason::FunnelViolation {
                            defender: i,
                            detail: e.to_string(),
                        });
                        self.world.v_fc = Vec2::ZERO;
                        return Ok(());
                    }
                }
            }
            for e in &tel {
                self.metrics.max_occupancy = self
                    .metrics
                    .max_occupancy
                    .max(e.occupancy_h.abs())
                    .max(e.occupancy_v.abs());
                self.metrics.min_j = self.metrics.min_j.min(e.j);
            }
            let speed = self.world.v_fc.norm();
            self.metrics.max_fence_speed = self.metrics.max_fence_speed.max(speed);
            self.metrics.max_speed_ratio =
                self.metrics
                    .max_speed_ratio
                    .max(effective_ratio(v_d, self.config.attacker.v_max, speed));
            telemetry = Some(tel);
            attacker_u = self.attacker_command(self.config.attacker.escort_strategy, &obstacles);
        } else {
            let g = &self.config.capture;
            for i in 0..n {
                let w = &self.world;
                let peers: Vec<Vec2> = (0..n).filter(|&k| k != i).map(|k| w.defenders[k]).collect();
                defender_u.push(capture_input(w.defenders[i], w.slots[i], &obstacles, &peers, g, v_d));
            }
            attacker_u = self.attacker_command(self.config.attacker.capture_strategy, &obstacles);
        }

        self.record(attacker_u, defender_u.clone(), telemetry);

        let w = &mut self.world;
        w.attacker += attacker_u * dt;
        for (x, u) in w.defenders.iter_mut().zip(&defender_u) {
            *x += *u * dt;
        }
        if escort {
            let v = w.v_fc;
            for b in &mut w.beacons {
                *b += v * dt;
            }
        }
        w.step_index += 1;
        w.t = w.step_index as f64 * dt;
        if !w.attacker.is_finite() || w.defenders.iter().chain(&w.beacons).any(|p| !p.is_finite()) {
            return Err(SimError::NonFinite {
                t: w.t,
                what: format!("attacker {} defenders {:?}", w.attacker, w.defenders),
            });
        }
        self.post_step_events()
    }

    fn post_step_events(&mut self) -> Result<(), SimError> {
        let obstacles = &self.config.scenario.obstacles;
        for o in obstacles {
            let o = o.snapshot(self.world.t);
            for x in std::iter::once(self.world.attacker).chain(self.world.defenders.iter().copied()) {
                let (d, _) = o.boundary_distance(x);
                self.metrics.min_obstacle_clearance = self.metrics.min_obstacle_clearance.min(d);
            }
        }
        if let Some(p) = penetrations(&self.world, obstacles, false).into_iter().next() {
            self.fail(p);
            return Ok(());
        }
        let s = &self.config.scenario;
        if self.world.attacker.distance(s.protected_center) < s.protected_radius {
            self.fail(FailureReason::ProtectedAreaEntered);
            return Ok(());
        }
        match self.world.stage {
            Stage::Capture => {
                if let Some(pc) = self.world.pursuit_circle.update(self.world.attacker) {
                    self.world.pursuit_circle = pc;
                    self.relayout()?;
                }
                if self.ready_for_escort() {
                    self.begin_escort();
                }
            }
            Stage::Escort => {
                let violations = check_escort_guarantees(&self.world, &self.config, &self.derived);
                let alpha = self.config.formation.alpha_hat;
                for i in 0..self.world.defenders.len() {
                    let j = judgment_of(self.world.attacker, self.world.defenders[i], self.world.edge(i), alpha);
                    self.metrics.min_j = self.metrics.min_j.min(j);
                }
                if let Some(v) = violations.into_iter().next() {
                    self.fail(v);
                    return Ok(());
                }
                self.check_done();
            }
            _ => {}
        }
        Ok(())
    }

    fn outcome(&self) -> Outcome {
        let w = &self.world;
        Outcome {
            stage: w.stage.clone(),
            t_end: w.t,
            t_f1: w.t_f1,
            t_f2: w.t_f2,
            pc_updates: w.pursuit_circle.update_count,
            steps: w.step_index,
            metrics: self.metrics.clone(),
        }
    }

    /// Step until the run ends and return the log and outcome.
    pub fn run(mut self) -> Result<(TrajectoryLog, Outcome), SimError> {
        let max_steps = (self.config.max_time / self.config.dt + 1e-9).floor() as usize;
        while !self.world.stage.is_terminal() {
            if self.world.step_index >= max_steps {
                self.world.stage = Stage::Timeout;
                break;
            }
            self.step()?;
        }
        let n = self.world.defenders.len();
        self.world.v_fc = Vec2::ZERO;
        self.record(Vec2::ZERO, vec![Vec2::ZERO; n], None);
        let outcome = self.outcome();
        Ok((self.log, outcome))
    }
}

pub fn run(config: &SimConfig) -> Result<(TrajectoryLog, Outcome), SimError> {
    Simulation::new(config.clone())?.run()
}
