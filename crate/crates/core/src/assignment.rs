//! Defender-to-slot assignment: obstacle-aware travel times, path overlap
//! penalties and a quadratic assignment solver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::AssignmentError;
use crate::geometry::{normalize_angle, point_segment_distance, Obstacle, Vec2};

/// Angular step used when flattening arcs into the polyline.
const ARC_STEP: f64 = 0.01;
/// Sampling step of [`overlap_length`].
pub const OVERLAP_STEP: f64 = 0.05;
pub const DEFAULT_CLEARANCE: f64 = 0.5;
/// Largest problem solved by exhaustive search.
pub const EXACT_LIMIT: usize = 12;
const CONTACT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

impl Disc {
    pub fn of(obstacle: &Obstacle, t: f64) -> Disc {
        Disc {
            center: obstacle.position_at(t),
            radius: obstacle.radius,
        }
    }

    fn blocks_segment(&self, a: Vec2, b: Vec2) -> bool {
        point_segment_distance(self.center, a, b) < self.radius - CONTACT_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEstimate {
    pub polyline: Vec<Vec2>,
    pub length: f64,
    pub travel_time: f64,
}

impl PathEstimate {
    fn from_polyline(polyline: Vec<Vec2>, speed: f64) -> Self {
        let length = polyline_length(&polyline);
        PathEstimate {
            polyline,
            length,
            travel_time: length / speed,
        }
    }
}

pub fn polyline_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Graph vertex: a free point or a tangent point on disc `on`.
#[derive(Clone, Copy, Debug)]
struct Node {
    p: Vec2,
    on: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
enum Link {
    Line,
    Arc { disc: usize, from: f64, sweep: f64 },
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn point_tangents(p: Vec2, disc: &Disc) -> Vec<Vec2> {
    let d = p - disc.center;
    let dist = d.norm();
    if dist < disc.radius {
        return Vec::new();
    }
    let beta = (disc.radius / dist).min(1.0).acos();
    let base = d.angle();
    if beta == 0.0 {
        return vec![p];
    }
    vec![
        disc.center + Vec2::polar(disc.radius, base + beta),
        disc.center + Vec2::polar(disc.radius, base - beta),
    ]
}

/// Tangent segments between two discs as (point on a, point on b).
fn disc_tangents(a: &Disc, b: &Disc) -> Vec<(Vec2, Vec2)> {
    let d = b.center - a.center;
    let dist = d.norm();
    let mut out = Vec::new();
    if dist <= 0.0 {
        return out;
    }
    let base = d.angle();
    for r2 in [b.radius, -b.radius] {
        let c = (a.radius - r2) / dist;
        if c.abs() > 1.0 {
            continue;
        }
        let gamma = c.acos();
        for g in [gamma, -gamma] {
            let n = Vec2::from_angle(base + g);
            out.push((a.center + n * a.radius, b.center + n * r2));
        }
    }
    out
}

/// Shortest collision-free path around disc obstacles frozen at time `t`.
pub fn shortest_path(
    start: Vec2,
    goal: Vec2,
    obstacles: &[Obstacle],
    t: f64,
    speed: f64,
) -> Result<PathEstimate, AssignmentError> {
    let discs: Vec<Disc> = obstacles.iter().map(|o| Disc::of(o, t)).collect();
    shortest_path_discs(start, goal, &discs, speed)
}

pub fn shortest_path_discs(
    start: Vec2,
    goal: Vec2,
    discs: &[Disc],
    speed: f64,
) -> Result<PathEstimate, AssignmentError> {
    if discs
        .iter()
        .any(|d| goal.distance(d.center) < d.radius - CONTACT_TOLERANCE)
    {
        return Err(AssignmentError::GoalBlocked(goal));
    }
    if discs
        .iter()
        .any(|d| start.distance(d.center) < d.radius - CONTACT_TOLERANCE)
    {
        return Err(AssignmentError::NoPath);
    }
    let free = |a: Vec2, b: Vec2, skip: &[usize]| {
        discs
            .iter()
            .enumerate()
            .all(|(k, d)| skip.contains(&k) || !d.blocks_segment(a, b))
    };
    if free(start, goal, &[]) {
        return Ok(PathEstimate::from_polyline(vec![start, goal], speed));
    }

    let mut nodes = vec![Node { p: start, on: None }, Node { p: goal, on: None }];
    let mut edges: Vec<(usize, usize, f64, Link)> = Vec::new();
    let add_node = |nodes: &mut Vec<Node>, p: Vec2, on: usize| {
        nodes.push(Node { p, on: Some(on) });
        nodes.len() - 1
    };
    for (k, disc) in discs.iter().enumerate() {
        for end in [0usize, 1] {
            let p = nodes[end].p;
            for q in point_tangents(p, disc) {
                if free(p, q, &[k]) {
                    let id = add_node(&mut nodes, q, k);
                    edges.push((end, id, p.distance(q), Link::Line));
                }
            }
        }
        for (m, other) in discs.iter().enumerate().skip(k + 1) {
            for (qa, qb) in disc_tangents(disc, other) {
                if free(qa, qb, &[k, m]) {
                    let ia = add_node(&mut nodes, qa, k);
                    let ib = add_node(&mut nodes, qb, m);
                    edges.push((ia, ib, qa.distance(qb), Link::Line));
                }
            }
        }
    }
    for (k, disc) in discs.iter().enumerate() {
        let on: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].on == Some(k)).collect();
        for (x, &i) in on.iter().enumerate() {
            for &j in &on[x + 1..] {
                let from = (nodes[i].p - disc.center).angle();
                let sweep = normalize_angle((nodes[j].p - disc.center).angle() - from);
                edges.push((i, j, disc.radius * sweep.abs(), Link::Arc { disc: k, from, sweep }));
            }
        }
    }

    let mut adj: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); nodes.len()];
    for (e, &(a, b, w, _)) in edges.iter().enumerate() {
        adj[a].push((b, w, e));
        adj[b].push((a, w, e));
    }
    let mut dist = vec![f64::INFINITY; nodes.len()];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes.len()];
    let mut heap = BinaryHeap::new();
    dist[0] = 0.0;
    heap.push(Entry(0.0, 0));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == 1 {
            break;
        }
        for &(v, w, e) in &adj[u] {
            if d + w < dist[v] {
                dist[v] = d + w;
                prev[v] = Some((u, e));
                heap.push(Entry(d + w, v));
            }
        }
    }
    if !dist[1].is_finite() {
        return Err(AssignmentError::NoPath);
    }

    let mut hops = Vec::new();
    let mut cur = 1;
    while let Some((p, e)) = prev[cur] {
        hops.push((p, cur, e));
        cur = p;
    }
    hops.reverse();
    let mut polyline = vec![start];
    for (from, to, e) in hops {
        if let Link::Arc { disc, from: a0, sweep } = edges[e].3 {
            let disc = discs[disc];
            // arcs are stored in one orientation; walk them from the hop start
            let forward = nodes[from].p.distance(disc.center + Vec2::polar(disc.radius, a0)) < 1e-9;
            let (a0, sweep) = if forward { (a0, sweep) } else { (a0 + sweep, -sweep) };
            let steps = (sweep.abs() / ARC_STEP).ceil().max(1.0) as usize;
            for s in 1..steps {
                polyline.push(disc.center + Vec2::polar(disc.radius, a0 + sweep * s as f64 / steps as f64));
            }
        }
        polyline.push(nodes[to].p);
    }
    Ok(PathEstimate::from_polyline(polyline, speed))
}

fn distance_to_polyline(p: Vec2, poly: &[Vec2]) -> f64 {
    match poly {
        [] => f64::INFINITY,
        [q] => p.distance(*q),
        _ => poly
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Length of `p1` lying within `clearance` of `p2`, measured on pieces of at
/// most [`OVERLAP_STEP`] tested at their midpoints.
pub fn overlap_length(p1: &PathEstimate, p2: &PathEstimate, clearance: f64) -> f64 {
    let mut total = 0.0;
    for w in p1.polyline.windows(2) {
        let len = w[0].distance(w[1]);
        if len == 0.0 {
            continue;
        }
        let pieces = (len / OVERLAP_STEP).ceil() as usize;
        let piece = len / pieces as f64;
        for k in 0..pieces {
            let mid = w[0] + (w[1] - w[0]) * ((k as f64 + 0.5) / pieces as f64);
            if distance_to_polyline(mid, &p2.polyline) < clearance {
                total += piece;
            }
        }
    }
    total
}

/// Dense `N⁴` overlap table indexed as `(i, j, i', j')`.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapTensor {
    n: usize,
    data: Vec<f64>,
}

impl OverlapTensor {
    pub fn zeros(n: usize) -> Self {
        OverlapTensor {
            n,
            data: vec![0.0; n.pow(4)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.index(i, j, k, l)]
    }

    /// Sets both `(i, j, k, l)` and its mirror `(k, l, i, j)`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let a = self.index(i, j, k, l);
        let b = self.index(k, l, i, j);
        self.data[a] = value;
        self.data[b] = value;
    }

    fn has_negative(&self) -> bool {
        self.data.iter().any(|v| *v < 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentProblem {
    pub travel_times: Vec<Vec<f64>>,
    pub overlaps: OverlapTensor,
    /// Weight of overlap meters against travel seconds.
    pub overlap_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `perm[i]` is the slot given to defender `i`.
    pub perm: Vec<usize>,
    pub objective: f64,
}

impl AssignmentProblem {
    pub fn new(travel_times: Vec<Vec<f64>>, overlaps: OverlapTensor) -> Self {
        AssignmentProblem {
            travel_times,
            overlaps,
            overlap_weight: 1.0,
        }
    }

    pub fn size(&self) -> usize {
        self.travel_times.len()
    }

    fn validate(&self) -> Result<(), AssignmentError> {
        let rows = self.travel_times.len();
        for (row, r) in self.travel_times.iter().enumerate() {
            if r.len() != rows {
                return Err(AssignmentError::NonSquare {
                    rows,
                    row,
                    cols: r.len(),
                });
            }
        }
        if self.overlaps.size() != rows {
            return Err(AssignmentError::OverlapShape(rows));
        }
        Ok(())
    }

    pub fn objective(&self, perm: &[usize]) -> f64 {
        let travel: f64 = perm.iter().enumerate().map(|(i, &j)| self.travel_times[i][j]).sum();
        let mut overlap = 0.0;
        for i in 0..perm.len() {
            for k in i + 1..perm.len() {
                overlap += self.overlaps.get(i, perm[i], k, perm[k]);
            }
        }
        travel + self.overlap_weight * overlap
    }
}

/// Exact search up to [`EXACT_LIMIT`] defenders, local search beyond.
pub fn solve_assignment(problem: &AssignmentProblem) -> Result<Assignment, AssignmentError> {
    if problem.size() <= EXACT_LIMIT {
        solve_exact(problem)
    } else {
        solve_heuristic(problem)
    }
}

struct Search<'a> {
    problem: &'a AssignmentProblem,
    prune: bool,
    row_min: Vec<f64>,
    perm: Vec<usize>,
    used: Vec<bool>,
    best: Option<Assignment>,
}

impl Search<'_> {
    fn visit(&mut self, depth: usize, partial: f64) {
        let n = self.perm.len();
        if depth == n {
            let objective = self.problem.objective(&self.perm);
            if self.best.as_ref().is_none_or(|b| objective < b.objective) {
                self.best = Some(Assignment {
                    perm: self.perm.clone(),
                    objective,
                });
            }
            return;
        }
        for j in 0..n {
            if self.used[j] {
                continue;
            }
            let mut cost = partial + self.problem.travel_times[depth][j];
            for i in 0..depth {
                cost += self.problem.overlap_weight * self.problem.overlaps.get(i, self.perm[i], depth, j);
            }
            if self.prune {
                let bound: f64 = cost + self.row_min[depth + 1..].iter().sum::<f64>();
                if let Some(b) = &self.best {
                    if bound > b.objective + 1e-9 * (1.0 + b.objective.abs()) {
                        continue;
                    }
                }
            }
            self.perm[depth] = j;
            self.used[j] = true;
            self.visit(depth + 1, cost);
            self.used[j] = false;
        }
    }
}

/// Branch and bound over permutations in lexicographic order; the first
/// permutation reaching the minimum wins ties.
pub fn solve_exact(problem: &AssignmentProblem) -> Result<Assignment, AssignmentError> {
    problem.validate()?;
    let n = problem.size();
    let prune = problem.overlap_weight >= 0.0 && !problem.overlaps.has_negative();
    let mut search = Search {
        problem,
        prune,
        row_min: problem
            .travel_times
            .iter()
            .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
            .collect(),
        perm: vec![0; n],
        used: vec![false; n],
        best: None,
    };
    search.visit(0, 0.0);
    Ok(search.best.unwrap_or(Assignment {
        perm: Vec::new(),
        objective: 0.0,
    }))
}

/// Greedy construction followed by pairwise swaps until no swap improves.
pub fn solve_heuristic(problem: &AssignmentProblem) -> Result<Assignment, AssignmentError> {
    problem.validate()?;
    let n = problem.size();
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for i in 0..n {
        let mut pick = None;
        let mut pick_cost = f64::INFINITY;
        for j in (0..n).filter(|&j| !used[j]) {
            let mut cost = problem.travel_times[i][j];
            for (k, &l) in perm.iter().enumerate() {
                cost += problem.overlap_weight * problem.overlaps.get(k, l, i, j);
            }
            if cost < pick_cost {
                pick = Some(j);
                pick_cost = cost;
            }
        }
        let j = pick.unwrap_or_else(|| (0..n).find(|&j| !used[j]).unwrap_or(0));
        used[j] = true;
        perm.push(j);
    }
    let mut objective = problem.objective(&perm);
    let mut improved = true;
    while improved {
        improved = false;
        for a in 0..n {
            for b in a + 1..n {
                perm.swap(a, b);
                let candidate = problem.objective(&perm);
                if candidate < objective - 1e-12 * (1.0 + objective.abs()) {
                    objective = candidate;
                    improved = true;
                } else {
                    perm.swap(a, b);
                }
            }
        }
    }
    Ok(Assignment { perm, objective })
}

/// Travel-time and overlap tables for sending `defenders` to `slots`.
pub fn build_problem(
    defenders: &[Vec2],
    slots: &[Vec2],
    obstacles: &[Obstacle],
    t: f64,
    speed: f64,
    clearance: f64,
    overlap_weight: f64,
) -> Result<(AssignmentProblem, Vec<Vec<PathEstimate>>), AssignmentError> {
    let n = defenders.len();
    if slots.len() != n {
        return Err(AssignmentError::NonSquare {
            rows: n,
            row: 0,
            cols: slots.len(),
        });
    }
    let discs: Vec<Disc> = obstacles.iter().map(|o| Disc::of(o, t)).collect();
    let paths = defenders
        .iter()
        .map(|&d| {
            slots
                .iter()
                .map(|&s| shortest_path_discs(d, s, &discs, speed))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let travel_times = paths
        .iter()
        .map(|r| r.iter().map(|p| p.travel_time).collect())
        .collect();
    let mut overlaps = OverlapTensor::zeros(n);
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..n {
                for l in (0..n).filter(|&l| l != j) {
                    let s = 0.5
                        * (overlap_length(&paths[i][j], &paths[k][l], clearance)
                            + overlap_length(&paths[k][l], &paths[i][j], clearance));
                    overlaps.set(i, j, k, l, s);
                }
            }
        }
    }
    Ok((
        AssignmentProblem {
            travel_times,
            overlaps,
            overlap_weight,
        },
        paths,
    ))
}

/// Minor arc length between two boundary points of a disc.
pub fn minor_arc(disc: &Disc, a: Vec2, b: Vec2) -> f64 {
    let sweep = normalize_angle((b - disc.center).angle() - (a - disc.center).angle()).abs();
    disc.radius * sweep.min(2.0 * PI - sweep)
}
