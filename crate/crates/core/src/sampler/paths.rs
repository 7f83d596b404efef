//! Step I: collision-free paths from an elastic-band lattice.
//!
//! Nodes sit on layers spaced `node_spacing` apart along the reference path,
//! one per lateral offset. A path visits one node per layer. A node is
//! admissible on a path when the weighted magnitude of its contraction,
//! repulsion and attraction forces (which depend on the path's neighbours)
//! stays below the threshold; an edge is admissible when it keeps the
//! vehicle footprint clear of every obstacle swept volume.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{param, Result};
use crate::geometry::{Capsule, ObstacleField, Point2, Polyline};
use crate::rng::Stream;
use crate::types::{SamplerConfig, Scenario};

/// A lattice node with its incoming and outgoing neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNode {
    pub position: Point2,
    pub prev: Point2,
    pub next: Point2,
}

impl ElasticNode {
    pub fn in_edge(&self) -> (Point2, Point2) {
        (self.prev, self.position)
    }

    pub fn out_edge(&self) -> (Point2, Point2) {
        (self.position, self.next)
    }
}

/// The three force vectors acting on a node, before weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forces {
    pub contract: Point2,
    pub repel: Point2,
    pub attract: Point2,
}

/// Obstacles and the lane centre a path is planned against.
#[derive(Debug, Clone)]
pub struct Environment {
    pub field: ObstacleField,
    pub center: Polyline,
}

impl Environment {
    /// Static obstacles of `scenario` plus the swept volume of the
    /// interacting vehicle: its footprint moved at constant velocity from
    /// its state at `t0` over `tau_predict`.
    pub fn new(scenario: &Scenario, t0: f64, cfg: &SamplerConfig) -> Result<Self> {
        let center = scenario.ego_path()?.line.clone();
        let mut field = ObstacleField {
            polygons: scenario.obstacles.clone(),
            capsules: Vec::new(),
            grid: scenario.grid.clone(),
        };
        if let Some(other) = &scenario.other_agent {
            let s = other.state_at(t0);
            field.capsules.push(Capsule {
                a: s.position(),
                b: s.position() + s.velocity() * cfg.tau_predict,
                radius: cfg.vehicle_radius,
            });
        }
        Ok(Environment { field, center })
    }

    /// Whether the footprint stays clear of every obstacle along `a -> b`.
    pub fn edge_is_free(&self, a: Point2, b: Point2, radius: f64) -> bool {
        self.field.segment_clearance(a, b) > radius
    }
}

pub fn node_forces(node: &ElasticNode, env: &Environment, cfg: &SamplerConfig) -> Forces {
    let p = node.position;
    let contract = (node.prev - p) + (node.next - p);
    let mut repel = Point2::new(0.0, 0.0);
    for (d, c) in env.field.distances(p, cfg.d_influence) {
        if d >= cfg.d_influence {
            continue;
        }
        if d <= 0.0 {
            repel = Point2::new(f64::INFINITY, f64::INFINITY);
            break;
        }
        let grad = (p - c) * (1.0 / d);
        repel = repel + grad * (cfg.k_rep * (1.0 / d - 1.0 / cfg.d_influence));
    }
    let attract = (env.center.project(p).point - p) * cfg.k_att;
    Forces {
        contract,
        repel,
        attract,
    }
}

/// `w_contract |F_contract| + w_repel |F_repel| + w_attract |F_attract|`.
pub fn node_force(node: &ElasticNode, env: &Environment, cfg: &SamplerConfig) -> f64 {
    let f = node_forces(node, env, cfg);
    cfg.w_contract * f.contract.norm() + cfg.w_repel * f.repel.norm() + cfg.w_attract * f.attract.norm()
}

/// A piecewise-linear path from the start to the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCandidate {
    pub line: Polyline,
    /// Lateral offset of each interior node from the reference path.
    pub offsets: Vec<f64>,
    pub collision_free: bool,
}

struct Lattice {
    /// Node positions per layer; the first and last layers hold only the
    /// start and the goal.
    layers: Vec<Vec<Point2>>,
    offsets: Vec<Vec<f64>>,
}

fn build_lattice(env: &Environment, start: Point2, goal: Point2, cfg: &SamplerConfig) -> Result<Lattice> {
    let ps = env.center.project(start);
    let pg = env.center.project(goal);
    let span = pg.station - ps.station;
    if !(span > 0.0) {
        return Err(param("goal does not lie ahead of the start along the reference path"));
    }
    let mut interior = libm::ceil(span / cfg.node_spacing) as usize;
    interior = interior.saturating_sub(1);
    if interior > 0 && span - interior as f64 * cfg.node_spacing < 0.5 * cfg.node_spacing {
        interior -= 1;
    }
    let mut layers = vec![vec![start]];
    let mut offsets = vec![vec![ps.lateral]];
    for j in 1..=interior {
        let s = ps.station + j as f64 * cfg.node_spacing;
        let base = env.center.point_at(s);
        let n = env.center.normal_at(s);
        layers.push(cfg.lateral_offsets.iter().map(|&o| base + n * o).collect());
        offsets.push(cfg.lateral_offsets.clone());
    }
    layers.push(vec![goal]);
    offsets.push(vec![pg.lateral]);
    Ok(Lattice { layers, offsets })
}

/// Lattice state: node `o` on layer `j` reached from node `p` on layer
/// `j - 1`.
type Key = (usize, usize, usize);

/// Collision-free paths from `start` to `goal`. Reachable admissible states
/// are found by a breadth-first sweep over the lattice, dead ends are
/// pruned backwards, and up to `cfg.max_paths` distinct paths are drawn:
/// first the path hugging the reference line most closely, then random
/// walks over the pruned graph.
pub fn sample_paths(
    env: &Environment,
    start: Point2,
    goal: Point2,
    cfg: &SamplerConfig,
    rng: &mut Stream,
) -> Result<Vec<PathCandidate>> {
    let lat = build_lattice(env, start, goal, cfg)?;
    let nl = lat.layers.len();
    let r = cfg.vehicle_radius;
    // Admissible edges between consecutive layers.
    let mut edge_ok: Vec<Vec<Vec<bool>>> = Vec::with_capacity(nl - 1);
    for j in 0..nl - 1 {
        let a = &lat.layers[j];
        let b = &lat.layers[j + 1];
        edge_ok.push(
            a.iter()
                .enumerate()
                .map(|(ia, &pa)| {
                    b.iter()
                        .enumerate()
                        .map(|(ib, &pb)| {
                            (lat.offsets[j + 1][ib] - lat.offsets[j][ia]).abs() <= cfg.max_lateral_step + 1e-9
                                && env.edge_is_free(pa, pb, r)
                        })
                        .collect()
                })
                .collect(),
        );
    }
    // Forward sweep: succ[(j, o, p)] lists admissible next nodes q.
    let mut succ: alloc::collections::BTreeMap<Key, Vec<usize>> = alloc::collections::BTreeMap::new();
    let mut frontier: BTreeSet<Key> = BTreeSet::new();
    for o in 0..lat.layers[1].len() {
        if edge_ok[0][0][o] {
            frontier.insert((1, o, 0));
        }
    }
    for j in 1..nl - 1 {
        let mut next = BTreeSet::new();
        for &(_, o, p) in &frontier {
            let mut qs = Vec::new();
            for q in 0..lat.layers[j + 1].len() {
                if !edge_ok[j][o][q] {
                    continue;
                }
                let node = ElasticNode {
                    position: lat.layers[j][o],
                    prev: lat.layers[j - 1][p],
                    next: lat.layers[j + 1][q],
                };
                if node_force(&node, env, cfg) <= cfg.f_threshold {
                    qs.push(q);
                    if j + 1 < nl - 1 {
                        next.insert((j + 1, q, o));
                    }
                }
            }
            succ.insert((j, o, p), qs);
        }
        frontier = next;
    }
    // Backward pruning: a state is viable when it reaches the goal.
    let mut viable: BTreeSet<Key> = BTreeSet::new();
    for j in (1..nl - 1).rev() {
        for (&(jj, o, p), qs) in succ.range((j, 0, 0)..(j + 1, 0, 0)) {
            debug_assert_eq!(jj, j);
            let ok = if j == nl - 2 {
                !qs.is_empty()
            } else {
                qs.iter().any(|&q| viable.contains(&(j + 1, q, o)))
            };
            if ok {
                viable.insert((j, o, p));
            }
        }
    }
    let viable_next = |j: usize, o: usize, p: usize| -> Vec<usize> {
        succ.get(&(j, o, p))
            .map(|qs| {
                qs.iter()
                    .copied()
                    .filter(|&q| j + 1 == nl - 1 || viable.contains(&(j + 1, q, o)))
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut out = Vec::new();
    if nl == 2 {
        if edge_ok[0][0][0] {
            out.push(make_candidate(&lat, &[0, 0]));
        }
        return Ok(out);
    }
    let firsts: Vec<usize> = (0..lat.layers[1].len())
        .filter(|&o| viable.contains(&(1, o, 0)))
        .collect();
    if firsts.is_empty() {
        return Ok(out);
    }
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let walk = |choose: &mut dyn FnMut(&[usize], &[f64]) -> usize| -> Vec<usize> {
        let mut seq = vec![0usize];
        let o1 = choose(&firsts, &lat.offsets[1]);
        seq.push(o1);
        for j in 1..nl - 1 {
            let (o, p) = (seq[j], seq[j - 1]);
            let qs = viable_next(j, o, p);
            let q = choose(&qs, &lat.offsets[j + 1]);
            seq.push(q);
        }
        seq
    };
    let central = walk(&mut |opts: &[usize], offs: &[f64]| {
        *opts
            .iter()
            .min_by(|a, b| offs[**a].abs().partial_cmp(&offs[**b].abs()).unwrap())
            .unwrap()
    });
    seen.insert(central.clone());
    out.push(make_candidate(&lat, &central));
    let attempts = cfg.max_paths * 20;
    for _ in 0..attempts {
        if out.len() >= cfg.max_paths {
            break;
        }
        let seq = walk(&mut |opts: &[usize], _: &[f64]| opts[rng.random_range(0..opts.len())]);
        if seen.insert(seq.clone()) {
            out.push(make_candidate(&lat, &seq));
        }
    }
    Ok(out)
}

fn make_candidate(lat: &Lattice, seq: &[usize]) -> PathCandidate {
    let pts: Vec<Point2> = seq.iter().enumerate().map(|(j, &o)| lat.layers[j][o]).collect();
    let offsets = seq
        .iter()
        .enumerate()
        .skip(1)
        .take(seq.len().saturating_sub(2))
        .map(|(j, &o)| lat.offsets[j][o])
        .collect();
    PathCandidate {
        line: Polyline::new(pts).expect("lattice layers are distinct"),
        offsets,
        collision_free: true,
    }
}
