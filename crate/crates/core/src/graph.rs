//! Extended disjunctive graph: operation vertices plus source and terminal,
//! conjunctive arcs for per-workpiece precedence, and undirected machine and
//! robot arcs for resource conflicts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Allocation, MachineId, OpId, Operation, PrecedenceSet, RobotId, Scene};
use crate::validate::{validate_planner_output, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexId(pub usize);

impl VertexId {
    pub const SOURCE: VertexId = VertexId(0);
    pub const TERMINAL: VertexId = VertexId(1);

    pub fn of_op(index: usize) -> VertexId {
        VertexId(index + 2)
    }

    /// Position in the operation list, `None` for source and terminal.
    pub fn op_index(self) -> Option<usize> {
        self.0.checked_sub(2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum VertexPayload {
    Source,
    Terminal,
    Operation(OpId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub id: VertexId,
    pub payload: VertexPayload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ConjunctiveArc {
    pub from: VertexId,
    pub to: VertexId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MachineDisjunctiveArc {
    pub a: VertexId,
    pub b: VertexId,
    pub machine: MachineId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RobotDisjunctiveArc {
    pub a: VertexId,
    pub b: VertexId,
    pub robot: RobotId,
}

/// Resources an operation holds for its whole step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpResources {
    pub id: OpId,
    pub workpiece: String,
    pub robot: RobotId,
    pub exclusive_machines: Vec<MachineId>,
}

impl OpResources {
    pub fn conflicts_with(&self, other: &OpResources) -> bool {
        self.robot == other.robot || self.exclusive_machines.iter().any(|m| other.exclusive_machines.contains(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ArcKind {
    Machine,
    Robot,
}

/// Names one disjunctive arc by set and position within that set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ArcRef {
    pub kind: ArcKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    AToB,
    BToA,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("planner output failed validation: {0}")]
    Validation(ValidationReport),
    #[error("disjunctive arc {0:?} has no orientation decision")]
    IncompleteOrientation(ArcRef),
    #[error("orientation decision for nonexistent arc {0:?}")]
    UnknownArc(ArcRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisjunctiveGraph {
    pub vertices: Vec<Vertex>,
    pub conjunctive: Vec<ConjunctiveArc>,
    pub machine_disjunctive: Vec<MachineDisjunctiveArc>,
    pub robot_disjunctive: Vec<RobotDisjunctiveArc>,
    /// Indexed by operation position, parallel to the operation vertices.
    pub resources: Vec<OpResources>,
}

pub fn build_graph(
    scene: &Scene,
    ops: &[Operation],
    alloc: &Allocation,
    prec: &PrecedenceSet,
) -> Result<DisjunctiveGraph, GraphError> {
    let report = validate_planner_output(scene, ops, alloc, prec);
    if !report.passed() {
        return Err(GraphError::Validation(report));
    }

    let index: BTreeMap<&str, usize> = ops.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();

    let mut vertices = vec![
        Vertex { id: VertexId::SOURCE, payload: VertexPayload::Source },
        Vertex { id: VertexId::TERMINAL, payload: VertexPayload::Terminal },
    ];
    vertices.extend(
        ops.iter()
            .enumerate()
            .map(|(i, o)| Vertex { id: VertexId::of_op(i), payload: VertexPayload::Operation(o.id.clone()) }),
    );

    let mut conjunctive = Vec::new();
    let mut chain_of = vec![0usize; ops.len()];
    for (chain, list) in prec.per_workpiece.values().filter(|l| !l.is_empty()).enumerate() {
        let ids: Vec<VertexId> = list.iter().map(|id| VertexId::of_op(index[id.as_str()])).collect();
        conjunctive.push(ConjunctiveArc { from: VertexId::SOURCE, to: ids[0] });
        for pair in ids.windows(2) {
            conjunctive.push(ConjunctiveArc { from: pair[0], to: pair[1] });
        }
        conjunctive.push(ConjunctiveArc { from: ids[ids.len() - 1], to: VertexId::TERMINAL });
        for v in ids {
            chain_of[v.op_index().unwrap()] = chain;
        }
    }

    let resources: Vec<OpResources> = ops
        .iter()
        .map(|o| OpResources {
            id: o.id.clone(),
            workpiece: o.workpiece.clone(),
            robot: alloc.pairs[&o.id].clone(),
            exclusive_machines: o
                .machines()
                .filter(|m| scene.is_exclusive(m))
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        })
        .collect();

    // Chains are disjoint paths, so two operations are conjunctively ordered
    // exactly when they sit on the same chain.
    let mut machine_disjunctive = Vec::new();
    let mut robot_disjunctive = Vec::new();
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            if chain_of[i] == chain_of[j] {
                continue;
            }
            let (a, b) = (VertexId::of_op(i), VertexId::of_op(j));
            for m in &resources[i].exclusive_machines {
                if resources[j].exclusive_machines.contains(m) {
                    machine_disjunctive.push(MachineDisjunctiveArc { a, b, machine: m.clone() });
                }
            }
            if resources[i].robot == resources[j].robot {
                robot_disjunctive.push(RobotDisjunctiveArc { a, b, robot: resources[i].robot.clone() });
            }
        }
    }

    Ok(DisjunctiveGraph { vertices, conjunctive, machine_disjunctive, robot_disjunctive, resources })
}

impl DisjunctiveGraph {
    pub fn op_count(&self) -> usize {
        self.resources.len()
    }

    pub fn op_ids(&self) -> impl Iterator<Item = &OpId> {
        self.resources.iter().map(|r| &r.id)
    }

    pub fn op_vertex(&self, id: &str) -> Option<VertexId> {
        self.resources.iter().position(|r| r.id == id).map(VertexId::of_op)
    }

    pub fn op_id(&self, v: VertexId) -> Option<&OpId> {
        v.op_index().map(|i| &self.resources[i].id)
    }

    /// Every disjunctive arc with its reference and endpoints, machine arcs first.
    pub fn disjunctive_arcs(&self) -> impl Iterator<Item = (ArcRef, VertexId, VertexId)> + '_ {
        let machine = self
            .machine_disjunctive
            .iter()
            .enumerate()
            .map(|(index, arc)| (ArcRef { kind: ArcKind::Machine, index }, arc.a, arc.b));
        let robot = self
            .robot_disjunctive
            .iter()
            .enumerate()
            .map(|(index, arc)| (ArcRef { kind: ArcKind::Robot, index }, arc.a, arc.b));
        machine.chain(robot)
    }

    pub fn disjunctive_count(&self) -> usize {
        self.machine_disjunctive.len() + self.robot_disjunctive.len()
    }

    /// Conjunctive predecessors of each operation, by operation position.
    pub fn conjunctive_predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.op_count()];
        for arc in &self.conjunctive {
            if let (Some(from), Some(to)) = (arc.from.op_index(), arc.to.op_index()) {
                preds[to].push(from);
            }
        }
        preds
    }

    /// Number of operations on the longest conjunctive chain.
    pub fn longest_chain(&self) -> usize {
        self.conjunctive_subgraph().longest_path_vertices()
    }

    pub fn conjunctive_subgraph(&self) -> OrientedGraph {
        OrientedGraph {
            vertices: self.vertices.clone(),
            arcs: self.conjunctive.iter().map(|a| (a.from, a.to)).collect(),
        }
    }

    /// Directs every disjunctive arc according to `decisions`.
    pub fn orient(&self, decisions: &BTreeMap<ArcRef, Direction>) -> Result<OrientedGraph, GraphError> {
        let known: BTreeSet<ArcRef> = self.disjunctive_arcs().map(|(r, _, _)| r).collect();
        if let Some(extra) = decisions.keys().find(|r| !known.contains(r)) {
            return Err(GraphError::UnknownArc(*extra));
        }
        let mut arcs: Vec<(VertexId, VertexId)> = self.conjunctive.iter().map(|a| (a.from, a.to)).collect();
        for (r, a, b) in self.disjunctive_arcs() {
            match decisions.get(&r) {
                None => return Err(GraphError::IncompleteOrientation(r)),
                Some(Direction::AToB) => arcs.push((a, b)),
                Some(Direction::BToA) => arcs.push((b, a)),
            }
        }
        Ok(OrientedGraph { vertices: self.vertices.clone(), arcs })
    }

    /// Graphviz rendering: conjunctive arcs solid, disjunctive arcs dashed and
    /// labelled with the contested resource.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph disjunctive {\n  rankdir=LR;\n");
        let name = |v: VertexId| match &self.vertices[v.0].payload {
            VertexPayload::Source => "S".to_string(),
            VertexPayload::Terminal => "T".to_string(),
            VertexPayload::Operation(id) => id.clone(),
        };
        for v in &self.vertices {
            let _ = writeln!(out, "  \"{}\";", name(v.id));
        }
        for arc in &self.conjunctive {
            let _ = writeln!(out, "  \"{}\" -- \"{}\" [dir=forward, style=solid];", name(arc.from), name(arc.to));
        }
        for arc in &self.machine_disjunctive {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [style=dashed, label=\"machine:{}\"];",
                name(arc.a),
                name(arc.b),
                arc.machine
            );
        }
        for arc in &self.robot_disjunctive {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [style=dashed, label=\"robot:{}\"];",
                name(arc.a),
                name(arc.b),
                arc.robot
            );
        }
        out.push_str("}\n");
        out
    }
}

/// A purely directed graph over the same vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrientedGraph {
    pub vertices: Vec<Vertex>,
    pub arcs: Vec<(VertexId, VertexId)>,
}

impl OrientedGraph {
    /// Kahn's algorithm; `None` when a directed cycle blocks the order.
    pub fn topological_order(&self) -> Option<Vec<VertexId>> {
        let n = self.vertices.len();
        let mut indegree = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for &(from, to) in &self.arcs {
            indegree[to.0] += 1;
            succ[from.0].push(to);
        }
        let mut queue: VecDeque<VertexId> = (0..n).filter(|&v| indegree[v] == 0).map(VertexId).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &succ[v.0] {
                indegree[w.0] -= 1;
                if indegree[w.0] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn predecessors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.arcs.iter().filter(move |(_, to)| *to == v).map(|(from, _)| *from)
    }

    fn longest_path_vertices(&self) -> usize {
        let Some(order) = self.topological_order() else {
            return 0;
        };
        let mut depth = vec![0usize; self.vertices.len()];
        for v in order {
            let own = usize::from(v.op_index().is_some());
            let best = self.predecessors(v).map(|p| depth[p.0]).max().unwrap_or(0);
            depth[v.0] = best + own;
        }
        depth.into_iter().max().unwrap_or(0)
    }
}

pub fn is_acyclic(graph: &OrientedGraph) -> bool {
    graph.topological_order().is_some()
}
