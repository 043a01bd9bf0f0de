//! Unit-step schedules over a disjunctive graph: the FIFO dispatch solver,
//! an exhaustive optimal oracle for small instances, and feasibility checks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{is_acyclic, ArcRef, Direction, DisjunctiveGraph, OrientedGraph, VertexId};
use crate::model::OpId;

pub const DEFAULT_ORACLE_CAP: usize = 10;
/// Hard ceiling for the oracle's bitset state encoding.
const ORACLE_HARD_LIMIT: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("operation order is not a permutation of the graph's operations: {0}")]
    NotAPermutation(String),
    #[error("instance has {ops} operations, oracle cap is {cap}")]
    InstanceTooLarge { ops: usize, cap: usize },
    #[error("start steps do not cover operation `{0}`")]
    MissingStart(OpId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleGraph {
    pub oriented_graph: OrientedGraph,
    pub start_step: BTreeMap<OpId, u32>,
    pub makespan: u32,
}

impl ScheduleGraph {
    /// Orients every disjunctive arc from the earlier-starting endpoint.
    ///
    /// Equal starts are oriented a→b; `is_feasible` rejects them afterwards.
    pub fn from_start_steps(graph: &DisjunctiveGraph, start_step: BTreeMap<OpId, u32>) -> Result<Self, ScheduleError> {
        let mut starts = Vec::with_capacity(graph.op_count());
        for id in graph.op_ids() {
            starts.push(*start_step.get(id).ok_or_else(|| ScheduleError::MissingStart(id.clone()))?);
        }
        let decisions: BTreeMap<ArcRef, Direction> = graph
            .disjunctive_arcs()
            .map(|(r, a, b)| {
                let (sa, sb) = (starts[a.op_index().unwrap()], starts[b.op_index().unwrap()]);
                (r, if sa <= sb { Direction::AToB } else { Direction::BToA })
            })
            .collect();
        let oriented_graph = graph.orient(&decisions).expect("decisions cover every arc");
        let makespan = compute_makespan(&start_step);
        Ok(ScheduleGraph { oriented_graph, start_step, makespan })
    }

    pub fn to_doc(&self) -> ScheduleDoc {
        ScheduleDoc { start_steps: self.start_step.clone(), makespan: self.makespan, origin: None }
    }

    /// Operations starting at `step`, in id order.
    pub fn ops_at(&self, step: u32) -> Vec<&OpId> {
        self.start_step.iter().filter(|(_, s)| **s == step).map(|(id, _)| id).collect()
    }
}

fn compute_makespan(start_step: &BTreeMap<OpId, u32>) -> u32 {
    start_step.values().max().map_or(0, |m| m + 1)
}

/// Total steps: latest start plus one, zero for an empty schedule.
pub fn makespan(schedule: &ScheduleGraph) -> u32 {
    compute_makespan(&schedule.start_step)
}

/// Where a stored schedule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleOrigin {
    Oracle,
    Fifo,
    Manual,
}

/// File form of a schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    pub start_steps: BTreeMap<OpId, u32>,
    pub makespan: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<ScheduleOrigin>,
}

fn position_map(graph: &DisjunctiveGraph, ops_order: &[OpId]) -> Result<Vec<usize>, ScheduleError> {
    let n = graph.op_count();
    if ops_order.len() != n {
        return Err(ScheduleError::NotAPermutation(format!("{} ids given for {} operations", ops_order.len(), n)));
    }
    let mut priority = vec![usize::MAX; n];
    for (pos, id) in ops_order.iter().enumerate() {
        let v = graph.op_vertex(id).ok_or_else(|| ScheduleError::NotAPermutation(format!("unknown id `{id}`")))?;
        let i = v.op_index().unwrap();
        if priority[i] != usize::MAX {
            return Err(ScheduleError::NotAPermutation(format!("repeated id `{id}`")));
        }
        priority[i] = pos;
    }
    Ok(priority)
}

/// FIFO dispatch with unit durations.
///
/// Each step runs a maximal conflict-free subset of the ready operations,
/// granting every contested robot or machine to whichever operation comes
/// first in `ops_order`.
pub fn solve_fifo(graph: &DisjunctiveGraph, ops_order: &[OpId]) -> Result<ScheduleGraph, ScheduleError> {
    let priority = position_map(graph, ops_order)?;
    let n = graph.op_count();
    let preds = graph.conjunctive_predecessors();
    let mut by_priority: Vec<usize> = (0..n).collect();
    by_priority.sort_by_key(|&i| priority[i]);

    let mut start: Vec<Option<u32>> = vec![None; n];
    let mut remaining = n;
    let mut step = 0u32;
    while remaining > 0 {
        let mut dispatched: Vec<usize> = Vec::new();
        for &i in &by_priority {
            if start[i].is_some() {
                continue;
            }
            let ready = preds[i].iter().all(|&p| matches!(start[p], Some(s) if s < step));
            if !ready {
                continue;
            }
            if dispatched.iter().any(|&d| graph.resources[d].conflicts_with(&graph.resources[i])) {
                continue;
            }
            dispatched.push(i);
        }
        debug_assert!(!dispatched.is_empty(), "a ready operation always exists");
        for &i in &dispatched {
            start[i] = Some(step);
        }
        remaining -= dispatched.len();
        step += 1;
    }

    let start_step = graph.op_ids().cloned().zip(start.into_iter().map(Option::unwrap)).collect();
    ScheduleGraph::from_start_steps(graph, start_step)
}

pub fn brute_force_optimal(graph: &DisjunctiveGraph) -> Result<ScheduleGraph, ScheduleError> {
    brute_force_optimal_with_cap(graph, DEFAULT_ORACLE_CAP)
}

struct Oracle {
    full: u32,
    pred_mask: Vec<u32>,
    conflict_mask: Vec<u32>,
    /// Operation positions sorted by id.
    id_order: Vec<usize>,
    memo: HashMap<u32, (u32, Vec<u8>)>,
}

impl Oracle {
    /// Fewest steps to finish from `done`, with the lexicographically smallest
    /// relative start vector (in id order) among optimal continuations.
    fn solve(&mut self, done: u32) -> (u32, Vec<u8>) {
        if done == self.full {
            return (0, vec![0; self.id_order.len()]);
        }
        if let Some(hit) = self.memo.get(&done) {
            return hit.clone();
        }
        let ready: Vec<usize> =
            (0..self.pred_mask.len()).filter(|&i| done & (1 << i) == 0 && self.pred_mask[i] & !done == 0).collect();
        let mut subsets = Vec::new();
        self.independent_subsets(&ready, 0, 0, &mut subsets);

        let mut best: Option<(u32, Vec<u8>)> = None;
        for chosen in subsets {
            let (dist, rel) = self.solve(done | chosen);
            let vector: Vec<u8> = self
                .id_order
                .iter()
                .enumerate()
                .map(|(k, &i)| if done & (1 << i) != 0 || chosen & (1 << i) != 0 { 0 } else { rel[k] + 1 })
                .collect();
            let candidate = (dist + 1, vector);
            if best.as_ref().is_none_or(|b| candidate < *b) {
                best = Some(candidate);
            }
        }
        let best = best.expect("some ready operation exists");
        self.memo.insert(done, best.clone());
        best
    }

    fn independent_subsets(&self, ready: &[usize], k: usize, chosen: u32, out: &mut Vec<u32>) {
        if k == ready.len() {
            if chosen != 0 {
                out.push(chosen);
            }
            return;
        }
        self.independent_subsets(ready, k + 1, chosen, out);
        let i = ready[k];
        if self.conflict_mask[i] & chosen == 0 {
            self.independent_subsets(ready, k + 1, chosen | (1 << i), out);
        }
    }
}

/// Exhaustive minimum-makespan schedule over every conflict-free dispatch
/// choice per step, memoized on the completed set.
///
/// Ties go to the lexicographically smallest start-step vector with
/// operations taken in id order.
pub fn brute_force_optimal_with_cap(graph: &DisjunctiveGraph, cap: usize) -> Result<ScheduleGraph, ScheduleError> {
    let n = graph.op_count();
    let cap = cap.min(ORACLE_HARD_LIMIT);
    if n > cap {
        return Err(ScheduleError::InstanceTooLarge { ops: n, cap });
    }
    let mut pred_mask = vec![0u32; n];
    for (i, preds) in graph.conjunctive_predecessors().into_iter().enumerate() {
        for p in preds {
            pred_mask[i] |= 1 << p;
        }
    }
    let mut conflict_mask = vec![0u32; n];
    for (i, mask) in conflict_mask.iter_mut().enumerate() {
        for j in 0..n {
            if i != j && graph.resources[i].conflicts_with(&graph.resources[j]) {
                *mask |= 1 << j;
            }
        }
    }
    let mut id_order: Vec<usize> = (0..n).collect();
    id_order.sort_by(|&a, &b| graph.resources[a].id.cmp(&graph.resources[b].id));

    let mut oracle = Oracle {
        full: if n == 0 { 0 } else { u32::MAX >> (32 - n) },
        pred_mask,
        conflict_mask,
        id_order,
        memo: HashMap::new(),
    };
    let (_, rel) = oracle.solve(0);
    let start_step =
        oracle.id_order.iter().zip(rel).map(|(&i, s)| (graph.resources[i].id.clone(), u32::from(s))).collect();
    ScheduleGraph::from_start_steps(graph, start_step)
}

/// Checks orientation completeness, acyclicity, precedence and resource exclusivity.
pub fn is_feasible(schedule: &ScheduleGraph, graph: &DisjunctiveGraph) -> bool {
    if schedule.start_step.len() != graph.op_count() || graph.op_ids().any(|id| !schedule.start_step.contains_key(id)) {
        return false;
    }
    let oriented = &schedule.oriented_graph;
    if oriented.vertices.len() != graph.vertices.len() || !is_acyclic(oriented) {
        return false;
    }
    let has = |from: VertexId, to: VertexId| oriented.arcs.contains(&(from, to));
    if graph.conjunctive.iter().any(|c| !has(c.from, c.to)) {
        return false;
    }
    if graph.disjunctive_arcs().any(|(_, a, b)| !has(a, b) && !has(b, a)) {
        return false;
    }

    let start_of = |v: VertexId| graph.op_id(v).map(|id| schedule.start_step[id]);
    for &(from, to) in &oriented.arcs {
        if let (Some(s_from), Some(s_to)) = (start_of(from), start_of(to)) {
            if s_to < s_from + 1 {
                return false;
            }
        }
    }
    let n = graph.op_count();
    for i in 0..n {
        for j in (i + 1)..n {
            let (ri, rj) = (&graph.resources[i], &graph.resources[j]);
            if ri.conflicts_with(rj) && schedule.start_step[&ri.id] == schedule.start_step[&rj.id] {
                return false;
            }
        }
    }
    schedule.makespan == compute_makespan(&schedule.start_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::model::{Allocation, Machine, Operation, OperationType, PrecedenceSet, Robot, Scene, Workpiece};

    fn scene(robots: &[&str], machines: &[(&str, bool)], workpieces: &[&str]) -> Scene {
        let machine_ids: Vec<String> = machines.iter().map(|(m, _)| m.to_string()).collect();
        Scene {
            robots: robots
                .iter()
                .map(|r| Robot {
                    id: r.to_string(),
                    devices: Default::default(),
                    reachable_machines: machine_ids.iter().cloned().collect(),
                })
                .collect(),
            machines: machines
                .iter()
                .enumerate()
                .map(|(k, (m, exclusive))| Machine {
                    id: m.to_string(),
                    name: m.to_string(),
                    held_workpieces: if k == 0 { workpieces.iter().map(|w| w.to_string()).collect() } else { vec![] },
                    exclusive: *exclusive,
                    points: Default::default(),
                })
                .collect(),
            workpieces: workpieces
                .iter()
                .map(|w| Workpiece { id: w.to_string(), kind: "plate".into(), state_sequence: vec![] })
                .collect(),
        }
    }

    fn ids(ops: &[Operation]) -> Vec<OpId> {
        ops.iter().map(|o| o.id.clone()).collect()
    }

    fn graph_for(scene: &Scene, ops: &[Operation], alloc: &[(&str, &str)]) -> DisjunctiveGraph {
        let alloc: Allocation = alloc.iter().copied().collect();
        build_graph(scene, ops, &alloc, &PrecedenceSet::from_operation_order(ops)).unwrap()
    }

    #[test]
    fn serial_chain() {
        let s = scene(&["r1"], &[("conveyor", false), ("t1", true), ("t2", true)], &["w1"]);
        let ops = vec![
            Operation::transport("o1", "w1", "conveyor", "t1"),
            Operation::process("o2", OperationType::Polishing, "w1", "t1"),
            Operation::transport("o3", "w1", "t1", "t2"),
        ];
        let g = graph_for(&s, &ops, &[("o1", "r1"), ("o2", "r1"), ("o3", "r1")]);
        let sched = solve_fifo(&g, &ids(&ops)).unwrap();
        assert_eq!(sched.start_step.values().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(makespan(&sched), 3);
        assert!(is_feasible(&sched, &g));
    }

    #[test]
    fn independent_ops_run_in_parallel() {
        let s = scene(&["r1", "r2"], &[("t0", true), ("t1", true), ("t2", true)], &["a", "b"]);
        let ops = vec![
            Operation::process("oa", OperationType::Welding, "a", "t1"),
            Operation::process("ob", OperationType::Welding, "b", "t2"),
        ];
        let g = graph_for(&s, &ops, &[("oa", "r1"), ("ob", "r2")]);
        let sched = solve_fifo(&g, &ids(&ops)).unwrap();
        assert_eq!(sched.start_step["oa"], 0);
        assert_eq!(sched.start_step["ob"], 0);
        assert_eq!(sched.makespan, 1);
    }

    #[test]
    fn contention_follows_emission_order() {
        let s = scene(&["r1"], &[("t0", true), ("t1", true), ("t2", true)], &["a", "b"]);
        let ops = vec![
            Operation::process("oa", OperationType::Welding, "a", "t1"),
            Operation::process("ob", OperationType::Welding, "b", "t2"),
        ];
        let g = graph_for(&s, &ops, &[("oa", "r1"), ("ob", "r1")]);
        let sched = solve_fifo(&g, &["ob".to_string(), "oa".to_string()]).unwrap();
        assert_eq!(sched.start_step["ob"], 0);
        assert_eq!(sched.start_step["oa"], 1);
        assert!(is_feasible(&sched, &g));
    }

    #[test]
    fn bad_order_is_rejected() {
        let s = scene(&["r1"], &[("t0", true)], &["a"]);
        let ops = vec![Operation::process("oa", OperationType::Welding, "a", "t0")];
        let g = graph_for(&s, &ops, &[("oa", "r1")]);
        assert!(matches!(solve_fifo(&g, &[]), Err(ScheduleError::NotAPermutation(_))));
        assert!(matches!(solve_fifo(&g, &["zz".to_string()]), Err(ScheduleError::NotAPermutation(_))));
    }

    #[test]
    fn empty_instance() {
        let s = scene(&["r1"], &[("t0", true)], &["a"]);
        let g = graph_for(&s, &[], &[]);
        let sched = solve_fifo(&g, &[]).unwrap();
        assert_eq!(makespan(&sched), 0);
        assert!(is_feasible(&sched, &g));
        assert_eq!(brute_force_optimal(&g).unwrap().makespan, 0);
    }

    #[test]
    fn single_exclusive_machine_serializes() {
        let s = scene(&["r1", "r2", "r3"], &[("conveyor", false), ("table", true)], &["a", "b", "c"]);
        let ops = vec![
            Operation::process("oa", OperationType::Polishing, "a", "table"),
            Operation::process("ob", OperationType::Polishing, "b", "table"),
            Operation::process("oc", OperationType::Polishing, "c", "table"),
        ];
        let g = graph_for(&s, &ops, &[("oa", "r1"), ("ob", "r2"), ("oc", "r3")]);
        let opt = brute_force_optimal(&g).unwrap();
        assert_eq!(opt.makespan, 3);
        // lexicographic tie-break on the id-ordered start vector
        assert_eq!(opt.start_step.values().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(is_feasible(&opt, &g));
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let s = scene(&["r1"], &[("t0", true)], &["a"]);
        let ops: Vec<_> =
            (0..4).map(|k| Operation::process(&format!("o{k}"), OperationType::Welding, "a", "t0")).collect();
        let alloc: Vec<(String, &str)> = ops.iter().map(|o| (o.id.clone(), "r1")).collect();
        let alloc: Allocation = alloc.into_iter().collect();
        let g = build_graph(&s, &ops, &alloc, &PrecedenceSet::from_operation_order(&ops)).unwrap();
        assert_eq!(brute_force_optimal_with_cap(&g, 3), Err(ScheduleError::InstanceTooLarge { ops: 4, cap: 3 }));
        assert_eq!(brute_force_optimal_with_cap(&g, 4).unwrap().makespan, 4);
    }

    #[test]
    fn infeasible_schedules_are_caught() {
        let s = scene(&["r1"], &[("t0", true), ("t1", true), ("t2", true)], &["a", "b"]);
        let ops = vec![
            Operation::process("oa", OperationType::Welding, "a", "t1"),
            Operation::process("ob", OperationType::Welding, "b", "t2"),
            Operation::process("oc", OperationType::Welding, "b", "t2"),
        ];
        let g = graph_for(&s, &ops, &[("oa", "r1"), ("ob", "r1"), ("oc", "r1")]);

        let same_step = BTreeMap::from([("oa".into(), 0), ("ob".into(), 0), ("oc".into(), 1)]);
        let sched = ScheduleGraph::from_start_steps(&g, same_step).unwrap();
        assert!(!is_feasible(&sched, &g));

        let reversed = BTreeMap::from([("oa".into(), 0), ("ob".into(), 2), ("oc".into(), 1)]);
        let sched = ScheduleGraph::from_start_steps(&g, reversed).unwrap();
        assert!(!is_feasible(&sched, &g));

        let good = BTreeMap::from([("oa".into(), 0), ("ob".into(), 1), ("oc".into(), 2)]);
        let mut sched = ScheduleGraph::from_start_steps(&g, good).unwrap();
        assert!(is_feasible(&sched, &g));
        sched.oriented_graph.arcs.pop();
        assert!(!is_feasible(&sched, &g), "dropping an arc leaves it unoriented");
    }

    #[test]
    fn missing_start_is_an_error() {
        let s = scene(&["r1"], &[("t0", true)], &["a"]);
        let ops = vec![Operation::process("oa", OperationType::Welding, "a", "t0")];
        let g = graph_for(&s, &ops, &[("oa", "r1")]);
        assert_eq!(
            ScheduleGraph::from_start_steps(&g, BTreeMap::new()).unwrap_err(),
            ScheduleError::MissingStart("oa".into())
        );
    }
}
