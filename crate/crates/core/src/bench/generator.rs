use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::execute;
use crate::graph::build_graph;
use crate::model::{Allocation, Machine, Operation, OperationType, PrecedenceSet, Robot, Scene, StateLabel, Workpiece};
use crate::program::assemble_program;
use crate::schedule::{brute_force_optimal, solve_fifo, ScheduleOrigin, DEFAULT_ORACLE_CAP};
use crate::task::{validate_task, GroundTruth, TaskInstance, Tier};
use crate::tree::reference_tree;

const MAX_ATTEMPTS: usize = 64;
pub const POINTS: [&str; 4] = ["Photo_Point", "Pick_Point", "Place_Point", "Work_Point"];
const KINDS: [&str; 4] = ["plate", "bracket", "pipe", "housing"];
const PROCESSING: [OperationType; 4] =
    [OperationType::Polishing, OperationType::Welding, OperationType::Beveling, OperationType::Assembly];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TierSpec {
    pub tier: Tier,
    pub max_robots: usize,
    pub max_ops: usize,
    pub seed: u64,
}

impl TierSpec {
    pub fn new(tier: Tier, seed: u64) -> Self {
        let (max_robots, max_ops) = match tier {
            Tier::SingleRobot => (1, 5),
            Tier::SimpleMulti => (3, 10),
            Tier::ComplexMulti => (7, 24),
        };
        TierSpec { tier, max_robots, max_ops, seed }
    }

    fn min_robots(&self) -> usize {
        match self.tier {
            Tier::SingleRobot => 1,
            Tier::SimpleMulti => 2,
            Tier::ComplexMulti => 3,
        }
        .min(self.max_robots)
    }

    fn tables_per_type(&self) -> usize {
        if self.tier == Tier::ComplexMulti {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("no valid instance after {0} attempts")]
    RetryExhausted(usize),
    #[error("tier caps out of bounds: {0}")]
    BadSpec(String),
}

pub fn tool_for(op_type: OperationType) -> &'static str {
    match op_type {
        OperationType::Transport => "magnetic_gripper",
        OperationType::Polishing => "polishing_spindle",
        OperationType::Welding => "welding_gun",
        OperationType::Beveling => "beveling_cutter",
        OperationType::Assembly => "fastening_tool",
    }
}

fn table_id(op_type: OperationType, n: usize) -> String {
    format!("{}_table_{n}", op_type.as_str())
}

fn machine(id: &str, name: &str, exclusive: bool) -> Machine {
    Machine {
        id: id.into(),
        name: name.into(),
        held_workpieces: vec![],
        exclusive,
        points: POINTS.iter().map(|s| s.to_string()).collect(),
    }
}

/// Draws processing sequences per workpiece until the operation budget
/// is spent. Each workpiece with `k` processing steps costs `2k + 1` ops.
fn draw_sequences(rng: &mut ChaCha8Rng, spec: &TierSpec) -> Vec<Vec<OperationType>> {
    let budget = rng.gen_range(spec.max_ops.div_ceil(2)..=spec.max_ops);
    let mut left = budget;
    let mut out = Vec::new();
    while left >= 1 {
        let k_max = ((left - 1) / 2).min(3);
        let k = rng.gen_range(0..=k_max);
        let mut types = PROCESSING.to_vec();
        types.shuffle(rng);
        types.truncate(k);
        left -= 2 * k + 1;
        out.push(types);
        if out.len() >= 2 && rng.gen_bool(0.25) {
            break;
        }
    }
    out
}

fn draw(rng: &mut ChaCha8Rng, spec: &TierSpec) -> TaskInstance {
    let sequences = draw_sequences(rng, spec);
    let pallet_count = rng.gen_range(1..=2usize);
    let tables = spec.tables_per_type();

    let mut machines = vec![machine("conveyor", "conveyor", false)];
    let mut workpieces = Vec::new();
    let mut ops = Vec::new();
    let mut used_tables = BTreeSet::new();
    let mut sentences = Vec::new();

    for (w, seq) in sequences.iter().enumerate() {
        let wid = format!("w{}", w + 1);
        let kind = *KINDS.choose(rng).expect("non-empty");
        machines[0].held_workpieces.push(wid.clone());
        let mut at = "conveyor".to_string();
        let mut steps = Vec::new();
        for &t in seq {
            let table = table_id(t, rng.gen_range(1..=tables));
            used_tables.insert((t, table.clone()));
            ops.push(Operation::transport("", &wid, &at, &table));
            ops.push(Operation::process("", t, &wid, &table));
            steps.push(format!("{} it on {table}", verb(t)));
            at = table;
        }
        let pallet = format!("pallet_{}", rng.gen_range(1..=pallet_count));
        ops.push(Operation::transport("", &wid, &at, &pallet));
        steps.push(format!("place it on {pallet}"));
        sentences.push(format!("Take {kind} {wid} from the conveyor, {}.", steps.join(", then ")));
        workpieces.push(Workpiece {
            id: wid,
            kind: kind.into(),
            state_sequence: seq.iter().filter_map(|t| t.flag()).collect::<Vec<StateLabel>>(),
        });
    }
    for (t, table) in &used_tables {
        let name = format!("{} table {}", t.as_str(), table.rsplit('_').next().unwrap_or("1"));
        machines.push(machine(table, &name, true));
    }
    for p in 1..=pallet_count {
        machines.push(machine(&format!("pallet_{p}"), &format!("pallet {p}"), false));
    }

    let robot_count = rng.gen_range(spec.min_robots()..=spec.max_robots);
    let mut robots: Vec<Robot> = (1..=robot_count)
        .map(|r| {
            let camera = if rng.gen_bool(0.7) { "bracket_camera" } else { "handheld_camera" };
            Robot {
                id: format!("r{r}"),
                devices: BTreeSet::from([camera.to_string()]),
                reachable_machines: BTreeSet::new(),
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for (i, op) in ops.iter_mut().enumerate() {
        op.id = format!("tmp{i:02}");
        let r = rng.gen_range(0..robot_count);
        let robot = &mut robots[r];
        robot.reachable_machines.extend(op.machines().cloned());
        if op.op_type == OperationType::Transport {
            let has_gripper = robot.devices.iter().any(|d| d.ends_with("_gripper"));
            if !has_gripper {
                let g = if rng.gen_bool(0.5) { "magnetic_gripper" } else { "vacuum_gripper" };
                robots[r].devices.insert(g.into());
            }
        } else {
            robot.devices.insert(tool_for(op.op_type).into());
        }
        pairs.push((op.id.clone(), format!("r{}", r + 1)));
    }
    for robot in &mut robots {
        for m in &machines {
            if rng.gen_bool(0.2) {
                robot.reachable_machines.insert(m.id.clone());
            }
        }
    }

    let scene = Scene { robots, machines, workpieces };
    let alloc: Allocation = pairs.into_iter().collect();
    TaskInstance {
        task_id: Some(format!("{}-{:04}", spec.tier, spec.seed)),
        tier: Some(spec.tier),
        scene,
        instruction: sentences.join(" "),
        ground_truth: Some(GroundTruth {
            precedence: PrecedenceSet::from_operation_order(&ops),
            operations: ops,
            allocation: alloc,
            program: None,
            schedule: None,
        }),
    }
}

fn verb(t: OperationType) -> &'static str {
    match t {
        OperationType::Polishing => "polish",
        OperationType::Welding => "weld",
        OperationType::Beveling => "bevel",
        OperationType::Assembly => "assemble",
        OperationType::Transport => "move",
    }
}

/// Renames operations `op01, op02, ...` in the given order and rewrites the
/// allocation, precedence and start steps to match.
fn renumber(gt: &mut GroundTruth, order: &[usize], starts: &BTreeMap<String, u32>) -> BTreeMap<String, u32> {
    let width = gt.operations.len().to_string().len().max(2);
    let rename: BTreeMap<String, String> =
        order.iter().enumerate().map(|(k, &i)| (gt.operations[i].id.clone(), format!("op{:0width$}", k + 1))).collect();
    let mut ops: Vec<Operation> = order.iter().map(|&i| gt.operations[i].clone()).collect();
    for op in &mut ops {
        op.id = rename[&op.id].clone();
    }
    gt.allocation = gt.allocation.pairs.iter().map(|(k, v)| (rename[k].clone(), v.clone())).collect();
    gt.precedence = PrecedenceSet::from_operation_order(&ops);
    gt.operations = ops;
    starts.iter().map(|(k, s)| (rename[k].clone(), *s)).collect()
}

fn finish(mut task: TaskInstance) -> Option<TaskInstance> {
    let scene = task.scene.clone();
    let gt = task.ground_truth.as_mut()?;
    let graph = build_graph(&scene, &gt.operations, &gt.allocation, &gt.precedence).ok()?;
    let n = gt.operations.len();

    let (starts, origin) = if n <= DEFAULT_ORACLE_CAP {
        (brute_force_optimal(&graph).ok()?.start_step, ScheduleOrigin::Oracle)
    } else {
        let order: Vec<String> = gt.operations.iter().map(|o| o.id.clone()).collect();
        (solve_fifo(&graph, &order).ok()?.start_step, ScheduleOrigin::Fifo)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (starts[&gt.operations[i].id], i));
    let starts = renumber(gt, &order, &starts);

    let graph = build_graph(&scene, &gt.operations, &gt.allocation, &gt.precedence).ok()?;
    let ids: Vec<String> = gt.operations.iter().map(|o| o.id.clone()).collect();
    let schedule = match origin {
        ScheduleOrigin::Fifo => solve_fifo(&graph, &ids).ok()?,
        _ => crate::schedule::ScheduleGraph::from_start_steps(&graph, starts).ok()?,
    };
    let program = assemble_program(&reference_tree(), &gt.operations, &gt.allocation, &scene).ok()?;
    if !execute(&schedule, &program, &scene).executed_fully {
        return None;
    }
    let mut doc = schedule.to_doc();
    doc.origin = Some(origin);
    gt.schedule = Some(doc);
    gt.program = Some(program);
    validate_task(&task).passed().then_some(task)
}

/// A random valid task with embedded ground truth; deterministic in `spec`.
pub fn generate_instance(spec: TierSpec) -> Result<TaskInstance, GenerateError> {
    let caps = TierSpec::new(spec.tier, spec.seed);
    let (cap_robots, cap_ops) = (caps.max_robots, caps.max_ops);
    if spec.max_robots == 0 || spec.max_robots > cap_robots || spec.max_ops == 0 || spec.max_ops > cap_ops {
        return Err(GenerateError::BadSpec(format!(
            "{}: robots {} (cap {cap_robots}), ops {} (cap {cap_ops})",
            spec.tier, spec.max_robots, spec.max_ops
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(task) = finish(draw(&mut rng, &spec)) {
            return Ok(task);
        }
    }
    Err(GenerateError::RetryExhausted(MAX_ATTEMPTS))
}

/// `count` instances of one tier with seeds `seed, seed + 1, ...`.
pub fn generate_suite(tier: Tier, count: usize, seed: u64) -> Result<Vec<TaskInstance>, GenerateError> {
    (0..count as u64).map(|i| generate_instance(TierSpec::new(tier, seed.wrapping_add(i)))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_planner_output;

    #[test]
    fn tier_bounds_hold() {
        for tier in Tier::ALL {
            for seed in 0..15 {
                let spec = TierSpec::new(tier, seed);
                let task = generate_instance(spec).unwrap();
                let gt = task.ground_truth.as_ref().unwrap();
                assert!(task.scene.robots.len() <= spec.max_robots);
                assert!(!gt.operations.is_empty() && gt.operations.len() <= spec.max_ops);
                assert!(validate_planner_output(&task.scene, &gt.operations, &gt.allocation, &gt.precedence).passed());
                let origin = gt.schedule.as_ref().unwrap().origin.unwrap();
                assert_eq!(origin == ScheduleOrigin::Oracle, gt.operations.len() <= DEFAULT_ORACLE_CAP);
            }
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_instance(TierSpec::new(Tier::SimpleMulti, 42)).unwrap();
        let b = generate_instance(TierSpec::new(Tier::SimpleMulti, 42)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_instance(TierSpec::new(Tier::SimpleMulti, 43)).unwrap();
        assert_ne!(a.to_json(), c.to_json());
    }

    #[test]
    fn oversized_spec_is_rejected() {
        let mut spec = TierSpec::new(Tier::SingleRobot, 1);
        spec.max_robots = 2;
        assert!(matches!(generate_instance(spec), Err(GenerateError::BadSpec(_))));
    }
}
