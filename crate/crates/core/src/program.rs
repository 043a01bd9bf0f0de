//! Three-layer programs: per-operation calls, per-operation wrappers that
//! bind parameters, and execution functions shared by operations whose
//! tree branches coincide.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::model::{Allocation, OpId, Operation, OperationType, Scene};
use crate::skill::{bind, classify_arg, Placeholder, Skill, SkillCall, Slot};
use crate::tree::{select_branch, BranchError, NodeIndex, ProcessTree};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Call {
    pub operation: OpId,
    pub wrapper: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wrapper {
    pub execution: String,
    /// Operation semantics applied when the execution function completes.
    pub op_type: OperationType,
    /// Placeholder key (`robot`, `point:Pick_Point`, ...) to concrete value.
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Program {
    pub calls: Vec<Call>,
    pub wrappers: BTreeMap<String, Wrapper>,
    pub executions: BTreeMap<String, Vec<SkillCall>>,
}

impl Program {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("program serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Program, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn call_for(&self, op: &str) -> Option<&Call> {
        self.calls.iter().find(|c| c.operation == op)
    }
}

/// Execution function name derived from the branch's node indices.
pub fn execution_name(branch: &[NodeIndex]) -> String {
    let parts: Vec<String> = branch.iter().map(|i| i.to_string()).collect();
    format!("execute_{}", parts.join("_"))
}

pub fn wrapper_name(op: &str) -> String {
    let ident: String = op.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    format!("run_{ident}")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error("op `{0}` has no robot in the allocation")]
    Unallocated(OpId),
}

/// Selects a branch for every operation, emits one execution function per
/// distinct branch and one wrapper and call per operation (calls in id order).
pub fn assemble_program(
    tree: &ProcessTree,
    ops: &[Operation],
    alloc: &Allocation,
    scene: &Scene,
) -> Result<Program, AssemblyError> {
    let (program, mut errors) = assemble_program_partial(tree, ops, alloc, scene);
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(errors.swap_remove(0))
    }
}

/// Like [`assemble_program`], but skips operations without a usable branch
/// and reports them alongside the program built from the rest.
pub fn assemble_program_partial(
    tree: &ProcessTree,
    ops: &[Operation],
    alloc: &Allocation,
    scene: &Scene,
) -> (Program, Vec<AssemblyError>) {
    let mut program = Program::default();
    let mut errors = Vec::new();
    let mut sorted: Vec<&Operation> = ops.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    for op in sorted {
        let Some(robot_id) = alloc.robot_of(&op.id) else {
            errors.push(AssemblyError::Unallocated(op.id.clone()));
            continue;
        };
        let branch = match select_branch(tree, op, scene.robot(robot_id), scene) {
            Ok(b) => b,
            Err(e) => {
                errors.push(e.into());
                continue;
            }
        };
        let exec = execution_name(&branch);
        let body = program.executions.entry(exec.clone()).or_insert_with(|| tree.branch_snippet(&branch));

        let placeholders: BTreeSet<Placeholder> = body.iter().flat_map(|c| c.placeholders()).collect();
        let mut bindings = BTreeMap::new();
        for p in placeholders {
            let value = match &p {
                Placeholder::Robot => Some(robot_id.clone()),
                Placeholder::Machine1 => Some(op.machine_1.clone()),
                Placeholder::Machine2 => op.machine_2.clone(),
                Placeholder::Workpiece => Some(op.workpiece.clone()),
                Placeholder::Point(name) | Placeholder::Device(name) => Some(name.clone()),
            };
            if let Some(v) = value {
                bindings.insert(p.key(), v);
            }
        }

        let wrapper = wrapper_name(&op.id);
        program.wrappers.insert(wrapper.clone(), Wrapper { execution: exec, op_type: op.op_type, bindings });
        program.calls.push(Call { operation: op.id.clone(), wrapper });
    }
    (program, errors)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProgramIssue {
    MissingWrapper { operation: OpId, wrapper: String },
    MissingExecution { wrapper: String, execution: String },
    UnknownSkill { execution: String, index: usize, skill: String },
    UnboundPlaceholder { wrapper: String, placeholder: String },
    UnknownRobot { wrapper: String, robot: String },
    UnknownMachine { wrapper: String, machine: String },
    MissingPoint { wrapper: String, machine: String, point: String },
    MissingDevice { wrapper: String, robot: String, device: String },
}

impl fmt::Display for ProgramIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramIssue::MissingWrapper { operation, wrapper } => {
                write!(f, "call for `{operation}` names missing wrapper `{wrapper}`")
            }
            ProgramIssue::MissingExecution { wrapper, execution } => {
                write!(f, "wrapper `{wrapper}` names missing execution function `{execution}`")
            }
            ProgramIssue::UnknownSkill { execution, index, skill } => {
                write!(f, "`{execution}` statement {index} uses unknown skill `{skill}`")
            }
            ProgramIssue::UnboundPlaceholder { wrapper, placeholder } => {
                write!(f, "wrapper `{wrapper}` leaves `{placeholder}` unbound")
            }
            ProgramIssue::UnknownRobot { wrapper, robot } => {
                write!(f, "wrapper `{wrapper}` binds unknown robot `{robot}`")
            }
            ProgramIssue::UnknownMachine { wrapper, machine } => {
                write!(f, "wrapper `{wrapper}` references unknown machine `{machine}`")
            }
            ProgramIssue::MissingPoint { wrapper, machine, point } => {
                write!(f, "wrapper `{wrapper}` references point `{point}` absent from `{machine}`")
            }
            ProgramIssue::MissingDevice { wrapper, robot, device } => {
                write!(f, "wrapper `{wrapper}` uses device `{device}` absent from robot `{robot}`")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ProgramReport {
    pub issues: Vec<ProgramIssue>,
}

impl ProgramReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Static checks: vocabulary, bindings, and scene references of every wrapper.
pub fn check_program(program: &Program, scene: &Scene) -> ProgramReport {
    let mut issues = Vec::new();
    for call in &program.calls {
        if !program.wrappers.contains_key(&call.wrapper) {
            issues.push(ProgramIssue::MissingWrapper {
                operation: call.operation.clone(),
                wrapper: call.wrapper.clone(),
            });
        }
    }
    for (name, body) in &program.executions {
        for (index, call) in body.iter().enumerate() {
            if call.skill.parse::<Skill>().is_err() {
                issues.push(ProgramIssue::UnknownSkill { execution: name.clone(), index, skill: call.skill.clone() });
            }
        }
    }

    for (wname, wrapper) in &program.wrappers {
        let Some(body) = program.executions.get(&wrapper.execution) else {
            issues
                .push(ProgramIssue::MissingExecution { wrapper: wname.clone(), execution: wrapper.execution.clone() });
            continue;
        };
        let mut unbound = BTreeSet::new();
        for call in body {
            for arg in &call.args {
                match classify_arg(arg) {
                    Ok(Some(p)) if !wrapper.bindings.contains_key(&p.key()) => {
                        unbound.insert(arg.clone());
                    }
                    Err(raw) => {
                        unbound.insert(raw);
                    }
                    _ => {}
                }
            }
        }
        for placeholder in unbound {
            issues.push(ProgramIssue::UnboundPlaceholder { wrapper: wname.clone(), placeholder });
        }

        let mut found = Vec::new();
        for call in body {
            let Ok(bound) = bind(call, &wrapper.bindings) else {
                continue;
            };
            let robot_id = bound.slot(Slot::Robot).unwrap_or_default().to_string();
            let robot = scene.robot(&robot_id);
            if robot.is_none() {
                found.push(ProgramIssue::UnknownRobot { wrapper: wname.clone(), robot: robot_id.clone() });
            }
            if let Some(machine_id) = bound.slot(Slot::Machine) {
                match scene.machine(machine_id) {
                    None => found
                        .push(ProgramIssue::UnknownMachine { wrapper: wname.clone(), machine: machine_id.to_string() }),
                    Some(machine) => {
                        if let Some(point) = bound.slot(Slot::Point).filter(|p| !machine.points.contains(*p)) {
                            found.push(ProgramIssue::MissingPoint {
                                wrapper: wname.clone(),
                                machine: machine_id.to_string(),
                                point: point.to_string(),
                            });
                        }
                    }
                }
            }
            if let (Some(device), Some(robot)) = (bound.slot(Slot::Device), robot) {
                if !robot.devices.contains(device) {
                    found.push(ProgramIssue::MissingDevice {
                        wrapper: wname.clone(),
                        robot: robot_id.clone(),
                        device: device.to_string(),
                    });
                }
            }
        }
        for issue in found {
            if !issues.contains(&issue) {
                issues.push(issue);
            }
        }
    }
    ProgramReport { issues }
}

/// Human-readable script rendering for review; never executed.
pub fn render_script(program: &Program) -> String {
    let mut out = String::new();
    for (name, body) in &program.executions {
        let params: BTreeSet<Placeholder> = body.iter().flat_map(|c| c.placeholders()).collect();
        let params: Vec<String> = params.iter().map(Placeholder::ident).collect();
        let _ = writeln!(out, "def {name}({}):", params.join(", "));
        if body.is_empty() {
            out.push_str("    pass\n");
        }
        for call in body {
            let args: Vec<String> = call
                .args
                .iter()
                .map(|a| match classify_arg(a) {
                    Ok(Some(p)) => p.ident(),
                    _ => format!("{a:?}"),
                })
                .collect();
            let _ = writeln!(out, "    {}({})", call.skill, args.join(", "));
        }
        out.push('\n');
    }
    for (name, wrapper) in &program.wrappers {
        let args: Vec<String> = wrapper
            .bindings
            .iter()
            .map(|(k, v)| {
                let ident = Placeholder::parse(k).map_or_else(|| k.clone(), |p| p.ident());
                format!("{ident}={v:?}")
            })
            .collect();
        let _ = writeln!(out, "def {name}():  # {}", wrapper.op_type);
        let _ = writeln!(out, "    return {}({})\n", wrapper.execution, args.join(", "));
    }
    for call in &program.calls {
        let _ = writeln!(out, "{}()  # {}", call.wrapper, call.operation);
    }
    out
}
