//! Planner output to metrics: graph, FIFO schedule, program, execution.

use crate::exec::{execute, Execution};
use crate::graph::{build_graph, DisjunctiveGraph};
use crate::metrics::{evaluate_instance, MetricsError, MetricsReport};
use crate::model::OpId;
use crate::planner::PlannerOutput;
use crate::program::{assemble_program_partial, Program};
use crate::schedule::{is_feasible, solve_fifo, ScheduleGraph};
use crate::task::TaskInstance;
use crate::tree::ProcessTree;

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub output: PlannerOutput,
    pub graph: Option<DisjunctiveGraph>,
    /// Present only when FIFO produced a feasible schedule.
    pub schedule: Option<ScheduleGraph>,
    pub program: Program,
    pub assembly_errors: Vec<String>,
    pub execution: Option<Execution>,
    pub report: MetricsReport,
}

/// Runs every stage that the planner output allows and scores the result.
/// Invalid output degrades the metrics; only a broken ground truth is an error.
pub fn run_pipeline(
    task: &TaskInstance,
    output: PlannerOutput,
    tree: &ProcessTree,
) -> Result<PipelineRun, MetricsError> {
    let mut graph = None;
    let mut schedule = None;
    let mut program = Program::default();
    let mut assembly_errors = Vec::new();
    let mut execution = None;

    if output.is_valid() {
        match build_graph(&task.scene, &output.ops, &output.alloc, &output.prec) {
            Ok(g) => {
                let order: Vec<OpId> = output.ops.iter().map(|o| o.id.clone()).collect();
                schedule = solve_fifo(&g, &order).ok().filter(|s| is_feasible(s, &g));
                let (p, errors) = assemble_program_partial(tree, &output.ops, &output.alloc, &task.scene);
                program = p;
                assembly_errors = errors.iter().map(|e| e.to_string()).collect();
                execution = schedule.as_ref().map(|s| execute(s, &program, &task.scene));
                graph = Some(g);
            }
            Err(e) => log::warn!("{}: graph construction failed: {e}", task.id()),
        }
    }

    let mut report = evaluate_instance(task, &output.ops, &output.alloc, schedule.as_ref(), execution.as_ref())?;
    if !output.is_valid() {
        report.notes.push(format!("invalid planner output: {}", output.issues.join("; ")));
    }
    report.notes.extend(assembly_errors.iter().map(|e| format!("assembly: {e}")));
    Ok(PipelineRun { output, graph, schedule, program, assembly_errors, execution, report })
}
