//! Command-line front end. Exit status: 0 success, 1 usage error,
//! 2 task-file (or other input file) error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{generate_suite, render_gantt, run_benchmark, run_task, BenchError, GenerateError};
use crate::exec::{status_delta, SymbolicState};
use crate::pipeline::run_pipeline;
use crate::planner::{GroundTruthPlanner, LlmConfig, LlmPlanner, Planner, PlannerError, WrongRobotPlanner};
use crate::program::{assemble_program, render_script};
use crate::schedule::{brute_force_optimal, solve_fifo, ScheduleOrigin};
use crate::task::{load_task_instance, TaskError, TaskInstance, Tier};
use crate::tree::{load_tree, reference_tree, ProcessTree, TreeError};

#[derive(Parser, Debug)]
#[command(name = "shopfloor", version, about = "Multi-robot task planning, scheduling and program generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlannerKind {
    Gt,
    Llm,
    /// Ground truth with one operation reassigned to another robot.
    WrongRobot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TierArg {
    SingleRobot,
    SimpleMulti,
    ComplexMulti,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GanttFormat {
    Svg,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProgramFormat {
    Json,
    Script,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate task files with embedded ground truth.
    Generate {
        #[arg(long, value_enum)]
        tier: TierArg,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a planner on one task and print its output.
    Plan {
        #[arg(long)]
        task: PathBuf,
        #[arg(long, value_enum, default_value = "gt")]
        planner: PlannerKind,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// FIFO-schedule a task's plan and print the schedule.
    Solve {
        #[arg(long)]
        task: PathBuf,
        #[arg(long, value_enum, default_value = "gt")]
        planner: PlannerKind,
        /// Use the exhaustive oracle instead of FIFO.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Assemble the program for a task's plan from a process tree.
    Assemble {
        #[arg(long)]
        task: PathBuf,
        /// Process-tree file; the bundled reference tree when absent.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "gt")]
        planner: PlannerKind,
        #[arg(long, value_enum, default_value = "json")]
        format: ProgramFormat,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Execute a task's plan symbolically and print the trace.
    Execute {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "gt")]
        planner: PlannerKind,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Score a planner on one task or a suite directory.
    Evaluate {
        #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
        task: Option<PathBuf>,
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "gt")]
        planner: PlannerKind,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render a task's ground-truth schedule as a chart.
    Gantt {
        #[arg(long)]
        task: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: GanttFormat,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Full pipeline over a suite, writing reports and per-task artifacts.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "gt")]
        planner: PlannerKind,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Task { path: PathBuf, source: TaskError },
    #[error("{path}: {source}")]
    Tree { path: PathBuf, source: TreeError },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Task { .. } | CliError::Tree { .. } | CliError::Input(_) => 2,
            _ => 1,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::EmptySuite => CliError::Usage("empty task list".into()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GenerateError> for CliError {
    fn from(e: GenerateError) -> Self {
        CliError::Other(e.to_string())
    }
}

fn load_task(path: &Path) -> Result<TaskInstance, CliError> {
    load_task_instance(path).map_err(|source| CliError::Task { path: path.to_path_buf(), source })
}

fn tree_from(path: &Option<PathBuf>) -> Result<ProcessTree, CliError> {
    match path {
        None => Ok(reference_tree()),
        Some(p) => load_tree(p).map_err(|source| CliError::Tree { path: p.clone(), source }),
    }
}

fn planner_for(kind: PlannerKind) -> Result<Box<dyn Planner>, CliError> {
    Ok(match kind {
        PlannerKind::Gt => Box::new(GroundTruthPlanner),
        PlannerKind::WrongRobot => Box::new(WrongRobotPlanner { inner: GroundTruthPlanner }),
        PlannerKind::Llm => Box::new(LlmPlanner::new(LlmConfig::from_env())?),
    })
}

/// Task files in `dir`: `*.json` whose stem contains no dot, in name order.
pub fn load_suite(dir: &Path) -> Result<Vec<TaskInstance>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.file_stem().and_then(|s| s.to_str()).is_some_and(|s| !s.contains('.') && s != "suite"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_task(p)).collect()
}

/// Writes to `<out_dir>/<name>` when an output directory is given, else stdout.
fn emit(out_dir: &Option<PathBuf>, name: &str, content: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => out.write_all(content.as_bytes())?,
    }
    Ok(())
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn planned(task: &TaskInstance, kind: PlannerKind) -> Result<crate::planner::PlannerOutput, CliError> {
    Ok(planner_for(kind)?.plan(task)?)
}

pub fn run_command(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { tier, count, seed, out_dir } => {
            if count == 0 {
                return Err(CliError::Usage("--count must be positive".into()));
            }
            let tiers: Vec<Tier> = match tier {
                TierArg::SingleRobot => vec![Tier::SingleRobot],
                TierArg::SimpleMulti => vec![Tier::SimpleMulti],
                TierArg::ComplexMulti => vec![Tier::ComplexMulti],
                TierArg::All => Tier::ALL.to_vec(),
            };
            std::fs::create_dir_all(&out_dir)?;
            for t in tiers {
                for task in generate_suite(t, count, seed)? {
                    std::fs::write(out_dir.join(format!("{}.json", task.id())), task.to_json())?;
                }
            }
            writeln!(out, "wrote tasks to {}", out_dir.display())?;
        }
        Command::Plan { task, planner, out_dir } => {
            let task = load_task(&task)?;
            let output = planned(&task, planner)?;
            emit(&out_dir, &format!("{}.plan.json", task.id()), &output.to_json(), out)?;
        }
        Command::Solve { task, planner, oracle, out_dir } => {
            let task = load_task(&task)?;
            let output = planned(&task, planner)?;
            if !output.is_valid() {
                return Err(CliError::Other(format!("planner output invalid: {}", output.issues.join("; "))));
            }
            let graph = crate::graph::build_graph(&task.scene, &output.ops, &output.alloc, &output.prec)
                .map_err(|e| CliError::Other(e.to_string()))?;
            let (schedule, origin) = if oracle {
                (brute_force_optimal(&graph), ScheduleOrigin::Oracle)
            } else {
                let order: Vec<String> = output.ops.iter().map(|o| o.id.clone()).collect();
                (solve_fifo(&graph, &order), ScheduleOrigin::Fifo)
            };
            let mut doc = schedule.map_err(|e| CliError::Other(e.to_string()))?.to_doc();
            doc.origin = Some(origin);
            emit(&out_dir, &format!("{}.schedule.json", task.id()), &pretty(&doc), out)?;
        }
        Command::Assemble { task, tree, planner, format, out_dir } => {
            let task = load_task(&task)?;
            let tree = tree_from(&tree)?;
            let output = planned(&task, planner)?;
            let program = assemble_program(&tree, &output.ops, &output.alloc, &task.scene)
                .map_err(|e| CliError::Other(e.to_string()))?;
            match format {
                ProgramFormat::Json => emit(&out_dir, &format!("{}.program.json", task.id()), &program.to_json(), out)?,
                ProgramFormat::Script => {
                    emit(&out_dir, &format!("{}.program.py", task.id()), &render_script(&program), out)?
                }
            }
        }
        Command::Execute { task, tree, planner, out_dir } => {
            let task = load_task(&task)?;
            let tree = tree_from(&tree)?;
            let run =
                run_pipeline(&task, planned(&task, planner)?, &tree).map_err(|e| CliError::Other(e.to_string()))?;
            let Some(execution) = &run.execution else {
                return Err(CliError::Other("no feasible schedule to execute".into()));
            };
            emit(&out_dir, &format!("{}.trace.jsonl", task.id()), &execution.trace.to_jsonl(), out)?;
            let delta = status_delta(&execution.final_state, &SymbolicState::initial(&task.scene));
            let summary = serde_json::json!({
                "executed_fully": execution.executed_fully,
                "final_state": execution.final_state,
                "status": delta.iter().map(|(w, l)| [w.clone(), l.to_string()]).collect::<Vec<_>>(),
            });
            emit(&out_dir, &format!("{}.state.json", task.id()), &pretty(&summary), out)?;
        }
        Command::Evaluate { task, suite, tree, planner, out_dir } => {
            let tree = tree_from(&tree)?;
            let planner = planner_for(planner)?;
            if let Some(path) = task {
                let task = load_task(&path)?;
                let result = run_task(&task, planner.as_ref(), &tree);
                emit(&out_dir, &format!("{}.metrics.json", task.id()), &pretty(&result.metrics), out)?;
            } else {
                let dir = suite.expect("clap enforces --task or --suite");
                let tasks = load_suite(&dir)?;
                let report = run_benchmark(&tasks, planner.as_ref(), &tree)?;
                match &out_dir {
                    Some(d) => {
                        report.write(d)?;
                        writeln!(out, "wrote reports to {}", d.display())?;
                    }
                    None => out.write_all(report.to_csv()?.as_bytes())?,
                }
            }
        }
        Command::Gantt { task, format, out_dir } => {
            let task = load_task(&task)?;
            let gt =
                task.ground_truth.as_ref().ok_or_else(|| CliError::Input(format!("{}: no ground truth", task.id())))?;
            let graph = gt.graph(&task.scene).map_err(|e| CliError::Input(e.to_string()))?;
            let schedule = gt
                .schedule_graph(&graph)
                .ok_or_else(|| CliError::Input(format!("{}: no ground-truth schedule", task.id())))?
                .map_err(|e| CliError::Input(e.to_string()))?;
            let chart = render_gantt(&schedule, &gt.operations, &gt.allocation);
            match format {
                GanttFormat::Svg => emit(&out_dir, &format!("{}.gantt.svg", task.id()), &chart.to_svg(), out)?,
                GanttFormat::Text => emit(&out_dir, &format!("{}.gantt.txt", task.id()), &chart.to_text(), out)?,
            }
        }
        Command::Run { suite, tree, planner, out_dir } => {
            let tree = tree_from(&tree)?;
            let planner = planner_for(planner)?;
            let tasks = load_suite(&suite)?;
            let report = run_benchmark(&tasks, planner.as_ref(), &tree)?;
            report.write(&out_dir)?;
            for task in &tasks {
                let Ok(output) = planner.plan(task) else { continue };
                let Ok(run) = run_pipeline(task, output, &tree) else { continue };
                let id = task.id();
                std::fs::write(out_dir.join(format!("{id}.program.json")), run.program.to_json())?;
                if let Some(schedule) = &run.schedule {
                    let chart = render_gantt(schedule, &run.output.ops, &run.output.alloc);
                    std::fs::write(out_dir.join(format!("{id}.gantt.svg")), chart.to_svg())?;
                }
                if let Some(execution) = &run.execution {
                    std::fs::write(out_dir.join(format!("{id}.trace.jsonl")), execution.trace.to_jsonl())?;
                }
            }
            let o = &report.overall;
            writeln!(
                out,
                "{} tasks: oc {:.3} se {:.3} exe {:.3} gcr {:.3} sr {:.3}; reports in {}",
                o.count,
                o.oc,
                o.se,
                o.exe,
                o.gcr,
                o.sr,
                out_dir.display()
            )?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run_command(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
