//! Structured planner response: three fenced blocks labelled OPERATIONS,
//! ALLOCATION and PRECEDENCE, one pipe-separated record per line.

use std::fmt::Write as _;

use crate::model::{Allocation, Operation, OperationType, PrecedenceSet, Scene};
use crate::validate::validate_planner_output;

use super::PlannerOutput;

const SECTIONS: [&str; 3] = ["operations", "allocation", "precedence"];

/// Body lines of every fenced block whose info string is a known section,
/// keyed by lowercase section name. Prose around the fences is ignored.
fn fenced_sections(text: &str) -> Vec<(String, Vec<(usize, &str)>)> {
    let mut out = Vec::new();
    let mut current: Option<(String, Vec<(usize, &str)>)> = None;
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(info) = trimmed.strip_prefix("```") {
            match current.take() {
                Some(block) => out.push(block),
                None => current = Some((info.trim().to_ascii_lowercase(), Vec::new())),
            }
            continue;
        }
        if let Some((_, lines)) = current.as_mut() {
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                lines.push((n + 1, trimmed));
            }
        }
    }
    out.into_iter().filter(|(label, _)| SECTIONS.contains(&label.as_str())).collect()
}

fn fields(line: &str) -> Vec<&str> {
    line.split('|').map(str::trim).collect()
}

/// Parses a response into a planner output. Problems end up in
/// `issues`; nothing here panics or returns early on bad input.
pub fn parse_planner_text(text: &str, scene: &Scene) -> PlannerOutput {
    let mut out = PlannerOutput { raw: Some(text.to_string()), ..PlannerOutput::default() };
    let sections = fenced_sections(text);
    let section = |name: &str| sections.iter().find(|(l, _)| l == name).map(|(_, lines)| lines);

    for name in SECTIONS {
        if section(name).is_none() {
            out.issues.push(format!("missing section: {name}"));
        }
    }

    for &(n, line) in section("operations").into_iter().flatten() {
        let f = fields(line);
        if !(4..=5).contains(&f.len()) {
            out.issues.push(format!("line {n}: expected `op_id | type | workpiece | machine_1 | machine_2`"));
            continue;
        }
        let op_type = match f[1].to_ascii_lowercase().parse::<OperationType>() {
            Ok(t) => t,
            Err(e) => {
                out.issues.push(format!("line {n}: {e}"));
                continue;
            }
        };
        let machine_2 = f.get(4).filter(|m| !m.is_empty()).copied();
        out.ops.push(Operation::new(f[0], op_type, f[2], f[3], machine_2));
    }

    for &(n, line) in section("allocation").into_iter().flatten() {
        match fields(line)[..] {
            [op, robot] if !op.is_empty() && !robot.is_empty() => {
                if out.alloc.pairs.insert(op.to_string(), robot.to_string()).is_some() {
                    out.issues.push(format!("line {n}: operation `{op}` allocated twice"));
                }
            }
            _ => out.issues.push(format!("line {n}: expected `op_id | robot_id`")),
        }
    }

    for &(n, line) in section("precedence").into_iter().flatten() {
        match fields(line)[..] {
            [workpiece, list] if !workpiece.is_empty() => {
                let ids = list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string);
                out.prec.per_workpiece.entry(workpiece.to_string()).or_default().extend(ids);
            }
            _ => out.issues.push(format!("line {n}: expected `workpiece | op_id, op_id, ...`")),
        }
    }

    if out.issues.is_empty() {
        let report = validate_planner_output(scene, &out.ops, &out.alloc, &out.prec);
        out.issues.extend(report.violations.iter().map(|v| v.to_string()));
    }
    out
}

/// Inverse of [`parse_planner_text`] on (ops, alloc, prec).
pub fn render_planner_text(ops: &[Operation], alloc: &Allocation, prec: &PrecedenceSet) -> String {
    let mut s = String::from("```OPERATIONS\n");
    for op in ops {
        let m2 = op.machine_2.as_deref().unwrap_or("");
        let _ = writeln!(s, "{} | {} | {} | {} | {}", op.id, op.op_type, op.workpiece, op.machine_1, m2);
    }
    s.push_str("```\n\n```ALLOCATION\n");
    for (op, robot) in &alloc.pairs {
        let _ = writeln!(s, "{op} | {robot}");
    }
    s.push_str("```\n\n```PRECEDENCE\n");
    for (w, list) in &prec.per_workpiece {
        let _ = writeln!(s, "{w} | {}", list.join(", "));
    }
    s.push_str("```\n");
    s
}
