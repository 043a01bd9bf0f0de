use std::collections::BTreeSet;
use std::fmt::Write as _;

use svg::node::element::{Group, Rectangle, Text, Title};
use svg::Document;

use crate::model::{Allocation, Operation, OperationType};
use crate::schedule::ScheduleGraph;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GanttCell {
    pub robot: String,
    pub step: u32,
    pub op: String,
    pub op_type: OperationType,
}

/// Robots as rows, unit steps as columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gantt {
    pub robots: Vec<String>,
    pub steps: u32,
    pub cells: BTreeSet<GanttCell>,
}

pub fn render_gantt(schedule: &ScheduleGraph, ops: &[Operation], alloc: &Allocation) -> Gantt {
    let mut cells = BTreeSet::new();
    for op in ops {
        let (Some(&step), Some(robot)) = (schedule.start_step.get(&op.id), alloc.robot_of(&op.id)) else {
            continue;
        };
        cells.insert(GanttCell { robot: robot.clone(), step, op: op.id.clone(), op_type: op.op_type });
    }
    let robots: BTreeSet<String> = cells.iter().map(|c| c.robot.clone()).collect();
    Gantt { robots: robots.into_iter().collect(), steps: schedule.makespan, cells }
}

const CELL_W: usize = 120;
const ROW_H: usize = 36;
const LABEL_W: usize = 80;
const HEADER_H: usize = 24;

fn colour(t: OperationType) -> &'static str {
    match t {
        OperationType::Transport => "#9ecae1",
        OperationType::Polishing => "#fdae6b",
        OperationType::Welding => "#fc9272",
        OperationType::Beveling => "#a1d99b",
        OperationType::Assembly => "#bcbddc",
    }
}

impl Gantt {
    pub fn label(cell: &GanttCell) -> String {
        format!("{} {}", cell.op, cell.op_type)
    }

    pub fn to_text(&self) -> String {
        let mut grid = vec![vec![String::new(); self.steps as usize]; self.robots.len()];
        for c in &self.cells {
            let row = self.robots.iter().position(|r| *r == c.robot).expect("robot row exists");
            grid[row][c.step as usize] = Self::label(c);
        }
        let label_w = self.robots.iter().map(String::len).max().unwrap_or(0).max("robot".len());
        let mut col_w = vec![0usize; self.steps as usize];
        for (s, w) in col_w.iter_mut().enumerate() {
            *w = grid.iter().map(|row| row[s].len()).max().unwrap_or(0).max(s.to_string().len()).max(1);
        }
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "robot");
        for (s, w) in col_w.iter().enumerate() {
            let _ = write!(out, " | {s:<w$}");
        }
        out.push('\n');
        for (robot, row) in self.robots.iter().zip(&grid) {
            let _ = write!(out, "{robot:<label_w$}");
            for (cell, w) in row.iter().zip(&col_w) {
                let text = if cell.is_empty() { "." } else { cell };
                let _ = write!(out, " | {text:<w$}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let width = LABEL_W + CELL_W * self.steps as usize;
        let height = HEADER_H + ROW_H * self.robots.len();
        let mut doc = Document::new()
            .set("viewBox", (0, 0, width, height))
            .set("width", width)
            .set("height", height)
            .set("font-family", "monospace")
            .set("font-size", 11);
        for s in 0..self.steps as usize {
            doc = doc.add(
                Text::new(s.to_string())
                    .set("x", LABEL_W + s * CELL_W + CELL_W / 2)
                    .set("y", HEADER_H - 8)
                    .set("text-anchor", "middle"),
            );
        }
        for (row, robot) in self.robots.iter().enumerate() {
            doc = doc.add(Text::new(robot.clone()).set("x", 4).set("y", HEADER_H + row * ROW_H + ROW_H / 2 + 4));
        }
        for c in &self.cells {
            let row = self.robots.iter().position(|r| *r == c.robot).expect("robot row exists");
            let x = LABEL_W + c.step as usize * CELL_W;
            let y = HEADER_H + row * ROW_H;
            let group = Group::new()
                .set("class", "cell")
                .set("data-robot", c.robot.clone())
                .set("data-step", c.step)
                .set("data-op", c.op.clone())
                .set("data-type", c.op_type.as_str())
                .add(Title::new(Self::label(c)))
                .add(
                    Rectangle::new()
                        .set("x", x + 2)
                        .set("y", y + 2)
                        .set("width", CELL_W - 4)
                        .set("height", ROW_H - 4)
                        .set("fill", colour(c.op_type))
                        .set("stroke", "#333"),
                )
                .add(
                    Text::new(Self::label(c))
                        .set("x", x + CELL_W / 2)
                        .set("y", y + ROW_H / 2 + 4)
                        .set("text-anchor", "middle"),
                );
            doc = doc.add(group);
        }
        let mut s = doc.to_string();
        s.push('\n');
        s
    }

    /// (robot, step, label) triples read back from a text rendering.
    pub fn cells_from_text(text: &str) -> BTreeSet<(String, u32, String)> {
        let mut out = BTreeSet::new();
        for line in text.lines().skip(1) {
            let mut parts = line.split(" | ");
            let Some(robot) = parts.next() else { continue };
            for (s, cell) in parts.enumerate() {
                let cell = cell.trim();
                if cell != "." {
                    out.insert((robot.trim().to_string(), s as u32, cell.to_string()));
                }
            }
        }
        out
    }

    /// (robot, step, label) triples read back from the SVG data attributes.
    pub fn cells_from_svg(svg_text: &str) -> BTreeSet<(String, u32, String)> {
        let mut out = BTreeSet::new();
        let attr = |tag: &str, name: &str| -> Option<String> {
            let key = format!("{name}=\"");
            let start = tag.find(&key)? + key.len();
            Some(tag[start..].split('"').next()?.to_string())
        };
        for tag in svg_text.split('<').filter(|t| t.starts_with("g ")) {
            let (Some(robot), Some(step), Some(op), Some(t)) =
                (attr(tag, "data-robot"), attr(tag, "data-step"), attr(tag, "data-op"), attr(tag, "data-type"))
            else {
                continue;
            };
            if let Ok(step) = step.parse() {
                out.insert((robot, step, format!("{op} {t}")));
            }
        }
        out
    }

    pub fn cell_triples(&self) -> BTreeSet<(String, u32, String)> {
        self.cells.iter().map(|c| (c.robot.clone(), c.step, Self::label(c))).collect()
    }
}
