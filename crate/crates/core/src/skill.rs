//! Atomic skill vocabulary and skill-call templates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Skill {
    ConvertToRobot,
    MotionPlan,
    MoveByPath,
    ControlDevice,
    DetectBoundary,
    ComputeTrajectory,
    Attach,
    Detach,
    ReturnHome,
}

/// What each argument position of a skill refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Robot,
    Machine,
    Point,
    Device,
    Action,
    Workpiece,
}

impl Skill {
    pub const ALL: [Skill; 9] = [
        Skill::ConvertToRobot,
        Skill::MotionPlan,
        Skill::MoveByPath,
        Skill::ControlDevice,
        Skill::DetectBoundary,
        Skill::ComputeTrajectory,
        Skill::Attach,
        Skill::Detach,
        Skill::ReturnHome,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Skill::ConvertToRobot => "convert_to_robot",
            Skill::MotionPlan => "motion_plan",
            Skill::MoveByPath => "move_by_path",
            Skill::ControlDevice => "control_device",
            Skill::DetectBoundary => "detect_boundary",
            Skill::ComputeTrajectory => "compute_trajectory",
            Skill::Attach => "attach",
            Skill::Detach => "detach",
            Skill::ReturnHome => "return_home",
        }
    }

    pub fn signature(self) -> &'static [Slot] {
        use Slot::*;
        match self {
            Skill::ConvertToRobot | Skill::MotionPlan | Skill::MoveByPath => &[Robot, Machine, Point],
            Skill::ControlDevice => &[Robot, Device, Action, Machine],
            Skill::DetectBoundary | Skill::ComputeTrajectory | Skill::Attach | Skill::Detach => {
                &[Robot, Workpiece, Machine]
            }
            Skill::ReturnHome => &[Robot],
        }
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Skill {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Skill::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown skill `{s}`"))
    }
}

/// Placeholder names an argument slot may carry, written `{name}` in templates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Placeholder {
    Robot,
    Machine1,
    Machine2,
    Workpiece,
    Point(String),
    Device(String),
}

impl Placeholder {
    /// Parses the text between braces.
    pub fn parse(inner: &str) -> Option<Placeholder> {
        match inner {
            "robot" => Some(Placeholder::Robot),
            "machine_1" => Some(Placeholder::Machine1),
            "machine_2" => Some(Placeholder::Machine2),
            "workpiece" => Some(Placeholder::Workpiece),
            _ => {
                if let Some(name) = inner.strip_prefix("point:").filter(|n| !n.is_empty()) {
                    Some(Placeholder::Point(name.to_string()))
                } else {
                    inner.strip_prefix("device:").filter(|n| !n.is_empty()).map(|n| Placeholder::Device(n.to_string()))
                }
            }
        }
    }

    /// Binding key, the text between braces.
    pub fn key(&self) -> String {
        match self {
            Placeholder::Robot => "robot".into(),
            Placeholder::Machine1 => "machine_1".into(),
            Placeholder::Machine2 => "machine_2".into(),
            Placeholder::Workpiece => "workpiece".into(),
            Placeholder::Point(n) => format!("point:{n}"),
            Placeholder::Device(n) => format!("device:{n}"),
        }
    }

    /// Parameter name used in the script rendering.
    pub fn ident(&self) -> String {
        match self {
            Placeholder::Point(n) => format!("point_{n}"),
            Placeholder::Device(n) => format!("device_{n}"),
            other => other.key(),
        }
    }
}

/// One argument: a literal or a `{placeholder}`. Braced text that is not a
/// known placeholder is reported as `Err` with the raw text.
pub fn classify_arg(arg: &str) -> Result<Option<Placeholder>, String> {
    match arg.strip_prefix('{').and_then(|a| a.strip_suffix('}')) {
        None if arg.contains('{') || arg.contains('}') => Err(arg.to_string()),
        None => Ok(None),
        Some(inner) => Placeholder::parse(inner).map(Some).ok_or_else(|| arg.to_string()),
    }
}

/// A skill invocation template. Names are plain strings, and unknown skills
/// are reported by the checker rather than rejected at parse time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillCall {
    pub skill: String,
    pub args: Vec<String>,
}

impl SkillCall {
    pub fn new(skill: Skill, args: &[&str]) -> Self {
        SkillCall { skill: skill.name().to_string(), args: args.iter().map(|a| a.to_string()).collect() }
    }

    pub fn placeholders(&self) -> impl Iterator<Item = Placeholder> + '_ {
        self.args.iter().filter_map(|a| classify_arg(a).ok().flatten())
    }
}

impl fmt::Display for SkillCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.skill, self.args.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    MissingCall,
    WrongLocation,
    MissingDevice,
    MissingPoint,
    UnknownSkill,
    UnboundPlaceholder,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FailureReason::MissingCall => "missing_call",
            FailureReason::WrongLocation => "wrong_location",
            FailureReason::MissingDevice => "missing_device",
            FailureReason::MissingPoint => "missing_point",
            FailureReason::UnknownSkill => "unknown_skill",
            FailureReason::UnboundPlaceholder => "unbound_placeholder",
        };
        f.write_str(s)
    }
}

/// A skill call with every placeholder replaced by its bound value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCall {
    pub skill: Skill,
    pub args: Vec<String>,
}

impl BoundCall {
    pub fn slot(&self, slot: Slot) -> Option<&str> {
        self.skill.signature().iter().position(|s| *s == slot).map(|i| self.args[i].as_str())
    }

    pub fn to_call(&self) -> SkillCall {
        SkillCall { skill: self.skill.name().to_string(), args: self.args.clone() }
    }
}

/// Resolves a template against wrapper bindings.
///
/// Missing argument positions count as unbound placeholders.
pub fn bind(call: &SkillCall, bindings: &BTreeMap<String, String>) -> Result<BoundCall, FailureReason> {
    let skill: Skill = call.skill.parse().map_err(|_| FailureReason::UnknownSkill)?;
    let arity = skill.signature().len();
    if call.args.len() < arity {
        return Err(FailureReason::UnboundPlaceholder);
    }
    let mut args = Vec::with_capacity(arity);
    for raw in &call.args[..arity] {
        match classify_arg(raw) {
            Err(_) => return Err(FailureReason::UnboundPlaceholder),
            Ok(None) => args.push(raw.clone()),
            Ok(Some(p)) => match bindings.get(&p.key()) {
                Some(v) => args.push(v.clone()),
                None => return Err(FailureReason::UnboundPlaceholder),
            },
        }
    }
    Ok(BoundCall { skill, args })
}
