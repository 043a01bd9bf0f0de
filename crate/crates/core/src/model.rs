//! Scene, operation, allocation and precedence types shared by every stage
//! of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type RobotId = String;
pub type MachineId = String;
pub type WorkpieceId = String;
pub type OpId = String;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Robot {
    pub id: RobotId,
    pub devices: BTreeSet<String>,
    pub reachable_machines: BTreeSet<MachineId>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Machine {
    pub id: MachineId,
    pub name: String,
    pub held_workpieces: Vec<WorkpieceId>,
    /// Concurrent access forbidden. Absent in a file means `true`.
    #[serde(default = "default_true")]
    pub exclusive: bool,
    #[serde(default)]
    pub points: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workpiece {
    pub id: WorkpieceId,
    pub kind: String,
    pub state_sequence: Vec<StateLabel>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub robots: Vec<Robot>,
    pub machines: Vec<Machine>,
    pub workpieces: Vec<Workpiece>,
}

impl Scene {
    pub fn robot(&self, id: &str) -> Option<&Robot> {
        self.robots.iter().find(|r| r.id == id)
    }

    pub fn machine(&self, id: &str) -> Option<&Machine> {
        self.machines.iter().find(|m| m.id == id)
    }

    pub fn workpiece(&self, id: &str) -> Option<&Workpiece> {
        self.workpieces.iter().find(|w| w.id == id)
    }

    /// Machine initially holding `workpiece`, if any.
    pub fn initial_location(&self, workpiece: &str) -> Option<&MachineId> {
        self.machines.iter().find(|m| m.held_workpieces.iter().any(|w| w == workpiece)).map(|m| &m.id)
    }

    /// Whether `machine` forbids concurrent use. Unknown machines count as exclusive.
    pub fn is_exclusive(&self, machine: &str) -> bool {
        self.machine(machine).is_none_or(|m| m.exclusive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperationType {
    Transport,
    Polishing,
    Welding,
    Beveling,
    Assembly,
}

impl OperationType {
    pub const ALL: [OperationType; 5] = [
        OperationType::Transport,
        OperationType::Polishing,
        OperationType::Welding,
        OperationType::Beveling,
        OperationType::Assembly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperationType::Transport => "transport",
            OperationType::Polishing => "polishing",
            OperationType::Welding => "welding",
            OperationType::Beveling => "beveling",
            OperationType::Assembly => "assembly",
        }
    }

    /// Processing flag the operation adds to its workpiece. Transport adds none.
    pub fn flag(self) -> Option<StateLabel> {
        match self {
            OperationType::Transport => None,
            OperationType::Polishing => Some(StateLabel::Polished),
            OperationType::Welding => Some(StateLabel::Welded),
            OperationType::Beveling => Some(StateLabel::Beveled),
            OperationType::Assembly => Some(StateLabel::Assembled),
        }
    }
}

impl fmt::Display for OperationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperationType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown operation type `{s}`"))
    }
}

/// Processing-state vocabulary: four processing flags plus a location fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateLabel {
    Polished,
    Welded,
    Beveled,
    Assembled,
    At(MachineId),
}

impl StateLabel {
    pub fn is_flag(&self) -> bool {
        !matches!(self, StateLabel::At(_))
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Polished => f.write_str("polished"),
            StateLabel::Welded => f.write_str("welded"),
            StateLabel::Beveled => f.write_str("beveled"),
            StateLabel::Assembled => f.write_str("assembled"),
            StateLabel::At(m) => write!(f, "at({m})"),
        }
    }
}

impl FromStr for StateLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "polished" => Ok(StateLabel::Polished),
            "welded" => Ok(StateLabel::Welded),
            "beveled" => Ok(StateLabel::Beveled),
            "assembled" => Ok(StateLabel::Assembled),
            _ => s
                .strip_prefix("at(")
                .and_then(|rest| rest.strip_suffix(')'))
                .filter(|m| !m.is_empty())
                .map(|m| StateLabel::At(m.to_string()))
                .ok_or_else(|| format!("unknown state label `{s}`")),
        }
    }
}

impl Serialize for StateLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operation {
    pub id: OpId,
    pub op_type: OperationType,
    pub workpiece: WorkpieceId,
    pub machine_1: MachineId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub machine_2: Option<MachineId>,
}

impl Operation {
    pub fn new(
        id: impl Into<String>,
        op_type: OperationType,
        workpiece: impl Into<String>,
        machine_1: impl Into<String>,
        machine_2: Option<&str>,
    ) -> Self {
        Operation {
            id: id.into(),
            op_type,
            workpiece: workpiece.into(),
            machine_1: machine_1.into(),
            machine_2: machine_2.map(str::to_string),
        }
    }

    pub fn transport(id: &str, workpiece: &str, from: &str, to: &str) -> Self {
        Operation::new(id, OperationType::Transport, workpiece, from, Some(to))
    }

    pub fn process(id: &str, op_type: OperationType, workpiece: &str, machine: &str) -> Self {
        Operation::new(id, op_type, workpiece, machine, None)
    }

    /// Machines the operation occupies for its whole duration.
    pub fn machines(&self) -> impl Iterator<Item = &MachineId> {
        std::iter::once(&self.machine_1).chain(self.machine_2.as_ref())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Allocation {
    pub pairs: BTreeMap<OpId, RobotId>,
}

impl Allocation {
    pub fn robot_of(&self, op: &str) -> Option<&RobotId> {
        self.pairs.get(op)
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Allocation {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Allocation { pairs: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecedenceSet {
    pub per_workpiece: BTreeMap<WorkpieceId, Vec<OpId>>,
}

impl PrecedenceSet {
    /// Chains each workpiece's operations in the order they appear in `ops`.
    pub fn from_operation_order(ops: &[Operation]) -> Self {
        let mut per_workpiece: BTreeMap<WorkpieceId, Vec<OpId>> = BTreeMap::new();
        for op in ops {
            per_workpiece.entry(op.workpiece.clone()).or_default().push(op.id.clone());
        }
        PrecedenceSet { per_workpiece }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_label_text_form() {
        for s in ["polished", "welded", "beveled", "assembled", "at(pallet_1)"] {
            let label: StateLabel = s.parse().unwrap();
            assert_eq!(label.to_string(), s);
        }
        assert!("at()".parse::<StateLabel>().is_err());
        assert!("painted".parse::<StateLabel>().is_err());
    }

    #[test]
    fn transport_occupies_both_machines() {
        let op = Operation::transport("o1", "w1", "conveyor", "pallet");
        let used: Vec<_> = op.machines().cloned().collect();
        assert_eq!(used, vec!["conveyor".to_string(), "pallet".to_string()]);
        let op = Operation::process("o2", OperationType::Welding, "w1", "table");
        assert_eq!(op.machines().count(), 1);
    }

    #[test]
    fn machine_defaults_to_exclusive() {
        let m: Machine = serde_json::from_str(r#"{"id":"m","name":"table","held_workpieces":[]}"#).unwrap();
        assert!(m.exclusive);
        assert!(m.points.is_empty());
    }

    #[test]
    fn unknown_operation_field_is_rejected() {
        let err = serde_json::from_str::<Operation>(
            r#"{"id":"o","op_type":"welding","workpiece":"w","machine_1":"m","speed":3}"#,
        );
        assert!(err.is_err());
    }
}
