//! Node conditions as small s-expressions:
//!
//! ```text
//! true | false
//! (and e...) | (or e...) | (not e)
//! (= ATTR VALUE)               ATTR: op_type workpiece.kind machine_1.name machine_2.name machine_1.id machine_2.id
//! (has-device robot NAME)      the allocated robot carries device NAME
//! (has-point SLOT NAME)        SLOT: machine_1 | machine_2
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{Operation, Robot, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attr {
    OpType,
    WorkpieceKind,
    Machine1Name,
    Machine2Name,
    Machine1Id,
    Machine2Id,
}

impl Attr {
    const ALL: [(Attr, &'static str); 6] = [
        (Attr::OpType, "op_type"),
        (Attr::WorkpieceKind, "workpiece.kind"),
        (Attr::Machine1Name, "machine_1.name"),
        (Attr::Machine2Name, "machine_2.name"),
        (Attr::Machine1Id, "machine_1.id"),
        (Attr::Machine2Id, "machine_2.id"),
    ];

    fn name(self) -> &'static str {
        Attr::ALL.iter().find(|(a, _)| *a == self).unwrap().1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MachineSlot {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Const(bool),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
    Equals(Attr, String),
    HasDevice(String),
    HasPoint(MachineSlot, String),
}

/// What a condition is evaluated against.
pub struct BranchContext<'a> {
    pub op: &'a Operation,
    pub robot: Option<&'a Robot>,
    pub scene: &'a Scene,
}

impl BranchContext<'_> {
    fn machine_id(&self, slot: MachineSlot) -> Option<&str> {
        match slot {
            MachineSlot::First => Some(self.op.machine_1.as_str()),
            MachineSlot::Second => self.op.machine_2.as_deref(),
        }
    }

    fn attr(&self, attr: Attr) -> Option<String> {
        match attr {
            Attr::OpType => Some(self.op.op_type.to_string()),
            Attr::WorkpieceKind => self.scene.workpiece(&self.op.workpiece).map(|w| w.kind.clone()),
            Attr::Machine1Id => self.machine_id(MachineSlot::First).map(str::to_string),
            Attr::Machine2Id => self.machine_id(MachineSlot::Second).map(str::to_string),
            Attr::Machine1Name | Attr::Machine2Name => {
                let slot = if attr == Attr::Machine1Name { MachineSlot::First } else { MachineSlot::Second };
                self.machine_id(slot).and_then(|id| self.scene.machine(id)).map(|m| m.name.clone())
            }
        }
    }
}

impl Condition {
    pub fn eval(&self, ctx: &BranchContext<'_>) -> bool {
        match self {
            Condition::Const(b) => *b,
            Condition::And(items) => items.iter().all(|c| c.eval(ctx)),
            Condition::Or(items) => items.iter().any(|c| c.eval(ctx)),
            Condition::Not(inner) => !inner.eval(ctx),
            Condition::Equals(attr, value) => ctx.attr(*attr).as_deref() == Some(value.as_str()),
            Condition::HasDevice(name) => ctx.robot.is_some_and(|r| r.devices.contains(name)),
            Condition::HasPoint(slot, name) => {
                ctx.machine_id(*slot).and_then(|id| ctx.scene.machine(id)).is_some_and(|m| m.points.contains(name))
            }
        }
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, atom: &str) -> fmt::Result {
    let plain =
        !atom.is_empty() && !atom.chars().any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == '\\');
    if plain {
        f.write_str(atom)
    } else {
        write!(f, "\"{}\"", atom.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Const(true) => f.write_str("true"),
            Condition::Const(false) => f.write_str("false"),
            Condition::And(items) | Condition::Or(items) => {
                f.write_str(if matches!(self, Condition::And(_)) { "(and" } else { "(or" })?;
                for item in items {
                    write!(f, " {item}")?;
                }
                f.write_str(")")
            }
            Condition::Not(inner) => write!(f, "(not {inner})"),
            Condition::Equals(attr, value) => {
                write!(f, "(= {} ", attr.name())?;
                write_atom(f, value)?;
                f.write_str(")")
            }
            Condition::HasDevice(name) => {
                f.write_str("(has-device robot ")?;
                write_atom(f, name)?;
                f.write_str(")")
            }
            Condition::HasPoint(slot, name) => {
                let slot = match slot {
                    MachineSlot::First => "machine_1",
                    MachineSlot::Second => "machine_2",
                };
                write!(f, "(has-point {slot} ")?;
                write_atom(f, name)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(src: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                tokens.push(Token::Open);
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close);
            }
            '"' => {
                chars.next();
                let mut atom = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(escaped) => atom.push(escaped),
                            None => return Err("unterminated escape".into()),
                        },
                        Some(other) => atom.push(other),
                    }
                }
                tokens.push(Token::Atom(atom));
            }
            _ => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                }
                tokens.push(Token::Atom(atom));
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn atom(&mut self, what: &str) -> Result<String, String> {
        match self.next() {
            Some(Token::Atom(a)) => Ok(a),
            _ => Err(format!("expected {what}")),
        }
    }

    fn close(&mut self) -> Result<(), String> {
        match self.next() {
            Some(Token::Close) => Ok(()),
            _ => Err("expected `)`".into()),
        }
    }

    fn expr(&mut self) -> Result<Condition, String> {
        match self.next() {
            Some(Token::Atom(a)) if a == "true" => Ok(Condition::Const(true)),
            Some(Token::Atom(a)) if a == "false" => Ok(Condition::Const(false)),
            Some(Token::Atom(a)) => Err(format!("unexpected atom `{a}`")),
            Some(Token::Close) => Err("unexpected `)`".into()),
            None => Err("unexpected end of condition".into()),
            Some(Token::Open) => {
                let head = self.atom("operator")?;
                let cond = match head.as_str() {
                    "and" | "or" => {
                        let mut items = Vec::new();
                        while self.tokens.get(self.pos) != Some(&Token::Close) {
                            if self.pos >= self.tokens.len() {
                                return Err("unexpected end of condition".into());
                            }
                            items.push(self.expr()?);
                        }
                        if head == "and" {
                            Condition::And(items)
                        } else {
                            Condition::Or(items)
                        }
                    }
                    "not" => Condition::Not(Box::new(self.expr()?)),
                    "=" => {
                        let name = self.atom("attribute")?;
                        let attr = Attr::ALL
                            .iter()
                            .find(|(_, n)| *n == name)
                            .map(|(a, _)| *a)
                            .ok_or_else(|| format!("unknown attribute `{name}`"))?;
                        Condition::Equals(attr, self.atom("value")?)
                    }
                    "has-device" => {
                        let who = self.atom("`robot`")?;
                        if who != "robot" {
                            return Err(format!("has-device expects `robot`, found `{who}`"));
                        }
                        Condition::HasDevice(self.atom("device name")?)
                    }
                    "has-point" => {
                        let slot = match self.atom("machine slot")?.as_str() {
                            "machine_1" => MachineSlot::First,
                            "machine_2" => MachineSlot::Second,
                            other => return Err(format!("unknown machine slot `{other}`")),
                        };
                        Condition::HasPoint(slot, self.atom("point name")?)
                    }
                    other => return Err(format!("unknown operator `{other}`")),
                };
                self.close()?;
                Ok(cond)
            }
        }
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { tokens: tokenize(s)?, pos: 0 };
        let cond = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err("trailing input after condition".into());
        }
        Ok(cond)
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Machine, OperationType, Workpiece};
    use proptest::prelude::*;

    fn scene() -> Scene {
        Scene {
            robots: vec![Robot {
                id: "r1".into(),
                devices: ["bracket_camera".to_string()].into(),
                reachable_machines: ["t".to_string()].into(),
            }],
            machines: vec![Machine {
                id: "t".into(),
                name: "polishing table".into(),
                held_workpieces: vec!["w".into()],
                exclusive: true,
                points: ["Photo_Point".to_string()].into(),
            }],
            workpieces: vec![Workpiece { id: "w".into(), kind: "plate".into(), state_sequence: vec![] }],
        }
    }

    #[test]
    fn evaluates_against_scene() {
        let s = scene();
        let op = Operation::process("o", OperationType::Polishing, "w", "t");
        let ctx = BranchContext { op: &op, robot: s.robot("r1"), scene: &s };
        let check = |src: &str| src.parse::<Condition>().unwrap().eval(&ctx);
        assert!(check("true"));
        assert!(!check("false"));
        assert!(check("(has-device robot bracket_camera)"));
        assert!(!check("(has-device robot handheld_camera)"));
        assert!(check("(and (= op_type polishing) (not (= op_type transport)))"));
        assert!(check("(= machine_1.name \"polishing table\")"));
        assert!(check("(has-point machine_1 Photo_Point)"));
        assert!(!check("(has-point machine_2 Photo_Point)"));
        assert!(check("(or false (= workpiece.kind plate))"));
        assert!(check("(and)"));
        assert!(!check("(or)"));
    }

    #[test]
    fn malformed_conditions() {
        for bad in ["", "(and", "(= colour red)", "(has-device arm x)", "(xor true)", "true true", "(not)"] {
            assert!(bad.parse::<Condition>().is_err(), "{bad} should not parse");
        }
    }

    fn arb_atom() -> impl Strategy<Value = String> {
        prop_oneof!["[a-z_]{1,8}", "[a-z ]{0,6}", Just("with \"quote\"".to_string()),]
    }

    fn arb_condition() -> impl Strategy<Value = Condition> {
        let leaf = prop_oneof![
            any::<bool>().prop_map(Condition::Const),
            arb_atom().prop_map(Condition::HasDevice),
            arb_atom().prop_map(|a| Condition::HasPoint(MachineSlot::Second, a)),
            arb_atom().prop_map(|a| Condition::Equals(Attr::Machine1Name, a)),
        ];
        leaf.prop_recursive(3, 16, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Condition::And),
                prop::collection::vec(inner.clone(), 0..4).prop_map(Condition::Or),
                inner.prop_map(|c| Condition::Not(Box::new(c))),
            ]
        })
    }

    proptest! {
        #[test]
        fn text_form_round_trips(cond in arb_condition()) {
            let text = cond.to_string();
            prop_assert_eq!(text.parse::<Condition>().unwrap(), cond);
        }
    }
}
