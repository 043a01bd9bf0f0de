//! Operation process tree: procedure-step nodes whose root-to-leaf branches
//! are complete operation procedures.

mod condition;
mod reference;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use condition::{Attr, BranchContext, Condition, MachineSlot};
pub use reference::{reference_tree, REFERENCE_TREE_JSON};

use crate::model::{OpId, Operation, OperationType, Robot, Scene};
use crate::skill::{classify_arg, Skill, SkillCall};

pub type NodeIndex = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeType {
    General,
    Op(OperationType),
}

impl NodeType {
    pub fn admits(self, op_type: OperationType) -> bool {
        match self {
            NodeType::General => true,
            NodeType::Op(t) => t == op_type,
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeType::General => f.write_str("general"),
            NodeType::Op(t) => write!(f, "{t}"),
        }
    }
}

impl Serialize for NodeType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.eq_ignore_ascii_case("general") {
            Ok(NodeType::General)
        } else {
            s.parse().map(NodeType::Op).map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeNode {
    pub index: NodeIndex,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub description: String,
    pub condition: Condition,
    /// May be empty for pure routing nodes.
    pub snippet: Vec<SkillCall>,
    pub children: Vec<NodeIndex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessTree {
    pub root: NodeIndex,
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    DuplicateIndex(NodeIndex),
    MissingRoot(NodeIndex),
    DanglingChild { parent: NodeIndex, child: NodeIndex },
    SeveralParents(NodeIndex),
    RootHasParent,
    Unreachable(NodeIndex),
    UnknownSkill { node: NodeIndex, skill: String },
    BadPlaceholder { node: NodeIndex, arg: String },
    Uncovered(Vec<OperationType>),
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::DuplicateIndex(i) => write!(f, "duplicate node index {i}"),
            TreeViolation::MissingRoot(i) => write!(f, "root {i} is not a node"),
            TreeViolation::DanglingChild { parent, child } => {
                write!(f, "node {parent} lists missing child {child}")
            }
            TreeViolation::SeveralParents(i) => write!(f, "node {i} has more than one parent"),
            TreeViolation::RootHasParent => f.write_str("root appears as a child"),
            TreeViolation::Unreachable(i) => write!(f, "node {i} is not reachable from the root"),
            TreeViolation::UnknownSkill { node, skill } => {
                write!(f, "node {node} uses unknown skill `{skill}`")
            }
            TreeViolation::BadPlaceholder { node, arg } => {
                write!(f, "node {node} uses unknown placeholder `{arg}`")
            }
            TreeViolation::Uncovered(types) => {
                let names: Vec<&str> = types.iter().map(|t| t.as_str()).collect();
                write!(f, "no complete branch for operation types: {}", names.join(", "))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("cannot read tree file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed tree file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid tree: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<TreeViolation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BranchError {
    #[error("no branch matches op `{op}`; deepest satisfiable node is {deepest}")]
    NoBranch { op: OpId, deepest: NodeIndex },
    #[error("op `{op}` matches several branches: {first:?} and {second:?}")]
    AmbiguousBranch { op: OpId, first: Vec<NodeIndex>, second: Vec<NodeIndex> },
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<ProcessTree, TreeError> {
    let text = std::fs::read_to_string(path)?;
    ProcessTree::from_json(&text)
}

impl ProcessTree {
    pub fn from_json(text: &str) -> Result<ProcessTree, TreeError> {
        let tree: ProcessTree = serde_json::from_str(text)?;
        let violations = tree.violations();
        if violations.is_empty() {
            Ok(tree)
        } else {
            Err(TreeError::Validation(violations))
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tree serializes");
        s.push('\n');
        s
    }

    pub fn node(&self, index: NodeIndex) -> Option<&TreeNode> {
        self.nodes.iter().find(|n| n.index == index)
    }

    pub fn violations(&self) -> Vec<TreeViolation> {
        let mut out = Vec::new();
        let mut by_index: BTreeMap<NodeIndex, &TreeNode> = BTreeMap::new();
        for node in &self.nodes {
            if by_index.insert(node.index, node).is_some() {
                out.push(TreeViolation::DuplicateIndex(node.index));
            }
        }
        if !by_index.contains_key(&self.root) {
            out.push(TreeViolation::MissingRoot(self.root));
            return out;
        }

        let mut parent_count: BTreeMap<NodeIndex, usize> = BTreeMap::new();
        for node in &self.nodes {
            for &child in &node.children {
                if !by_index.contains_key(&child) {
                    out.push(TreeViolation::DanglingChild { parent: node.index, child });
                } else {
                    *parent_count.entry(child).or_default() += 1;
                }
            }
            for call in &node.snippet {
                if call.skill.parse::<Skill>().is_err() {
                    out.push(TreeViolation::UnknownSkill { node: node.index, skill: call.skill.clone() });
                }
                for arg in &call.args {
                    if classify_arg(arg).is_err() {
                        out.push(TreeViolation::BadPlaceholder { node: node.index, arg: arg.clone() });
                    }
                }
            }
        }
        if parent_count.contains_key(&self.root) {
            out.push(TreeViolation::RootHasParent);
        }
        for (&index, &count) in &parent_count {
            if count > 1 {
                out.push(TreeViolation::SeveralParents(index));
            }
        }
        if !out.is_empty() {
            return out;
        }

        // With single parents and a parentless root, reachability rules out cycles.
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            if seen.insert(i) {
                stack.extend(by_index[&i].children.iter().copied());
            }
        }
        for &i in by_index.keys() {
            if !seen.contains(&i) {
                out.push(TreeViolation::Unreachable(i));
            }
        }
        if !out.is_empty() {
            return out;
        }

        let uncovered: Vec<OperationType> =
            OperationType::ALL.into_iter().filter(|&t| !self.has_complete_branch(self.root, t)).collect();
        if !uncovered.is_empty() {
            out.push(TreeViolation::Uncovered(uncovered));
        }
        out
    }

    fn has_complete_branch(&self, index: NodeIndex, op_type: OperationType) -> bool {
        let Some(node) = self.node(index) else {
            return false;
        };
        if !node.node_type.admits(op_type) {
            return false;
        }
        node.children.is_empty() || node.children.iter().any(|&c| self.has_complete_branch(c, op_type))
    }

    /// Concatenated snippets along a branch.
    pub fn branch_snippet(&self, branch: &[NodeIndex]) -> Vec<SkillCall> {
        branch.iter().filter_map(|&i| self.node(i)).flat_map(|n| n.snippet.iter().cloned()).collect()
    }
}

/// Finds the unique root-to-leaf path whose nodes all admit the operation's
/// type and whose conditions hold for the operation, its robot and the scene.
pub fn select_branch(
    tree: &ProcessTree,
    op: &Operation,
    robot: Option<&Robot>,
    scene: &Scene,
) -> Result<Vec<NodeIndex>, BranchError> {
    let ctx = BranchContext { op, robot, scene };
    let mut matches: Vec<Vec<NodeIndex>> = Vec::new();
    let mut deepest = (0usize, tree.root);
    let mut path = Vec::new();
    walk(tree, tree.root, &ctx, &mut path, &mut matches, &mut deepest);
    match matches.len() {
        0 => Err(BranchError::NoBranch { op: op.id.clone(), deepest: deepest.1 }),
        1 => Ok(matches.pop().unwrap()),
        _ => Err(BranchError::AmbiguousBranch {
            op: op.id.clone(),
            first: matches[0].clone(),
            second: matches[1].clone(),
        }),
    }
}

fn walk(
    tree: &ProcessTree,
    index: NodeIndex,
    ctx: &BranchContext<'_>,
    path: &mut Vec<NodeIndex>,
    matches: &mut Vec<Vec<NodeIndex>>,
    deepest: &mut (usize, NodeIndex),
) {
    let Some(node) = tree.node(index) else {
        return;
    };
    if !node.node_type.admits(ctx.op.op_type) || !node.condition.eval(ctx) {
        return;
    }
    path.push(index);
    if path.len() > deepest.0 {
        *deepest = (path.len(), index);
    }
    if node.children.is_empty() {
        matches.push(path.clone());
    } else {
        for &child in &node.children {
            walk(tree, child, ctx, path, matches, deepest);
        }
    }
    path.pop();
}
