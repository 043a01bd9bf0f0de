//! The bundled reference tree covering all five operation types.
//!
//! Layout under the routing root: two camera variants, each followed by the
//! same procedure subtree (transport with two gripper variants, then the
//! boundary/trajectory steps shared by the processing operations).

use super::{Condition, NodeIndex, NodeType, ProcessTree, TreeNode};
use crate::model::OperationType;
use crate::skill::{Skill, SkillCall};

/// File form of [`reference_tree`], shipped under `assets/`.
pub const REFERENCE_TREE_JSON: &str = include_str!("../../assets/reference_tree.json");

struct Builder {
    nodes: Vec<TreeNode>,
}

impl Builder {
    fn add(
        &mut self,
        parent: Option<NodeIndex>,
        node_type: NodeType,
        description: &str,
        condition: &str,
        snippet: Vec<SkillCall>,
    ) -> NodeIndex {
        let index = self.nodes.len() as NodeIndex;
        self.nodes.push(TreeNode {
            index,
            node_type,
            description: description.to_string(),
            condition: condition.parse::<Condition>().expect("reference condition parses"),
            snippet,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p as usize].children.push(index);
        }
        index
    }
}

fn go_to(machine: &str, point: &str) -> Vec<SkillCall> {
    [Skill::ConvertToRobot, Skill::MotionPlan, Skill::MoveByPath]
        .into_iter()
        .map(|s| SkillCall::new(s, &["{robot}", machine, point]))
        .collect()
}

fn device(name: &str, action: &str, machine: &str) -> SkillCall {
    SkillCall::new(Skill::ControlDevice, &["{robot}", name, action, machine])
}

fn on_workpiece(skill: Skill, machine: &str) -> SkillCall {
    SkillCall::new(skill, &["{robot}", "{workpiece}", machine])
}

fn return_home() -> SkillCall {
    SkillCall::new(Skill::ReturnHome, &["{robot}"])
}

fn transport_variant(b: &mut Builder, parent: NodeIndex, gripper: &str, condition: &str) {
    let device_ref = format!("{{device:{gripper}}}");
    let mut pick = go_to("{machine_1}", "{point:Pick_Point}");
    pick.push(device(&device_ref, "on", "{machine_1}"));
    pick.push(on_workpiece(Skill::Attach, "{machine_1}"));
    let pick_node = b.add(
        Some(parent),
        NodeType::Op(OperationType::Transport),
        &format!("Pick workpiece with {}; requires a {gripper} on the robot", gripper.replace('_', " ")),
        condition,
        pick,
    );
    let mut place = go_to("{machine_2}", "{point:Place_Point}");
    place.push(on_workpiece(Skill::Detach, "{machine_2}"));
    place.push(device(&device_ref, "off", "{machine_2}"));
    place.push(return_home());
    b.add(
        Some(pick_node),
        NodeType::Op(OperationType::Transport),
        &format!("Place workpiece on the target machine and release the {}", gripper.replace('_', " ")),
        "true",
        place,
    );
}

fn tool_pass(tool: &str) -> Vec<SkillCall> {
    let tool_ref = format!("{{device:{tool}}}");
    let mut steps = go_to("{machine_1}", "{point:Work_Point}");
    steps.push(device(&tool_ref, "on", "{machine_1}"));
    steps.push(SkillCall::new(Skill::MoveByPath, &["{robot}", "{machine_1}", "{point:Work_Point}"]));
    steps.push(device(&tool_ref, "off", "{machine_1}"));
    steps.push(return_home());
    steps
}

fn procedure_subtree(b: &mut Builder, camera: NodeIndex) {
    let locate = b.add(
        Some(camera),
        NodeType::Op(OperationType::Transport),
        "Locate workpiece for grasping",
        "true",
        vec![on_workpiece(Skill::DetectBoundary, "{machine_1}")],
    );
    transport_variant(b, locate, "magnetic_gripper", "(has-device robot magnetic_gripper)");
    transport_variant(
        b,
        locate,
        "vacuum_gripper",
        "(and (has-device robot vacuum_gripper) (not (has-device robot magnetic_gripper)))",
    );

    let detect = b.add(
        Some(camera),
        NodeType::General,
        "Detect workpiece boundary on the processing machine",
        "(not (= op_type transport))",
        vec![on_workpiece(Skill::DetectBoundary, "{machine_1}")],
    );
    let trajectory = b.add(
        Some(detect),
        NodeType::General,
        "Compute tool trajectory from the detected boundary",
        "(not (= op_type assembly))",
        vec![on_workpiece(Skill::ComputeTrajectory, "{machine_1}")],
    );
    for (op_type, tool, text) in [
        (
            OperationType::Polishing,
            "polishing_spindle",
            "Polish along the trajectory and return to the initial position",
        ),
        (OperationType::Welding, "welding_gun", "Weld along the trajectory and return to the initial position"),
        (OperationType::Beveling, "beveling_cutter", "Bevel along the trajectory and return to the initial position"),
    ] {
        b.add(Some(trajectory), NodeType::Op(op_type), text, "true", tool_pass(tool));
    }
    b.add(
        Some(detect),
        NodeType::Op(OperationType::Assembly),
        "Fasten the workpiece at the work point and return to the initial position",
        "true",
        tool_pass("fastening_tool"),
    );
}

pub fn reference_tree() -> ProcessTree {
    let mut b = Builder { nodes: Vec::new() };
    let root = b.add(None, NodeType::General, "Operation entry", "true", vec![]);

    let bracket = b.add(
        Some(root),
        NodeType::General,
        "Photo using bracket-mounted camera above the robot",
        "(has-device robot bracket_camera)",
        vec![device("{device:bracket_camera}", "on", "{machine_1}")],
    );
    procedure_subtree(&mut b, bracket);

    let mut handheld_photo = go_to("{machine_1}", "{point:Photo_Point}");
    handheld_photo.push(device("{device:handheld_camera}", "on", "{machine_1}"));
    let handheld = b.add(
        Some(root),
        NodeType::General,
        "Photo using handheld camera",
        "(and (has-device robot handheld_camera) (not (has-device robot bracket_camera)))",
        handheld_photo,
    );
    procedure_subtree(&mut b, handheld);

    ProcessTree { root, nodes: b.nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_matches_builder() {
        let built = reference_tree();
        if std::env::var_os("SHOPFLOOR_BLESS").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/reference_tree.json");
            std::fs::write(path, built.to_json()).unwrap();
            return;
        }
        let loaded = ProcessTree::from_json(REFERENCE_TREE_JSON).unwrap();
        assert_eq!(loaded, built);
        assert_eq!(built.to_json(), REFERENCE_TREE_JSON);
    }

    #[test]
    fn handheld_photo_matches_boxed_example_shape() {
        let tree = reference_tree();
        let node = tree.nodes.iter().find(|n| n.description == "Photo using handheld camera").unwrap();
        let skills: Vec<&str> = node.snippet.iter().map(|c| c.skill.as_str()).collect();
        assert_eq!(skills, ["convert_to_robot", "motion_plan", "move_by_path", "control_device"]);
    }
}
