//! Generates a small seeded suite in every tier and benchmarks the
//! ground-truth planner against the wrong-robot perturbation.

use shopfloor::bench::{generate_suite, run_benchmark};
use shopfloor::planner::{GroundTruthPlanner, Planner, WrongRobotPlanner};
use shopfloor::task::Tier;
use shopfloor::tree::reference_tree;

fn main() {
    let mut tasks = Vec::new();
    for tier in Tier::ALL {
        tasks.extend(generate_suite(tier, 5, 42).expect("generator succeeds"));
    }
    let tree = reference_tree();
    let planners: [&dyn Planner; 2] = [&GroundTruthPlanner, &WrongRobotPlanner { inner: GroundTruthPlanner }];
    for planner in planners {
        let report = run_benchmark(&tasks, planner, &tree).unwrap();
        println!("planner {}", report.planner);
        for (tier, m) in &report.tier_means {
            println!(
                "  {tier:<14} n={} oc={:.3} se={:.3} exe={:.3} gcr={:.3} sr={:.3}",
                m.count, m.oc, m.se, m.exe, m.gcr, m.sr
            );
        }
    }
}
