//! Compares the FIFO list scheduler against the exhaustive oracle on a few
//! generated instances small enough for the oracle.

use shopfloor::bench::{generate_instance, TierSpec};
use shopfloor::schedule::{brute_force_optimal, solve_fifo};
use shopfloor::task::Tier;

fn main() {
    println!("{:<22} {:>4} {:>5} {:>7}", "task", "ops", "fifo", "oracle");
    for seed in 0..8 {
        let mut spec = TierSpec::new(Tier::SimpleMulti, seed);
        spec.max_ops = 8;
        let task = generate_instance(spec).unwrap();
        let gt = task.ground_truth.as_ref().unwrap();
        let graph = gt.graph(&task.scene).unwrap();
        let order: Vec<String> = gt.operations.iter().rev().map(|o| o.id.clone()).collect();
        let fifo = solve_fifo(&graph, &order).unwrap();
        let best = brute_force_optimal(&graph).unwrap();
        println!("{:<22} {:>4} {:>5} {:>7}", task.id(), graph.op_count(), fifo.makespan, best.makespan);
    }
}
