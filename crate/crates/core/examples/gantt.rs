//! Prints the ground-truth schedule of the bundled task as a text chart and
//! writes the SVG rendering to the system temp directory.

use std::path::Path;

use shopfloor::bench::render_gantt;
use shopfloor::task::load_task_instance;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let task = load_task_instance(root.join("fixtures/conveyor_pallets.json")).unwrap();
    let gt = task.ground_truth.as_ref().unwrap();
    let graph = gt.graph(&task.scene).unwrap();
    let schedule = gt.schedule_graph(&graph).unwrap().unwrap();
    let chart = render_gantt(&schedule, &gt.operations, &gt.allocation);
    print!("{}", chart.to_text());

    let out = std::env::temp_dir().join("conveyor_pallets.gantt.svg");
    std::fs::write(&out, chart.to_svg()).unwrap();
    println!("wrote {}", out.display());
}
