//! Plans the bundled task through the chat-completion client using a recorded
//! response, so no network access is needed.
//!
//! Set `SHOPFLOOR_LLM_BASE_URL`, `SHOPFLOOR_LLM_MODEL` and
//! `SHOPFLOOR_LLM_API_KEY` and pass `--live` to call a real endpoint instead.

use std::path::Path;
use std::time::Duration;

use shopfloor::planner::{LlmConfig, LlmPlanner, Planner, ReplayMode};
use shopfloor::task::load_task_instance;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let task = load_task_instance(root.join("fixtures/conveyor_pallets.json")).unwrap();
    let config = if std::env::args().any(|a| a == "--live") {
        LlmConfig::from_env()
    } else {
        LlmConfig {
            base_url: "http://127.0.0.1:9".into(),
            model: "recorded-model".into(),
            api_key: None,
            timeout: Duration::from_secs(1),
            max_in_flight: 1,
            fixtures: Some((root.join("fixtures/llm"), ReplayMode::Replay)),
        }
    };
    let planner = LlmPlanner::new(config).expect("client builds");
    match planner.plan(&task) {
        Ok(out) => {
            println!("valid: {}", out.is_valid());
            for issue in &out.issues {
                println!("issue: {issue}");
            }
            print!("{}", out.to_json());
        }
        Err(e) => eprintln!("planner unavailable: {e}"),
    }
}
