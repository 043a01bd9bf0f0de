use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{parse_planner_text, Planner, PlannerError, PlannerOutput};
use crate::task::TaskInstance;

pub const PLANNER_PROMPT: &str = include_str!("../../assets/planner_prompt.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    /// Serve stored responses only; a missing fixture is an error.
    Replay,
    /// Call the endpoint and store every response body.
    Record,
}

#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_in_flight: usize,
    pub fixtures: Option<(PathBuf, ReplayMode)>,
}

impl LlmConfig {
    /// Reads `SHOPFLOOR_LLM_BASE_URL`, `SHOPFLOOR_LLM_MODEL`,
    /// `SHOPFLOOR_LLM_API_KEY`, `SHOPFLOOR_LLM_TIMEOUT_SECS`,
    /// `SHOPFLOOR_LLM_MAX_IN_FLIGHT`, `SHOPFLOOR_LLM_FIXTURES` (a directory)
    /// and `SHOPFLOOR_LLM_MODE` (`replay` or `record`).
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let mode = match var("SHOPFLOOR_LLM_MODE").as_deref() {
            Some("record") => ReplayMode::Record,
            _ => ReplayMode::Replay,
        };
        LlmConfig {
            base_url: var("SHOPFLOOR_LLM_BASE_URL").unwrap_or_else(|| "http://localhost:8000/v1".into()),
            model: var("SHOPFLOOR_LLM_MODEL").unwrap_or_else(|| "default".into()),
            api_key: var("SHOPFLOOR_LLM_API_KEY"),
            timeout: Duration::from_secs(var("SHOPFLOOR_LLM_TIMEOUT_SECS").and_then(|v| v.parse().ok()).unwrap_or(120)),
            max_in_flight: var("SHOPFLOOR_LLM_MAX_IN_FLIGHT").and_then(|v| v.parse().ok()).unwrap_or(4).max(1),
            fixtures: var("SHOPFLOOR_LLM_FIXTURES").map(|d| (PathBuf::from(d), mode)),
        }
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Chat-completion client for a generic `POST {base_url}/chat/completions`
/// endpoint, with optional fixture replay keyed by the SHA-256 of the
/// request body.
pub struct LlmPlanner {
    config: LlmConfig,
    client: Option<reqwest::blocking::Client>,
    slots: Semaphore,
}

impl LlmPlanner {
    pub fn new(config: LlmConfig) -> Result<Self, PlannerError> {
        let needs_http = !matches!(config.fixtures, Some((_, ReplayMode::Replay)));
        let client = if needs_http {
            let c = reqwest::blocking::Client::builder()
                .timeout(config.timeout)
                .build()
                .map_err(|e| PlannerError::Unavailable(e.to_string()))?;
            Some(c)
        } else {
            None
        };
        let slots = Semaphore { free: Mutex::new(config.max_in_flight), cv: Condvar::new() };
        Ok(LlmPlanner { config, client, slots })
    }

    /// Exact bytes sent for `task`.
    pub fn request_body(&self, task: &TaskInstance) -> String {
        let scene = serde_json::to_string_pretty(&task.scene).expect("scene serializes");
        let user = format!("Scene:\n{scene}\n\nInstruction:\n{}\n", task.instruction);
        let req = ChatRequest {
            model: &self.config.model,
            messages: vec![
                Message { role: "system", content: PLANNER_PROMPT },
                Message { role: "user", content: &user },
            ],
            temperature: 0.0,
        };
        serde_json::to_string(&req).expect("request serializes")
    }

    pub fn fixture_key(body: &str) -> String {
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    fn post(&self, body: &str) -> Result<String, PlannerError> {
        let client = self.client.as_ref().ok_or_else(|| PlannerError::Unavailable("no HTTP client".into()))?;
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut req = client.post(url).header(reqwest::header::CONTENT_TYPE, "application/json").body(body.to_string());
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let _slot = self.slots.acquire();
        let resp = req.send().map_err(|e| PlannerError::Unavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| PlannerError::Unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(PlannerError::Unavailable(format!("HTTP {status}: {text}")));
        }
        Ok(text)
    }

    /// Raw response body for `body`, through the fixture store when configured.
    pub fn response_body(&self, body: &str) -> Result<String, PlannerError> {
        let Some((dir, mode)) = &self.config.fixtures else {
            return self.post(body);
        };
        let path = dir.join(format!("{}.json", Self::fixture_key(body)));
        match mode {
            ReplayMode::Replay => std::fs::read_to_string(&path)
                .map_err(|e| PlannerError::Unavailable(format!("no recorded response at {}: {e}", path.display()))),
            ReplayMode::Record => {
                let text = self.post(body)?;
                std::fs::create_dir_all(dir).map_err(|e| PlannerError::Unavailable(e.to_string()))?;
                std::fs::write(&path, &text).map_err(|e| PlannerError::Unavailable(e.to_string()))?;
                Ok(text)
            }
        }
    }
}

fn message_content(response: &str) -> Option<String> {
    let v: serde_json::Value = serde_json::from_str(response).ok()?;
    v.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

impl Planner for LlmPlanner {
    fn name(&self) -> &str {
        "llm"
    }

    fn plan(&self, task: &TaskInstance) -> Result<PlannerOutput, PlannerError> {
        let response = self.response_body(&self.request_body(task))?;
        Ok(match message_content(&response) {
            Some(content) => parse_planner_text(&content, &task.scene),
            None => PlannerOutput {
                raw: Some(response),
                issues: vec!["unparseable response: no choices[0].message.content".into()],
                ..PlannerOutput::default()
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scene;

    fn task() -> TaskInstance {
        TaskInstance {
            task_id: Some("t".into()),
            tier: None,
            scene: Scene::default(),
            instruction: "move it".into(),
            ground_truth: None,
        }
    }

    fn replay_config(dir: PathBuf) -> LlmConfig {
        LlmConfig {
            base_url: "http://127.0.0.1:9".into(),
            model: "m".into(),
            api_key: None,
            timeout: Duration::from_secs(1),
            max_in_flight: 1,
            fixtures: Some((dir, ReplayMode::Replay)),
        }
    }

    #[test]
    fn replay_serves_stored_body_and_flags_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let planner = LlmPlanner::new(replay_config(dir.path().to_path_buf())).unwrap();
        let body = planner.request_body(&task());
        assert!(matches!(planner.plan(&task()), Err(PlannerError::Unavailable(_))));

        let path = dir.path().join(format!("{}.json", LlmPlanner::fixture_key(&body)));
        std::fs::write(&path, "not json at all").unwrap();
        assert_eq!(planner.response_body(&body).unwrap(), "not json at all");
        let out = planner.plan(&task()).unwrap();
        assert!(!out.is_valid());
        assert_eq!(out.raw.as_deref(), Some("not json at all"));
    }

    #[test]
    fn request_body_is_stable() {
        let planner = LlmPlanner::new(replay_config(PathBuf::from("/nonexistent"))).unwrap();
        let a = planner.request_body(&task());
        assert_eq!(a, planner.request_body(&task()));
        assert!(a.starts_with("{\"model\":\"m\",\"messages\":[{\"role\":\"system\""));
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let mut config = replay_config(PathBuf::new());
        config.fixtures = None;
        let planner = LlmPlanner::new(config).unwrap();
        assert!(matches!(planner.plan(&task()), Err(PlannerError::Unavailable(_))));
    }
}
