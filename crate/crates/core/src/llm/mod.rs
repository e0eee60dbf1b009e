//! Turns a natural-language request into a constraint program through a
//! chat-completion endpoint. This is the only module that talks to the network.

mod prompt;

use std::time::Duration;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dsl::{self, ConstraintProgram};
use crate::relations::RelationGraph;
use crate::scene::Scene;

pub use prompt::{
    build_scene_summary, crucial_prompt, parse_few_shot, system_text, FewShot, PromptBundle, DEFAULT_FEW_SHOT,
};

pub const ENV_ENDPOINT: &str = "ICONFORGE_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "ICONFORGE_LLM_API_KEY";
pub const ENV_MODEL: &str = "ICONFORGE_LLM_MODEL";

/// Separator line between alternative programs in one reply.
pub const ALTERNATIVE_DELIMITER: &str = "=== alternative ===";

const OFFLINE_HINT: &str = "pass --program FILE to run without a language model";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("no language-model endpoint configured (set {ENV_ENDPOINT}); {OFFLINE_HINT}")]
    NotConfigured,
    #[error("request to the language model failed: {0}; {OFFLINE_HINT}")]
    Transport(String),
    #[error("unexpected reply from the language model: {0}")]
    BadReply(String),
    #[error("generated program did not parse after {attempts} attempt(s): {message}\n--- reply ---\n{raw}")]
    Parse {
        attempts: usize,
        message: String,
        raw: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: Option<String>,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    /// Extra attempts after a reply fails to parse.
    pub max_retries: usize,
    /// Number of alternative programs requested per reply.
    pub alternatives: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: None,
            api_key: None,
            model: "gpt-4".into(),
            temperature: 0.0,
            timeout_secs: 60.0,
            max_retries: 2,
            alternatives: 1,
        }
    }
}

impl LlmConfig {
    /// Defaults overridden by the `ICONFORGE_LLM_*` environment variables.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let mut cfg = LlmConfig::default();
        cfg.endpoint = var(ENV_ENDPOINT);
        cfg.api_key = var(ENV_API_KEY);
        if let Some(m) = var(ENV_MODEL) {
            cfg.model = m;
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Message {
            role: role.into(),
            content: content.into(),
        }
    }
}

/// A parsed reply and the raw text it came from.
#[derive(Clone, Debug)]
pub struct LlmOutcome {
    pub programs: Vec<ConstraintProgram>,
    pub raw: String,
    /// Attempts that failed to parse before the accepted one.
    pub retries: usize,
}

impl LlmOutcome {
    pub fn program(&self) -> &ConstraintProgram {
        &self.programs[0]
    }
}

/// Contents of the first fenced code block, or the whole reply.
pub fn extract_code(reply: &str) -> String {
    let mut lines = reply.lines();
    while let Some(l) = lines.next() {
        if l.trim_start().starts_with("```") {
            let body: Vec<&str> = lines.by_ref().take_while(|l| !l.trim_start().starts_with("```")).collect();
            return body.join("\n");
        }
    }
    reply.trim().to_string()
}

/// Splits a reply body on delimiter lines, dropping empty chunks.
pub fn split_alternatives(code: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    for l in code.lines() {
        if l.trim() == ALTERNATIVE_DELIMITER {
            out.push(String::new());
        } else {
            let cur = out.last_mut().unwrap();
            cur.push_str(l);
            cur.push('\n');
        }
    }
    out.retain(|c| !c.trim().is_empty());
    out
}

fn parse_reply(reply: &str, scene: &Scene) -> Result<Vec<ConstraintProgram>, String> {
    let code = extract_code(reply);
    let chunks = split_alternatives(&code);
    if chunks.is_empty() {
        return Err("reply contained no program".into());
    }
    chunks
        .iter()
        .map(|c| dsl::parse(c, scene).map_err(|e| e.to_string()))
        .collect()
}

/// Blocking chat-completion client.
pub struct Client {
    agent: ureq::Agent,
    cfg: LlmConfig,
}

impl Client {
    pub fn new(cfg: LlmConfig) -> Result<Self, LlmError> {
        if cfg.endpoint.is_none() {
            return Err(LlmError::NotConfigured);
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Client { agent, cfg })
    }

    /// One completion: the assistant text for `messages`.
    pub fn complete(&self, messages: &[Message]) -> Result<String, LlmError> {
        let url = self.cfg.endpoint.as_deref().ok_or(LlmError::NotConfigured)?;
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": messages,
        });
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        debug!("posting {} messages to {url}", messages.len());
        let mut resp = req.send_json(&body).map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Transport(format!("http status {status}: {}", text.trim())));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::BadReply(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::BadReply(format!("no choices[0].message.content in {text}")))
    }
}

/// Asks the model for a program implementing `request`, feeding parse errors
/// back for up to `max_retries` further attempts.
pub fn request_program(
    request: &str,
    scene: &Scene,
    graph: &RelationGraph,
    cfg: &LlmConfig,
) -> Result<LlmOutcome, LlmError> {
    let bundle = PromptBundle::new(request, scene, graph, cfg.alternatives);
    let client = Client::new(cfg.clone())?;
    let mut messages = bundle.messages();
    let mut attempt = 0;
    loop {
        let reply = client.complete(&messages)?;
        match parse_reply(&reply, scene) {
            Ok(programs) => {
                info!("program accepted after {attempt} retr{}", if attempt == 1 { "y" } else { "ies" });
                return Ok(LlmOutcome {
                    programs,
                    raw: reply,
                    retries: attempt,
                });
            }
            Err(message) if attempt < cfg.max_retries => {
                warn!("reply did not parse ({message}); retrying");
                messages.push(Message::new("assistant", reply));
                messages.push(Message::new(
                    "user",
                    format!("That program failed to parse: {message}\nReply with a corrected program only."),
                ));
                attempt += 1;
            }
            Err(message) => {
                return Err(LlmError::Parse {
                    attempts: attempt + 1,
                    message,
                    raw: reply,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests;
