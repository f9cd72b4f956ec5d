//! Blocking HTTP gateway to chat-completion endpoints, with retries,
//! timeouts, and bounded concurrent fan-out. This is the only concurrent
//! component in the system; it returns to the caller only when every
//! request of a round has finished, so the simulation can never observe a
//! half-decided round.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct ModelEndpointConfig {
    /// Full URL of the chat-completions endpoint.
    pub base_url: String,
    pub model: String,
    pub api_key: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout: Duration,
    pub max_concurrent: usize,
}

#[derive(Debug, Error, Clone)]
pub enum GatewayError {
    #[error("request failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("endpoint returned malformed response: {0}")]
    BadResponse(String),
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

fn send_once(
    client: &reqwest::blocking::Client,
    cfg: &ModelEndpointConfig,
    prompt: &str,
) -> Result<String, String> {
    let body = json!({
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
    });
    let mut req = client.post(&cfg.base_url).json(&body);
    if !cfg.api_key.is_empty() {
        req = req.bearer_auth(&cfg.api_key);
    }
    let resp = req.send().map_err(|e| e.to_string())?;
    let status = resp.status();
    if !status.is_success() {
        return Err(format!("HTTP {status}"));
    }
    let parsed: ChatResponse = resp
        .json()
        .map_err(|e| format!("malformed body: {e}"))?;
    parsed
        .choices
        .first()
        .map(|c| c.message.content.clone())
        .ok_or_else(|| "empty choices array".to_string())
}

/// One prompt, one assistant reply, with retry on transport errors and
/// non-2xx statuses.
pub fn complete(prompt: &str, cfg: &ModelEndpointConfig) -> Result<String, GatewayError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(cfg.timeout)
        .build()
        .map_err(|e| GatewayError::BadResponse(e.to_string()))?;
    let attempts = cfg.max_retries + 1;
    let mut last = String::new();
    for _ in 0..attempts {
        match send_once(&client, cfg, prompt) {
            Ok(text) => return Ok(text),
            Err(e) => last = e,
        }
    }
    Err(GatewayError::Exhausted { attempts, last })
}

/// Fan out one round of prompts with at most `max_concurrent` requests in
/// flight. Returns when every agent has either a response or a final
/// error; per-agent failures never abort the round.
pub fn complete_round(
    prompts: &BTreeMap<u32, String>,
    cfg: &ModelEndpointConfig,
) -> BTreeMap<u32, Result<String, GatewayError>> {
    if prompts.is_empty() {
        return BTreeMap::new();
    }
    let work: Arc<Mutex<Vec<(u32, String)>>> = Arc::new(Mutex::new(
        prompts.iter().map(|(&id, p)| (id, p.clone())).collect(),
    ));
    let results: Arc<Mutex<BTreeMap<u32, Result<String, GatewayError>>>> =
        Arc::new(Mutex::new(BTreeMap::new()));

    let workers = cfg.max_concurrent.max(1).min(prompts.len());
    let mut handles = Vec::with_capacity(workers);
    for _ in 0..workers {
        let work = Arc::clone(&work);
        let results = Arc::clone(&results);
        let cfg = cfg.clone();
        handles.push(std::thread::spawn(move || loop {
            let item = work.lock().expect("work queue").pop();
            let (id, prompt) = match item {
                Some(x) => x,
                None => break,
            };
            let out = complete(&prompt, &cfg);
            results.lock().expect("results").insert(id, out);
        }));
    }
    for h in handles {
        let _ = h.join();
    }
    Arc::try_unwrap(results)
        .expect("all workers joined")
        .into_inner()
        .expect("results lock")
}
