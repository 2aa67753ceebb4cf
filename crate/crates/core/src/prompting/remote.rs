use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::{BackendConfig, BackendError, ChatMessage, PromptBundle, Summarizer};

/// Chat-completion client: POSTs `{model, messages, temperature, max_tokens}`
/// and reads `choices[0].message.content`.
#[derive(Debug, Clone)]
pub struct RemoteChat {
    name: String,
    endpoint: String,
    model: String,
    token: String,
    retries: u32,
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

impl RemoteChat {
    pub fn new(name: &str, endpoint: &str, model: &str, token: &str, retries: u32) -> Self {
        RemoteChat {
            name: name.to_string(),
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            token: token.to_string(),
            retries,
        }
    }

    pub fn from_config(config: &BackendConfig) -> Result<Self, BackendError> {
        config.check()?;
        let var = config.auth_env.as_deref().unwrap_or_default();
        let token = std::env::var(var).map_err(|_| BackendError::MissingAuth(var.to_string()))?;
        Ok(Self::new(
            config.label(),
            config.endpoint.as_deref().unwrap_or_default(),
            &config.model_name,
            &token,
            config.retries,
        ))
    }

    fn attempt(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(bundle.timeout_seconds)))
            .http_status_as_error(false)
            .build()
            .into();
        let body = Request {
            model: &self.model,
            messages: &bundle.messages,
            temperature: bundle.temperature,
            max_tokens: bundle.max_new_tokens,
        };
        let mut resp = agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.token))
            .send_json(&body)
            .map_err(|e| transport(e, bundle.timeout_seconds))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| transport(e, bundle.timeout_seconds))?;
        if !status.is_success() {
            return Err(BackendError::Transport(format!("HTTP {}: {}", status.as_u16(), text.trim())));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| BackendError::Parse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Parse("response has no choices[0].message.content".into()))
    }
}

fn transport(e: ureq::Error, secs: u64) -> BackendError {
    match e {
        ureq::Error::Timeout(_) => BackendError::Timeout(secs),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => BackendError::Timeout(secs),
        other => BackendError::Transport(other.to_string()),
    }
}

impl Summarizer for RemoteChat {
    fn name(&self) -> &str {
        &self.name
    }

    /// Transport failures are retried up to the configured count; timeouts
    /// and unreadable responses are not.
    fn complete(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        let mut tries = 0;
        loop {
            match self.attempt(bundle) {
                Err(BackendError::Transport(_)) if tries < self.retries => tries += 1,
                other => return other,
            }
        }
    }
}
