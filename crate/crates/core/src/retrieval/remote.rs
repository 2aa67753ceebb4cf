use std::time::Duration;

use serde_json::{json, Value};

use super::{Embedder, RetrievalError};

/// Embedding client: POSTs `{model, input}` and reads `data[i].embedding`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub endpoint: String,
    pub model: String,
    token: String,
    pub timeout_seconds: u64,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, model: &str, token: &str) -> Self {
        RemoteEmbedder {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            token: token.to_string(),
            timeout_seconds: 50,
        }
    }

    /// Token from the environment variable `auth_env`.
    pub fn from_env(endpoint: &str, model: &str, auth_env: &str) -> Result<Self, RetrievalError> {
        let token = std::env::var(auth_env)
            .map_err(|_| RetrievalError::Embedder(format!("environment variable `{auth_env}` is not set")))?;
        Ok(Self::new(endpoint, model, &token))
    }
}

impl Embedder for RemoteEmbedder {
    fn id(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.timeout_seconds)))
            .http_status_as_error(false)
            .build()
            .into();
        let err = |e: ureq::Error| RetrievalError::Embedder(e.to_string());
        let mut resp = agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.token))
            .send_json(json!({"model": self.model, "input": texts}))
            .map_err(err)?;
        let status = resp.status();
        let text = resp.body_mut().read_to_string().map_err(err)?;
        if !status.is_success() {
            return Err(RetrievalError::Embedder(format!("HTTP {}: {}", status.as_u16(), text.trim())));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| RetrievalError::Embedder(e.to_string()))?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| RetrievalError::Embedder("response has no `data` array".into()))?;
        if data.len() != texts.len() {
            return Err(RetrievalError::Embedder(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                data.len()
            )));
        }
        data.iter()
            .map(|d| {
                d.get("embedding")
                    .and_then(Value::as_array)
                    .and_then(|xs| xs.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                    .ok_or_else(|| RetrievalError::Embedder("malformed embedding".into()))
            })
            .collect()
    }
}
