//! Live provider adapter: a minimal OpenAI-compatible chat-completions
//! client. Only used in live mode; stub and replay never touch the network.

use super::GatewayError;
use serde_json::json;

/// Connection settings for a live provider.
///
/// Credentials come from the environment (`TESTWEAVER_API_KEY`), never from
/// config files or CLI flags.
#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Chat-completions endpoint URL.
    pub url: String,
    /// Model identifier sent in the request.
    pub model: String,
    /// Provider tag recorded on exchanges.
    pub tag: String,
    /// Request timeout in seconds.
    pub timeout_secs: u64,
}

impl LiveConfig {
    pub fn from_env() -> Option<Self> {
        let url = std::env::var("TESTWEAVER_PROVIDER_URL").ok()?;
        let model = std::env::var("TESTWEAVER_MODEL").unwrap_or_else(|_| "default".to_string());
        Some(Self {
            url,
            model,
            tag: "live".to_string(),
            timeout_secs: 120,
        })
    }
}

pub struct LiveReply {
    pub text: String,
    /// (tokens_in, tokens_out) when the provider reports usage.
    pub tokens: Option<(u64, u64)>,
}

pub struct LiveProvider {
    config: LiveConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Provider(e.to_string()))?;
        Ok(Self {
            config,
            api_key: std::env::var("TESTWEAVER_API_KEY").ok(),
            client,
        })
    }

    pub fn tag(&self) -> &str {
        &self.config.tag
    }

    pub fn complete(&self, prompt: &str, temperature: f64) -> Result<LiveReply, GatewayError> {
        let body = json!({
            "model": self.config.model,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.config.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| GatewayError::Provider(format!("request failed: {e}")))?;
        let status = response.status();
        let payload: serde_json::Value = response
            .json()
            .map_err(|e| GatewayError::Provider(format!("bad response body: {e}")))?;
        if !status.is_success() {
            return Err(GatewayError::Provider(format!(
                "provider returned {status}: {payload}"
            )));
        }
        let text = payload["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| GatewayError::Provider("response lacks message content".into()))?
            .to_string();
        let tokens = match (
            payload["usage"]["prompt_tokens"].as_u64(),
            payload["usage"]["completion_tokens"].as_u64(),
        ) {
            (Some(i), Some(o)) => Some((i, o)),
            _ => None,
        };
        Ok(LiveReply { text, tokens })
    }
}
