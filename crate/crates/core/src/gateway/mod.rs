//! Single choke point for all model interaction.
//!
//! Every prompt in the pipeline goes through [`Gateway::complete`]: prompt
//! templating, provider dispatch (live / replay / scripted stub), structured
//! output parsing, and cost accounting all live here. No other module talks
//! to a model provider. Stub and replay modes make every downstream pipeline
//! fully deterministic and offline.

mod cost;
mod parse;
mod provider;
mod replay;
mod stub;
mod template;

pub use cost::{accumulate_cost, CostReport, PriceTable, TemplateCost};
pub use parse::{default_registry, parse_structured, SchemaRegistry, Shape};
pub use provider::{LiveConfig, LiveProvider};
pub use replay::RecordingFile;
pub use stub::{StubRule, StubScript};
pub use template::{PromptTemplate, TemplateCatalog};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

/// Default sampling temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("MISSING_SLOT: template '{template}' requires slot '{slot}'")]
    MissingSlot { template: String, slot: String },
    #[error("NO_RECORDING: no recorded response for prompt key {key}")]
    NoRecording { key: String },
    #[error("PROVIDER_ERROR: {0}")]
    Provider(String),
    #[error("NO_BLOCK: response contains no fenced structured block")]
    NoBlock,
    #[error("SCHEMA_MISMATCH: {0}")]
    SchemaMismatch(String),
    #[error("unknown template '{0}'")]
    UnknownTemplate(String),
    #[error("unknown schema '{0}'")]
    UnknownSchema(String),
    #[error("stub script has no rule for template '{template}'")]
    StubUnmatched { template: String },
    #[error("template catalog error: {0}")]
    Catalog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::MissingSlot { .. } => "MISSING_SLOT",
            GatewayError::NoRecording { .. } => "NO_RECORDING",
            GatewayError::Provider(_) => "PROVIDER_ERROR",
            GatewayError::NoBlock => "NO_BLOCK",
            GatewayError::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            GatewayError::UnknownTemplate(_) => "UNKNOWN_TEMPLATE",
            GatewayError::UnknownSchema(_) => "UNKNOWN_SCHEMA",
            GatewayError::StubUnmatched { .. } => "STUB_UNMATCHED",
            GatewayError::Catalog(_) => "CATALOG_ERROR",
            GatewayError::Io(_) => "IO_ERROR",
        }
    }
}

/// Callers that hit parse failures report them via this code when the retry
/// is also exhausted.
pub const LLM_FORMAT_ERROR: &str = "LLM_FORMAT_ERROR";

/// How the gateway resolves a rendered prompt to a response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Live,
    Replay,
    Stub,
}

/// One prompt/response exchange.
///
/// `key` is a pure function of the rendered prompt (SHA-256, hex) so that any
/// slot change invalidates a replay. `timestamp` is a monotonic tick in stub
/// and replay modes (wall-clock milliseconds in live mode) and is excluded
/// from the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub template_id: String,
    pub rendered_prompt: String,
    pub response: String,
    pub provider_tag: String,
    pub temperature: f64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub key: String,
    pub timestamp: u64,
}

pub fn prompt_key(rendered_prompt: &str) -> String {
    let digest = Sha256::digest(rendered_prompt.as_bytes());
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Deterministic token estimate used in stub/replay mode (about 4 chars per
/// token). Live mode uses provider-reported counts when available.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.len() as u64 + 3) / 4
}

enum Backend {
    Stub(StubScript),
    Replay(RecordingFile),
    Live {
        provider: LiveProvider,
        record_to: Option<PathBuf>,
    },
}

/// The gateway: template catalog + provider backend + exchange log.
pub struct Gateway {
    catalog: TemplateCatalog,
    registry: SchemaRegistry,
    backend: Backend,
    temperature: f64,
    state: Mutex<GatewayState>,
}

struct GatewayState {
    tick: u64,
    exchanges: Vec<LlmExchange>,
}

impl Gateway {
    pub fn stub(catalog: TemplateCatalog, script: StubScript) -> Self {
        Self::new(catalog, Backend::Stub(script), DEFAULT_TEMPERATURE)
    }

    pub fn replay(catalog: TemplateCatalog, recording: RecordingFile) -> Self {
        Self::new(catalog, Backend::Replay(recording), DEFAULT_TEMPERATURE)
    }

    pub fn live(catalog: TemplateCatalog, provider: LiveProvider, record_to: Option<PathBuf>) -> Self {
        Self::new(
            catalog,
            Backend::Live {
                provider,
                record_to,
            },
            DEFAULT_TEMPERATURE,
        )
    }

    fn new(catalog: TemplateCatalog, backend: Backend, temperature: f64) -> Self {
        Self {
            catalog,
            registry: default_registry(),
            backend,
            temperature,
            state: Mutex::new(GatewayState {
                tick: 0,
                exchanges: Vec::new(),
            }),
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn mode(&self) -> ProviderMode {
        match self.backend {
            Backend::Stub(_) => ProviderMode::Stub,
            Backend::Replay(_) => ProviderMode::Replay,
            Backend::Live { .. } => ProviderMode::Live,
        }
    }

    pub fn catalog(&self) -> &TemplateCatalog {
        &self.catalog
    }

    /// Render a template with the given slot values and resolve it to a
    /// response through the active backend.
    pub fn complete(
        &self,
        template_id: &str,
        slots: &BTreeMap<String, String>,
    ) -> Result<LlmExchange, GatewayError> {
        let template = self
            .catalog
            .get(template_id)
            .ok_or_else(|| GatewayError::UnknownTemplate(template_id.to_string()))?;
        let rendered = template.render(slots)?;
        let key = prompt_key(&rendered);

        let (response, provider_tag, live_tokens) = match &self.backend {
            Backend::Stub(script) => {
                let response = script.respond(template_id, &rendered)?;
                (response, "stub".to_string(), None)
            }
            Backend::Replay(recording) => {
                let response = recording
                    .lookup(&key)
                    .ok_or_else(|| GatewayError::NoRecording { key: key.clone() })?;
                (response, "replay".to_string(), None)
            }
            Backend::Live {
                provider,
                record_to,
            } => {
                let reply = provider.complete(&rendered, self.temperature)?;
                if let Some(path) = record_to {
                    RecordingFile::append(path, &key, &reply.text)?;
                }
                (reply.text, provider.tag().to_string(), reply.tokens)
            }
        };

        let (tokens_in, tokens_out) = live_tokens
            .unwrap_or_else(|| (estimate_tokens(&rendered), estimate_tokens(&response)));

        let mut state = self.state.lock().expect("gateway state lock");
        let timestamp = match self.backend {
            Backend::Live { .. } => now_millis(),
            _ => state.tick,
        };
        state.tick += 1;
        let exchange = LlmExchange {
            template_id: template_id.to_string(),
            rendered_prompt: rendered,
            response,
            provider_tag,
            temperature: self.temperature,
            tokens_in,
            tokens_out,
            key,
            timestamp,
        };
        state.exchanges.push(exchange.clone());
        Ok(exchange)
    }

    /// [`complete`](Self::complete) followed by structured-block parsing,
    /// with one "reformat your answer" retry on parse failure.
    pub fn complete_structured(
        &self,
        template_id: &str,
        slots: &BTreeMap<String, String>,
        schema_id: &str,
    ) -> Result<(serde_json::Value, LlmExchange), GatewayError> {
        let exchange = self.complete(template_id, slots)?;
        match parse_structured(&exchange.response, schema_id, &self.registry) {
            Ok(value) => Ok((value, exchange)),
            Err(parse_err @ (GatewayError::NoBlock | GatewayError::SchemaMismatch(_))) => {
                let mut retry_slots = BTreeMap::new();
                retry_slots.insert("original_prompt".to_string(), exchange.rendered_prompt);
                retry_slots.insert("error".to_string(), parse_err.to_string());
                let retry = match self.complete("reformat-structured", &retry_slots) {
                    Ok(retry) => retry,
                    // An unscripted reformat rule means the meaningful error
                    // is the original parse failure.
                    Err(GatewayError::StubUnmatched { .. }) => return Err(parse_err),
                    Err(other) => return Err(other),
                };
                let value = parse_structured(&retry.response, schema_id, &self.registry)?;
                Ok((value, retry))
            }
            Err(other) => Err(other),
        }
    }

    /// Exchanges recorded so far, in call order.
    pub fn exchanges(&self) -> Vec<LlmExchange> {
        self.state.lock().expect("gateway state lock").exchanges.clone()
    }

    /// Write the exchange log as JSON lines.
    pub fn save_exchange_log(&self, path: &Path) -> std::io::Result<()> {
        let state = self.state.lock().expect("gateway state lock");
        let mut out = String::new();
        for e in &state.exchanges {
            out.push_str(&serde_json::to_string(e).expect("exchange serializes"));
            out.push('\n');
        }
        std::fs::write(path, out)
    }
}

fn now_millis() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_catalog() -> TemplateCatalog {
        let mut catalog = TemplateCatalog::empty();
        catalog.insert(PromptTemplate::new(
            "greet",
            "Hello {{name}}, you are {{role}}.",
            vec!["name".into(), "role".into()],
        ));
        catalog.insert(PromptTemplate::new(
            "reformat-structured",
            "Reformat: {{error}}\n\n{{original_prompt}}",
            vec!["original_prompt".into(), "error".into()],
        ));
        catalog
    }

    fn slot(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn stub_returns_scripted_body_verbatim() {
        let script = StubScript::from_rules(vec![StubRule::new("greet", "scripted reply")]);
        let gw = Gateway::stub(tiny_catalog(), script);
        let ex = gw
            .complete("greet", &slot(&[("name", "Ada"), ("role", "tester")]))
            .unwrap();
        assert_eq!(ex.response, "scripted reply");
        assert_eq!(ex.provider_tag, "stub");
    }

    #[test]
    fn missing_slot_is_rejected() {
        let script = StubScript::from_rules(vec![StubRule::new("greet", "x")]);
        let gw = Gateway::stub(tiny_catalog(), script);
        let err = gw.complete("greet", &slot(&[("name", "Ada")])).unwrap_err();
        assert_eq!(err.code(), "MISSING_SLOT");
    }

    #[test]
    fn identical_slots_give_identical_exchanges_except_timestamp() {
        let script = StubScript::from_rules(vec![StubRule::new("greet", "same")]);
        let gw = Gateway::stub(tiny_catalog(), script);
        let slots = slot(&[("name", "Ada"), ("role", "tester")]);
        let a = gw.complete("greet", &slots).unwrap();
        let b = gw.complete("greet", &slots).unwrap();
        assert_eq!(a.key, b.key);
        assert_eq!(a.response, b.response);
        assert_eq!(a.tokens_in, b.tokens_in);
        assert_ne!(a.timestamp, b.timestamp);
    }

    #[test]
    fn replay_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let rendered = "Hello Ada, you are tester.";
        let key = prompt_key(rendered);
        RecordingFile::append(&path, &key, "recorded answer \u{2713}").unwrap();
        let recording = RecordingFile::load(&path).unwrap();
        let gw = Gateway::replay(tiny_catalog(), recording);
        let ex = gw
            .complete("greet", &slot(&[("name", "Ada"), ("role", "tester")]))
            .unwrap();
        assert_eq!(ex.response, "recorded answer \u{2713}");

        // A slot change invalidates the replay.
        let err = gw
            .complete("greet", &slot(&[("name", "Bob"), ("role", "tester")]))
            .unwrap_err();
        assert_eq!(err.code(), "NO_RECORDING");
    }
}
