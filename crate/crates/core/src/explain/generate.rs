//! Explanation generation backends.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::prompt::{parse_line, PromptBundle};
use crate::http::{HttpSettings, JsonClient};
use crate::retrieval::HopRole;

/// Sentence emitted by the stub when the evidence names no attribute.
pub const GENERIC_EXPLANATION: &str = "Recommended because it resembles what you have enjoyed before.";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            max_tokens: 128,
            temperature: 0.0,
            seed: 0,
        }
    }
}

/// Body sent to a completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl GenerationRequest {
    pub fn new(bundle: &PromptBundle, params: &DecodingParams) -> Self {
        GenerationRequest {
            prompt: bundle.text(),
            max_tokens: params.max_tokens,
            temperature: params.temperature,
            seed: params.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub backend: String,
    pub latency_ms: u64,
}

pub trait Generator: Send + Sync {
    fn name(&self) -> &'static str;

    fn generate(&self, bundle: &PromptBundle, params: &DecodingParams) -> Result<GenerationResponse>;
}

/// Deterministic generator that names exactly the target attributes of the
/// EXPLICIT and IMPLICIT evidence lines.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubGenerator;

impl StubGenerator {
    /// Attribute names the stub will mention, in evidence order, deduplicated.
    pub fn mentioned_attributes(bundle: &PromptBundle) -> Result<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        for line in &bundle.evidence {
            let parsed = parse_line(line)?;
            if parsed.role == HopRole::Relational {
                continue;
            }
            if let Some(attr) = parsed.target_attribute() {
                if !out.iter().any(|a| a == attr) {
                    out.push(attr.to_owned());
                }
            }
        }
        Ok(out)
    }

    pub fn render(attributes: &[String]) -> String {
        match attributes {
            [] => GENERIC_EXPLANATION.to_owned(),
            [one] => format!("Recommended for its {one}."),
            [init @ .., last] => format!("Recommended for its {} and {last}.", init.join(", ")),
        }
    }
}

impl Generator for StubGenerator {
    fn name(&self) -> &'static str {
        "stub"
    }

    fn generate(&self, bundle: &PromptBundle, _params: &DecodingParams) -> Result<GenerationResponse> {
        Ok(GenerationResponse {
            text: Self::render(&Self::mentioned_attributes(bundle)?),
            backend: self.name().to_owned(),
            latency_ms: 0,
        })
    }
}

#[derive(Debug, Deserialize)]
struct CompletionReply {
    text: String,
}

/// Client for a `{"prompt", "max_tokens", "temperature", "seed"} -> {"text"}` endpoint.
#[derive(Debug)]
pub struct HttpGenerator {
    client: JsonClient,
}

impl HttpGenerator {
    pub fn new(settings: HttpSettings) -> Result<Self> {
        Ok(HttpGenerator {
            client: JsonClient::new(settings)?,
        })
    }

    pub fn with_timeout(url: impl Into<String>, timeout: Duration) -> Result<Self> {
        let mut s = HttpSettings::new(url);
        s.timeout = timeout;
        Self::new(s)
    }
}

impl Generator for HttpGenerator {
    fn name(&self) -> &'static str {
        "http"
    }

    fn generate(&self, bundle: &PromptBundle, params: &DecodingParams) -> Result<GenerationResponse> {
        let started = Instant::now();
        let reply: CompletionReply = self.client.post(&GenerationRequest::new(bundle, params))?;
        let text = reply.text.trim().to_owned();
        if text.is_empty() {
            return Err(Error::Backend(format!("{} returned an empty completion", self.client.url())));
        }
        Ok(GenerationResponse {
            text,
            backend: self.name().to_owned(),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::prompt::assemble_prompt;

    fn bundle(lines: &[&str]) -> PromptBundle {
        assemble_prompt("i", "h", "t", lines.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn stub_names_explicit_and_implicit_attributes() {
        let b = bundle(&[
            "[EXPLICIT] (t) -[has_theme]-> (plot)",
            "[RELATIONAL] (h) -[has_theme]-> (sisterhood) <-[has_theme]- (t)",
            "[IMPLICIT] (h) -[a]-> (x) -[b]-> (humor) <-[has_theme]- (t)",
            "[EXPLICIT] (t) -[has_theme]-> (plot)",
        ]);
        let r = StubGenerator.generate(&b, &DecodingParams::default()).unwrap();
        assert_eq!(r.text, "Recommended for its plot and humor.");
        assert_eq!(r.backend, "stub");
    }

    #[test]
    fn stub_without_evidence() {
        let r = StubGenerator.generate(&bundle(&[]), &DecodingParams::default()).unwrap();
        assert_eq!(r.text, GENERIC_EXPLANATION);
    }

    #[test]
    fn stub_is_pure() {
        let b = bundle(&["[EXPLICIT] (t) -[r]-> (a)", "[EXPLICIT] (t) -[r]-> (b)", "[EXPLICIT] (t) -[r]-> (c)"]);
        let a = StubGenerator.generate(&b, &DecodingParams::default()).unwrap();
        assert_eq!(a, StubGenerator.generate(&b.clone(), &DecodingParams::default()).unwrap());
        assert_eq!(a.text, "Recommended for its a, b and c.");
    }
}
