use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Attempt, EndpointError, RateLimiter, RetryPolicy};

/// Text-in, text-out model interface used by generation and auditing.
pub trait TextModel: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError>;

    /// Name recorded in provenance metadata.
    fn model_tag(&self) -> &str {
        "unnamed"
    }
}

impl<T: TextModel + ?Sized> TextModel for Arc<T> {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        (**self).complete(prompt)
    }

    fn model_tag(&self) -> &str {
        (**self).model_tag()
    }
}

/// Connection settings for a chat-completions style endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model_name: String,
    /// Environment variable holding the API key; the key itself never lives in config.
    pub auth_env_var: String,
    #[serde(default)]
    pub sampling: BTreeMap<String, Value>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    4
}

impl ModelEndpoint {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            ..RetryPolicy::default()
        }
    }
}

/// OpenAI-compatible `POST {base_url}/chat/completions` client.
pub struct HttpChatModel {
    endpoint: ModelEndpoint,
    api_key: String,
    client: reqwest::blocking::Client,
    limiter: Arc<RateLimiter>,
    retry: RetryPolicy,
}

impl HttpChatModel {
    pub fn new(endpoint: ModelEndpoint, limiter: Arc<RateLimiter>) -> Result<Self, EndpointError> {
        let api_key = std::env::var(&endpoint.auth_env_var)
            .map_err(|_| EndpointError::Credential(endpoint.auth_env_var.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let retry = endpoint.retry_policy();
        Ok(HttpChatModel {
            endpoint,
            api_key,
            client,
            limiter,
            retry,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn request_body(&self, prompt: &str) -> Value {
        let mut body = json!({
            "model": self.endpoint.model_name,
            "messages": [{"role": "user", "content": prompt}],
        });
        let obj = body.as_object_mut().expect("object");
        for (k, v) in &self.endpoint.sampling {
            obj.insert(k.clone(), v.clone());
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt<EndpointError>> {
        self.limiter.acquire();
        let url = format!("{}/chat/completions", self.endpoint.base_url.trim_end_matches('/'));
        let resp = self
            .client
            .post(url)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| Attempt::Retry(EndpointError::Transport(e.to_string())))?;
        let status = resp.status();
        if !status.is_success() {
            let err = EndpointError::Status(status.as_u16());
            return Err(if is_retryable_status(status.as_u16()) {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let value: Value = resp
            .json()
            .map_err(|e| Attempt::Retry(EndpointError::Decode(e.to_string())))?;
        extract_content(&value).map_err(Attempt::Fatal)
    }
}

impl TextModel for HttpChatModel {
    fn model_tag(&self) -> &str {
        &self.endpoint.model_name
    }

    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        let body = self.request_body(prompt);
        self.retry
            .run(|_| self.attempt(&body))
            .map_err(|(last, attempts)| EndpointError::Exhausted {
                attempts,
                last: Box::new(last),
            })
    }
}

pub(crate) fn is_retryable_status(status: u16) -> bool {
    status == 408 || status == 429 || (500..600).contains(&status)
}

fn extract_content(v: &Value) -> Result<String, EndpointError> {
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| EndpointError::Decode("response has no choices[0].message.content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction() {
        let v = json!({"choices": [{"message": {"role": "assistant", "content": "1. Dirndl"}}]});
        assert_eq!(extract_content(&v).unwrap(), "1. Dirndl");
        assert!(extract_content(&json!({"choices": []})).is_err());
    }

    #[test]
    fn missing_credential_is_named() {
        let ep = ModelEndpoint {
            base_url: "http://127.0.0.1:9".into(),
            model_name: "m".into(),
            auth_env_var: "CULTURA_TEST_SURELY_UNSET_KEY".into(),
            sampling: BTreeMap::new(),
            timeout_secs: 1,
            max_retries: 0,
        };
        match HttpChatModel::new(ep, Arc::new(RateLimiter::unlimited())) {
            Err(EndpointError::Credential(var)) => assert_eq!(var, "CULTURA_TEST_SURELY_UNSET_KEY"),
            Err(other) => panic!("unexpected {other}"),
            Ok(_) => panic!("expected credential error"),
        }
    }

    #[test]
    fn retryable_statuses() {
        assert!(is_retryable_status(429));
        assert!(is_retryable_status(503));
        assert!(!is_retryable_status(400));
        assert!(!is_retryable_status(401));
    }
}
