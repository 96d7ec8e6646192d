use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::chat::is_retryable_status;
use super::{Attempt, RateLimiter, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("search unavailable: {0}")]
    Unavailable(String),
    #[error("search quota exhausted")]
    QuotaExhausted,
    #[error("environment variable {0} is not set")]
    Credential(String),
}

/// Anything that reports an estimated result count for a query.
pub trait SearchEngine: Send + Sync {
    fn total_results(&self, query: &str) -> Result<u64, SearchError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchEndpoint {
    #[serde(default = "default_base")]
    pub base_url: String,
    pub auth_env_var: String,
    /// Environment variable holding the programmable search engine id (cx).
    pub engine_id_env_var: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_base() -> String {
    "https://www.googleapis.com/customsearch/v1".into()
}

fn default_timeout() -> u64 {
    30
}

fn default_retries() -> u32 {
    3
}

/// Programmable Search JSON API client.
pub struct CustomSearchClient {
    endpoint: SearchEndpoint,
    key: String,
    engine_id: String,
    client: reqwest::blocking::Client,
    limiter: Arc<RateLimiter>,
    retry: RetryPolicy,
}

impl CustomSearchClient {
    pub fn new(endpoint: SearchEndpoint, limiter: Arc<RateLimiter>) -> Result<Self, SearchError> {
        let key = std::env::var(&endpoint.auth_env_var).map_err(|_| SearchError::Credential(endpoint.auth_env_var.clone()))?;
        let engine_id = std::env::var(&endpoint.engine_id_env_var)
            .map_err(|_| SearchError::Credential(endpoint.engine_id_env_var.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()
            .map_err(|e| SearchError::Unavailable(e.to_string()))?;
        let retry = RetryPolicy {
            max_retries: endpoint.max_retries,
            ..RetryPolicy::default()
        };
        Ok(CustomSearchClient {
            endpoint,
            key,
            engine_id,
            client,
            limiter,
            retry,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn attempt(&self, query: &str) -> Result<u64, Attempt<SearchError>> {
        self.limiter.acquire();
        let resp = self
            .client
            .get(&self.endpoint.base_url)
            .query(&[("key", self.key.as_str()), ("cx", self.engine_id.as_str()), ("q", query), ("num", "1")])
            .send()
            .map_err(|e| Attempt::Retry(SearchError::Unavailable(e.to_string())))?;
        let status = resp.status().as_u16();
        let body: Value = resp.json().unwrap_or(Value::Null);
        if status == 429 || (status == 403 && is_quota_body(&body)) {
            return Err(Attempt::Fatal(SearchError::QuotaExhausted));
        }
        if !(200..300).contains(&status) {
            let err = SearchError::Unavailable(format!("HTTP {status}"));
            return Err(if is_retryable_status(status) { Attempt::Retry(err) } else { Attempt::Fatal(err) });
        }
        parse_total_results(&body).map_err(Attempt::Fatal)
    }
}

impl SearchEngine for CustomSearchClient {
    fn total_results(&self, query: &str) -> Result<u64, SearchError> {
        self.retry.run(|_| self.attempt(query)).map_err(|(e, _)| e)
    }
}

fn is_quota_body(body: &Value) -> bool {
    let text = body.to_string();
    text.contains("dailyLimitExceeded") || text.contains("rateLimitExceeded") || text.contains("quotaExceeded")
}

/// `searchInformation.totalResults` is a decimal string; absent means zero hits.
pub fn parse_total_results(body: &Value) -> Result<u64, SearchError> {
    match body.pointer("/searchInformation/totalResults") {
        None => Ok(0),
        Some(Value::String(s)) => s
            .parse()
            .map_err(|_| SearchError::Unavailable(format!("bad totalResults {s:?}"))),
        Some(Value::Number(n)) => n
            .as_u64()
            .ok_or_else(|| SearchError::Unavailable(format!("bad totalResults {n}"))),
        Some(other) => Err(SearchError::Unavailable(format!("bad totalResults {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn total_results_parsing() {
        assert_eq!(parse_total_results(&json!({"searchInformation": {"totalResults": "12400"}})).unwrap(), 12400);
        assert_eq!(parse_total_results(&json!({"searchInformation": {"totalResults": "0"}})).unwrap(), 0);
        assert_eq!(parse_total_results(&json!({"kind": "customsearch#search"})).unwrap(), 0);
        assert!(parse_total_results(&json!({"searchInformation": {"totalResults": "lots"}})).is_err());
    }

    #[test]
    fn quota_detection() {
        assert!(is_quota_body(&json!({"error": {"errors": [{"reason": "dailyLimitExceeded"}]}})));
        assert!(!is_quota_body(&json!({"error": {"errors": [{"reason": "keyInvalid"}]}})));
    }
}
