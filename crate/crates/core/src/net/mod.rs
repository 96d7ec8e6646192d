//! Remote endpoints: chat models, web search, shared rate limiting and retries.

mod chat;
mod rate_limit;
mod retry;
mod search;

use thiserror::Error;

pub use chat::{HttpChatModel, ModelEndpoint, TextModel};
pub use rate_limit::RateLimiter;
pub use retry::{Attempt, RetryPolicy};
pub use search::{parse_total_results, CustomSearchClient, SearchEndpoint, SearchEngine, SearchError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("environment variable {0} is not set")]
    Credential(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("decode: {0}")]
    Decode(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: Box<EndpointError> },
}
