//! LLM-generated pairs: prompt construction, completion client, record
//! recovery and quality-control intake.

pub mod client;
pub mod parse;
pub mod prompt;
pub mod qc;

use thiserror::Error;

pub use client::{LlmClient, LlmClientConfig, API_KEY_ENV};
pub use parse::{parse_generation, ParseReject, ParsedGeneration};
pub use prompt::{build_prompt, PromptSpec};
pub use qc::{qc_filter, IntakeReport, QcRule, Rejection, RuleCounts};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited (retry after {retry_after}s)")]
    RateLimited { retry_after: u64 },
    #[error("no records found in generation output ({rejected} malformed lines)")]
    NoRecordsFound { rejected: usize },
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
