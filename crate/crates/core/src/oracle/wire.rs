//! JSON bodies exchanged with the model sidecar.
//!
//! | endpoint          | request             | response              |
//! |-------------------|---------------------|-----------------------|
//! | `POST /v1/generate` | [`GenerateRequest`] | [`GenerateResponse`] |
//! | `POST /v1/embed`    | [`EmbedRequest`]    | [`EmbedResponse`]    |
//! | `POST /v1/judge`    | [`JudgeRequest`]    | [`JudgeResponse`]    |
//! | `POST /v1/tag`      | [`TagRequest`]      | [`TagResponse`]      |
//!
//! The client sends the bare mode name; the server owns the prefix table.

use serde::{Deserialize, Serialize};

use crate::oracle::GenerationMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub mode: GenerationMode,
    pub inputs: Vec<String>,
    pub beam: usize,
    pub num_return: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub text: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub candidates: Vec<WireCandidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirePair {
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub pairs: Vec<WirePair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireJudgment {
    pub p_entail: f64,
    pub p_neutral: f64,
    pub p_contradict: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub judgments: Vec<WireJudgment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagRequest {
    pub texts: Vec<String>,
}

/// One `[token, tag]` array per token, one list per input text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagResponse {
    pub tags: Vec<Vec<(String, String)>>,
}
