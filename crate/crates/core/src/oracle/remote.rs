use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::wire::*;
use crate::oracle::{Candidate, Embedder, GenerationMode, Generator, Judge, Oracle};
use crate::text::{l2_normalize, PosTag, Tagger, TokenTag};

pub const ORACLE_URL_ENV: &str = "PROOFSMITH_ORACLE_URL";

/// HTTP client for the model sidecar.
///
/// A failed request is retried once after `backoff`; a second failure is
/// reported as [`Error::OracleUnavailable`]. Replies that parse but violate
/// the wire contract are [`Error::Protocol`].
#[derive(Clone, Debug)]
pub struct RemoteOracle {
    base_url: String,
    client: reqwest::blocking::Client,
    retries: u32,
    backoff: Duration,
}

enum Attempt {
    Retry(String),
    Fatal(Error),
}

impl RemoteOracle {
    pub fn new(base_url: &str) -> Result<Self> {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Result<Self> {
        let base_url = base_url.trim_end_matches('/').to_string();
        if !(base_url.starts_with("http://") || base_url.starts_with("https://")) {
            return Err(Error::invalid(format!("oracle url must be http(s): {base_url}")));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::OracleUnavailable(e.to_string()))?;
        Ok(RemoteOracle {
            base_url,
            client,
            retries: 1,
            backoff: Duration::from_millis(250),
        })
    }

    pub fn from_env() -> Result<Self> {
        let url = std::env::var(ORACLE_URL_ENV)
            .map_err(|_| Error::invalid(format!("{ORACLE_URL_ENV} is not set")))?;
        Self::new(&url)
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn attempt<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        url: &str,
        body: &Req,
    ) -> std::result::Result<Resp, Attempt> {
        let resp = self
            .client
            .post(url)
            .json(body)
            .send()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(Attempt::Retry(format!("{url}: HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(Error::Protocol(format!("{url}: HTTP {status}"))));
        }
        let bytes = resp.bytes().map_err(|e| Attempt::Retry(e.to_string()))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Attempt::Fatal(Error::Protocol(format!("{url}: {e}"))))
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let url = format!("{}{}", self.base_url, path);
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.attempt(&url, body) {
                Ok(r) => return Ok(r),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    log::debug!("oracle request failed (attempt {}): {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(Error::OracleUnavailable(last))
    }
}

impl Generator for RemoteOracle {
    fn generator_id(&self) -> String {
        format!("remote:{}", self.base_url)
    }

    fn generate_raw(
        &self,
        mode: GenerationMode,
        inputs: &[&str],
        beam: usize,
        num_return: usize,
    ) -> Result<Vec<Candidate>> {
        let req = GenerateRequest {
            mode,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            beam,
            num_return,
        };
        let resp: GenerateResponse = self.post("/v1/generate", &req)?;
        Ok(resp
            .candidates
            .into_iter()
            .map(|c| Candidate {
                text: c.text,
                score: c.score,
            })
            .collect())
    }
}

impl Embedder for RemoteOracle {
    fn embedder_id(&self) -> String {
        format!("remote:{}", self.base_url)
    }

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let req = EmbedRequest {
            texts: texts.iter().map(|s| s.to_string()).collect(),
        };
        let resp: EmbedResponse = self.post("/v1/embed", &req)?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Protocol(format!(
                "embed returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|mut v| {
                if v.len() != resp.dim {
                    return Err(Error::Protocol(format!(
                        "vector of length {} with dim {}",
                        v.len(),
                        resp.dim
                    )));
                }
                // The server normalizes already; this only absorbs float noise.
                if !l2_normalize(&mut v) {
                    return Err(Error::Protocol("zero embedding vector".into()));
                }
                Ok(v)
            })
            .collect()
    }
}

impl Judge for RemoteOracle {
    fn judge_raw(&self, pairs: &[(&str, &str)]) -> Result<Vec<(f64, f64, f64)>> {
        let req = JudgeRequest {
            pairs: pairs
                .iter()
                .map(|(p, h)| WirePair {
                    premise: p.to_string(),
                    hypothesis: h.to_string(),
                })
                .collect(),
        };
        let resp: JudgeResponse = self.post("/v1/judge", &req)?;
        Ok(resp
            .judgments
            .into_iter()
            .map(|j| (j.p_entail, j.p_neutral, j.p_contradict))
            .collect())
    }
}

impl Tagger for RemoteOracle {
    fn tag(&self, tokens: &[String]) -> Result<Vec<TokenTag>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let req = TagRequest {
            texts: vec![tokens.join(" ")],
        };
        let resp: TagResponse = self.post("/v1/tag", &req)?;
        let tags = resp
            .tags
            .into_iter()
            .next()
            .ok_or_else(|| Error::Protocol("tag returned no lists".into()))?;
        if tags.len() != tokens.len() {
            return Err(Error::Protocol(format!(
                "tagger split {} tokens into {}",
                tokens.len(),
                tags.len()
            )));
        }
        tokens
            .iter()
            .zip(tags)
            .map(|(tok, (_, tag))| {
                let tag = PosTag::parse(&tag)
                    .ok_or_else(|| Error::Protocol(format!("unknown tag `{tag}`")))?;
                Ok(TokenTag {
                    token: tok.clone(),
                    tag,
                })
            })
            .collect()
    }
}

impl Oracle for RemoteOracle {}
