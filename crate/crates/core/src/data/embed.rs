//! Client for a remote embedding service.
//!
//! Wire protocol: `POST {base_url}/embed` with `{"model": ..., "texts": [...]}`,
//! answered by `{"embeddings": [[...], ...]}` in request order. A bearer token
//! is read from the configured environment variable when it is set and non-empty.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{DataError, DetectionRecord};
use crate::sphere::{self, UnitEmbedding};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingClientConfig {
    pub base_url: String,
    pub model_name: String,
    /// Records per request.
    pub batch_size: usize,
    pub timeout_secs: f64,
    pub auth_env_var: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_retries() -> u32 {
    2
}

impl Default for EmbeddingClientConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8080".into(),
            model_name: "all-MiniLM-L6-v2".into(),
            batch_size: 32,
            timeout_secs: 30.0,
            auth_env_var: "GEOGROUND_EMBED_TOKEN".into(),
            max_retries: default_retries(),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

pub struct EmbeddingClient {
    config: EmbeddingClientConfig,
    http: reqwest::blocking::Client,
    token: Option<String>,
    requests: AtomicUsize,
}

impl EmbeddingClient {
    pub fn new(config: EmbeddingClientConfig) -> Result<Self, DataError> {
        if config.batch_size == 0 {
            return Err(DataError::Core(crate::Error::InvalidInput("batch_size must be >= 1".into())));
        }
        if !config.timeout_secs.is_finite() || config.timeout_secs <= 0.0 {
            return Err(DataError::Core(crate::Error::InvalidInput("timeout must be finite and > 0".into())));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| DataError::Transport(e.to_string()))?;
        let token = std::env::var(&config.auth_env_var).ok().filter(|t| !t.is_empty());
        Ok(Self {
            config,
            http,
            token,
            requests: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &EmbeddingClientConfig {
        &self.config
    }

    /// Number of HTTP requests issued so far, retries included.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn post_once(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, DataError> {
        let url = format!("{}/embed", self.config.base_url.trim_end_matches('/'));
        let mut req = self.http.post(url).json(&EmbedRequest {
            model: &self.config.model_name,
            texts,
        });
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        self.requests.fetch_add(1, Ordering::Relaxed);
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                DataError::Timeout(e.to_string())
            } else {
                DataError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(DataError::Http {
                status: status.as_u16(),
                body: body.chars().take(200).collect(),
            });
        }
        let parsed: EmbedResponse = resp.json().map_err(|e| DataError::Protocol(e.to_string()))?;
        if parsed.embeddings.len() != texts.len() {
            return Err(DataError::Protocol(format!(
                "sent {} texts, received {} embeddings",
                texts.len(),
                parsed.embeddings.len()
            )));
        }
        Ok(parsed.embeddings)
    }

    /// Embeds `texts`, retrying on timeouts, connection failures and 5xx responses.
    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, DataError> {
        let mut attempt = 0;
        loop {
            match self.post_once(texts) {
                Err(e) if attempt < self.config.max_retries && is_retryable(&e) => {
                    attempt += 1;
                    log::warn!("embedding request failed ({e}); retry {attempt}/{}", self.config.max_retries);
                    thread::sleep(Duration::from_millis(100 << attempt));
                }
                other => return other,
            }
        }
    }
}

fn is_retryable(e: &DataError) -> bool {
    match e {
        DataError::Http { status, .. } => *status >= 500,
        DataError::Timeout(_) | DataError::Transport(_) => true,
        _ => false,
    }
}

/// Embedding run that stopped early. `records` holds every input record, the
/// first `completed` of those needing work already embedded.
#[derive(Debug)]
pub struct EmbedFailure {
    pub completed: usize,
    pub records: Vec<DetectionRecord>,
    pub error: DataError,
}

impl std::fmt::Display for EmbedFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after embedding {} record(s))", self.error, self.completed)
    }
}

impl std::error::Error for EmbedFailure {}

#[derive(Clone, Copy)]
enum Slot {
    Question,
    Context,
    Response,
}

fn missing_slots(rec: &DetectionRecord) -> Vec<Slot> {
    let mut slots = Vec::new();
    if rec.q_emb.is_none() {
        slots.push(Slot::Question);
    }
    if rec.context.is_some() && rec.c_emb.is_none() {
        slots.push(Slot::Context);
    }
    if rec.r_emb.is_none() {
        slots.push(Slot::Response);
    }
    slots
}

fn embed_batch(
    client: &EmbeddingClient,
    records: &mut [DetectionRecord],
    batch: &[usize],
    dim: &mut Option<usize>,
) -> Result<(), DataError> {
    let mut texts = Vec::new();
    let mut targets = Vec::new();
    for &i in batch {
        for slot in missing_slots(&records[i]) {
            let rec = &records[i];
            texts.push(match slot {
                Slot::Question => rec.question.clone(),
                Slot::Context => rec.context.clone().unwrap_or_default(),
                Slot::Response => rec.response.clone(),
            });
            targets.push((i, slot));
        }
    }
    let vectors = client.embed_texts(&texts)?;
    let mut unit = Vec::with_capacity(vectors.len());
    for v in vectors {
        let expected = *dim.get_or_insert(v.len());
        if v.len() != expected {
            return Err(DataError::EmbeddingDimension {
                expected,
                found: v.len(),
            });
        }
        unit.push(sphere::normalize(&v)?);
    }
    for ((i, slot), e) in targets.into_iter().zip(unit) {
        let rec = &mut records[i];
        let field: &mut Option<UnitEmbedding> = match slot {
            Slot::Question => &mut rec.q_emb,
            Slot::Context => &mut rec.c_emb,
            Slot::Response => &mut rec.r_emb,
        };
        *field = Some(e);
    }
    Ok(())
}

/// Fills in every missing embedding, `batch_size` records per request.
/// Records that are already fully embedded are left untouched, and when
/// nothing is missing no request is sent.
pub fn embed_missing(
    mut records: Vec<DetectionRecord>,
    client: &EmbeddingClient,
) -> Result<Vec<DetectionRecord>, Box<EmbedFailure>> {
    let pending: Vec<usize> = (0..records.len())
        .filter(|&i| !records[i].is_fully_embedded())
        .collect();
    let mut dim = records.iter().find_map(|r| r.dim());
    let mut completed = 0;
    for batch in pending.chunks(client.config.batch_size) {
        if let Err(error) = embed_batch(client, &mut records, batch, &mut dim) {
            return Err(Box::new(EmbedFailure {
                completed,
                records,
                error,
            }));
        }
        completed += batch.len();
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    struct Seen {
        auth: Option<String>,
        texts: Vec<String>,
    }

    /// Serves HTTP on a local port; `reply(n, texts)` yields (status, body) for request `n`.
    fn serve<F>(reply: F) -> (String, Arc<Mutex<Vec<Seen>>>)
    where
        F: Fn(usize, &[String]) -> (u16, String) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        thread::spawn(move || {
            for (n, stream) in listener.incoming().enumerate() {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let (mut len, mut auth) = (0, None);
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = Some(line["authorization:".len()..].trim().to_string());
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let texts: Vec<String> = serde_json::from_value(req["texts"].clone()).unwrap();
                let (status, out) = reply(n, &texts);
                log.lock().unwrap().push(Seen { auth, texts });
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{out}",
                    out.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
        });
        (url, seen)
    }

    fn vectors_for(texts: &[String], dim: usize) -> String {
        let rows: Vec<Vec<f64>> = texts
            .iter()
            .map(|t| (0..dim).map(|j| (t.len() + j + 1) as f64).collect())
            .collect();
        serde_json::json!({ "embeddings": rows }).to_string()
    }

    fn records(n: usize) -> Vec<DetectionRecord> {
        (0..n)
            .map(|i| {
                let mut r = DetectionRecord::new(format!("r{i}"), Label::Grounded);
                r.question = format!("question {i}");
                r.response = format!("answer {i}");
                r
            })
            .collect()
    }

    fn client(url: String, batch_size: usize, auth_env_var: &str) -> EmbeddingClient {
        EmbeddingClient::new(EmbeddingClientConfig {
            base_url: url,
            batch_size,
            timeout_secs: 5.0,
            auth_env_var: auth_env_var.into(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn batches_by_record_and_is_idempotent() {
        let (url, seen) = serve(|_, t| (200, vectors_for(t, 4)));
        let c = client(url, 4, "GEOGROUND_TEST_UNSET_TOKEN");
        let out = embed_missing(records(10), &c).unwrap();
        assert_eq!(c.requests_sent(), 3);
        assert_eq!(seen.lock().unwrap()[0].texts.len(), 8);
        assert!(out.iter().all(|r| r.is_fully_embedded() && r.dim() == Some(4)));
        assert!(seen.lock().unwrap().iter().all(|s| s.auth.is_none()));

        let again = embed_missing(out.clone(), &c).unwrap();
        assert_eq!(c.requests_sent(), 3);
        assert_eq!(again, out);
    }

    #[test]
    fn sends_bearer_token() {
        std::env::set_var("GEOGROUND_TEST_TOKEN_A", "s3cret");
        let (url, seen) = serve(|_, t| (200, vectors_for(t, 3)));
        let c = client(url, 8, "GEOGROUND_TEST_TOKEN_A");
        embed_missing(records(2), &c).unwrap();
        assert_eq!(seen.lock().unwrap()[0].auth.as_deref(), Some("Bearer s3cret"));
    }

    #[test]
    fn retries_server_errors() {
        let (url, _) = serve(|n, t| if n == 0 { (503, "busy".into()) } else { (200, vectors_for(t, 3)) });
        let c = client(url, 8, "GEOGROUND_TEST_UNSET_TOKEN");
        assert!(embed_missing(records(3), &c).is_ok());
        assert_eq!(c.requests_sent(), 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, _) = serve(|_, _| (400, "bad request".into()));
        let c = client(url, 8, "GEOGROUND_TEST_UNSET_TOKEN");
        let err = embed_missing(records(3), &c).unwrap_err();
        assert!(matches!(err.error, DataError::Http { status: 400, .. }));
        assert_eq!(err.completed, 0);
        assert_eq!(c.requests_sent(), 1);
    }

    #[test]
    fn dimension_change_is_an_error() {
        let (url, _) = serve(|n, t| (200, vectors_for(t, if n == 0 { 3 } else { 5 })));
        let c = client(url, 1, "GEOGROUND_TEST_UNSET_TOKEN");
        let err = embed_missing(records(2), &c).unwrap_err();
        assert_eq!(err.completed, 1);
        assert!(matches!(err.error, DataError::EmbeddingDimension { expected: 3, found: 5 }));
        assert!(err.records[0].is_fully_embedded());
        assert!(!err.records[1].is_fully_embedded());
    }

    #[test]
    fn context_is_embedded_when_present() {
        let (url, seen) = serve(|_, t| (200, vectors_for(t, 3)));
        let c = client(url, 8, "GEOGROUND_TEST_UNSET_TOKEN");
        let mut recs = records(1);
        recs[0].context = Some("some context".into());
        let out = embed_missing(recs, &c).unwrap();
        assert!(out[0].c_emb.is_some());
        assert_eq!(seen.lock().unwrap()[0].texts, ["question 0", "some context", "answer 0"]);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = EmbeddingClientConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(EmbeddingClient::new(cfg).is_err());
    }
}
