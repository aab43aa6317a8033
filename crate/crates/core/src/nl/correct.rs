use std::sync::Mutex;

use serde::Deserialize;

use super::text::fold;
use super::NlError;
use crate::term::Sym;

pub const DEFAULT_THRESHOLD: f64 = 0.6;

/// `1 - levenshtein / longer length` on folded names.
pub fn similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (fold(a), fold(b));
    let len = a.chars().count().max(b.chars().count());
    if len == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(&a, &b) as f64 / len as f64
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Embedding endpoint speaking `{model, input: [..]}` and answering
/// `{data: [{embedding: [..]}]}`.
#[derive(Clone, Debug)]
pub struct EmbeddingClient {
    pub url: String,
    pub key: Option<String>,
    pub model: String,
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedRow>,
}

#[derive(Deserialize)]
struct EmbedRow {
    embedding: Vec<f32>,
}

impl EmbeddingClient {
    pub fn from_env() -> Option<EmbeddingClient> {
        let url = std::env::var("DUOTALK_EMBED_URL").ok()?;
        Some(EmbeddingClient {
            url,
            key: std::env::var("DUOTALK_EMBED_KEY").ok(),
            model: std::env::var("DUOTALK_EMBED_MODEL").unwrap_or_else(|_| "text-embedding-3-small".into()),
        })
    }

    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, NlError> {
        let body = serde_json::json!({ "model": self.model, "input": texts });
        let mut req = ureq::post(&self.url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let resp: EmbedResponse = req
            .send_json(&body)
            .map_err(|e| NlError::Transport(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| NlError::Transport(e.to_string()))?;
        if resp.data.len() != texts.len() {
            return Err(NlError::Transport(format!("expected {} embeddings, got {}", texts.len(), resp.data.len())));
        }
        Ok(resp.data.into_iter().map(|r| r.embedding).collect())
    }
}

/// Maps a possibly misspelled name onto the menu vocabulary, or nothing.
#[derive(Debug)]
pub struct NameCorrector {
    vocab: Vec<Sym>,
    threshold: f64,
    embed: Option<EmbeddingClient>,
    cache: Mutex<Option<Vec<Vec<f32>>>>,
}

impl NameCorrector {
    pub fn new(vocab: Vec<Sym>) -> Self {
        Self::with_threshold(vocab, DEFAULT_THRESHOLD)
    }

    pub fn with_threshold(mut vocab: Vec<Sym>, threshold: f64) -> Self {
        vocab.sort();
        vocab.dedup();
        NameCorrector { vocab, threshold, embed: None, cache: Mutex::new(None) }
    }

    pub fn with_embeddings(mut self, client: EmbeddingClient) -> Self {
        self.embed = Some(client);
        self
    }

    pub fn vocab(&self) -> &[Sym] {
        &self.vocab
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn correct(&self, raw: &str) -> Option<Sym> {
        if let Some(exact) = self.vocab.iter().find(|v| &***v == raw) {
            return Some(exact.clone());
        }
        let folded = fold(raw);
        if let Some(v) = self.vocab.iter().find(|v| fold(v) == folded) {
            return Some(v.clone());
        }
        if let Some(client) = &self.embed {
            match self.by_embedding(client, raw) {
                Ok(found) => return found,
                Err(e) => log::warn!("embedding lookup failed, using edit distance: {e}"),
            }
        }
        self.best(|v| similarity(raw, v))
    }

    /// Highest score at or above the threshold; ties go to the
    /// lexicographically first name, which is the vocabulary order.
    fn best(&self, score: impl Fn(&str) -> f64) -> Option<Sym> {
        let mut best: Option<(f64, &Sym)> = None;
        for v in &self.vocab {
            let s = score(v);
            if s >= self.threshold && best.is_none_or(|(b, _)| s > b) {
                best = Some((s, v));
            }
        }
        best.map(|(_, v)| v.clone())
    }

    fn by_embedding(&self, client: &EmbeddingClient, raw: &str) -> Result<Option<Sym>, NlError> {
        let mut cache = self.cache.lock().expect("embedding cache poisoned");
        if cache.is_none() {
            let names: Vec<&str> = self.vocab.iter().map(|v| &**v).collect();
            *cache = Some(client.embed(&names)?);
        }
        let vectors = cache.as_ref().expect("filled above");
        let q = client.embed(&[raw])?.pop().unwrap_or_default();
        let mut best: Option<(f64, &Sym)> = None;
        for (v, e) in self.vocab.iter().zip(vectors) {
            let s = cosine(&q, e);
            if s >= self.threshold && best.is_none_or(|(b, _)| s > b) {
                best = Some((s, v));
            }
        }
        Ok(best.map(|(_, v)| v.clone()))
    }
}
