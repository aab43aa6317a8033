use std::time::Duration;

use serde::Deserialize;

use super::generate::TemplateGenerator;
use super::{correct_frames, vocabulary, EmbeddingClient, Generator, NameCorrector, NlError, ParseContext, Parser};
use crate::assets;
use crate::frame::{render_block, Frame, Role};
use crate::syntax::parse_literals;
use crate::term::Literal;

/// Chat-completion endpoint: POST `{model, messages, temperature}`, reply
/// text at `choices[0].message.content`.
#[derive(Clone, Debug)]
pub struct ChatClient {
    pub url: String,
    pub key: Option<String>,
    pub model: String,
    pub timeout: Duration,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl ChatClient {
    pub fn new(url: &str, model: &str) -> Self {
        ChatClient { url: url.to_string(), key: None, model: model.to_string(), timeout: Duration::from_secs(30) }
    }

    /// Reads `DUOTALK_LLM_URL`, `DUOTALK_LLM_KEY` and `DUOTALK_LLM_MODEL`.
    pub fn from_env() -> Option<ChatClient> {
        let url = std::env::var("DUOTALK_LLM_URL").ok()?;
        let model = std::env::var("DUOTALK_LLM_MODEL").unwrap_or_else(|_| "gpt-4o-mini".into());
        let mut c = ChatClient::new(&url, &model);
        c.key = std::env::var("DUOTALK_LLM_KEY").ok();
        Some(c)
    }

    pub fn complete(&self, system: &str, user: &str) -> Result<String, NlError> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let body = serde_json::json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                { "role": "system", "content": system },
                { "role": "user", "content": user },
            ],
        });
        let mut req = agent.post(&self.url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let resp: ChatResponse = req
            .send_json(&body)
            .map_err(|e| NlError::Transport(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| NlError::Transport(e.to_string()))?;
        resp.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| NlError::Transport("reply has no choices".into()))
    }
}

/// Strip a Markdown code fence if the model wrapped its answer in one.
fn unfence(s: &str) -> &str {
    let t = s.trim();
    match t.strip_prefix("```") {
        Some(rest) => {
            let body = rest.split_once('\n').map_or(rest, |(_, b)| b);
            body.trim_end().strip_suffix("```").unwrap_or(body).trim()
        }
        None => t,
    }
}

/// Frames from model output; anything outside the schema collapses to
/// `irrelevant`.
pub fn frames_from_reply(role: Role, reply: &str) -> Vec<Frame> {
    let lits = match parse_literals(unfence(reply)) {
        Ok(l) if !l.is_empty() => l,
        _ => return vec![Frame::irrelevant(role)],
    };
    let frames: Option<Vec<Frame>> = lits.iter().map(|l| Frame::from_literal(role, l)).collect();
    frames.unwrap_or_else(|| vec![Frame::irrelevant(role)])
}

pub struct LlmParser {
    client: ChatClient,
    embed: Option<EmbeddingClient>,
}

impl LlmParser {
    pub fn new(client: ChatClient) -> Self {
        LlmParser { client, embed: None }
    }

    /// Correct food names by embedding similarity, falling back to edit
    /// distance when the endpoint fails.
    pub fn with_embeddings(mut self, client: EmbeddingClient) -> Self {
        self.embed = Some(client);
        self
    }

    fn context_lines(ctx: &ParseContext<'_>) -> String {
        let mut lines = Vec::new();
        match ctx.role {
            Role::Manager => {
                if let Some(f) = &ctx.manager.food {
                    lines.push(format!("food being added: {f}"));
                }
                if let Some(a) = &ctx.manager.asking {
                    lines.push(format!("bot asked for: {a}"));
                }
            }
            Role::Customer => {
                let c = &ctx.customer;
                if let Some(q) = &c.question {
                    let combo = q.combo.as_deref().unwrap_or("none");
                    lines.push(format!("bot asked: {} about {} (combo {combo})", q.topic, q.subject));
                }
                if let Some(f) = &c.focus {
                    lines.push(format!("last food mentioned: {f}"));
                }
                if let Some(t) = &c.focus_topping {
                    lines.push(format!("last topping recommended: {t}"));
                }
                if !c.ordered.is_empty() {
                    let o: Vec<String> = c.ordered.iter().map(|(d, n)| format!("{n} x {d}")).collect();
                    lines.push(format!("ordered so far: {}", o.join(", ")));
                }
            }
        }
        lines.join("\n")
    }
}

impl Parser for LlmParser {
    fn parse(&self, utterance: &str, ctx: &ParseContext<'_>) -> Result<Vec<Frame>, NlError> {
        let prompt = match ctx.role {
            Role::Manager => assets::MANAGER_PARSE_PROMPT,
            Role::Customer => assets::CUSTOMER_PARSE_PROMPT,
        };
        let user = format!("{}\nutterance: {utterance}", Self::context_lines(ctx));
        let reply = self.client.complete(prompt, user.trim_start())?;
        let frames = frames_from_reply(ctx.role, &reply);
        let mut corrector = NameCorrector::new(vocabulary(ctx.menu));
        if let Some(e) = &self.embed {
            corrector = corrector.with_embeddings(e.clone());
        }
        Ok(correct_frames(frames, &corrector))
    }
}

/// Paraphrases the template text; the predicates travel along so the model
/// can keep every fact.
pub struct LlmGenerator {
    client: ChatClient,
    templates: TemplateGenerator,
}

impl LlmGenerator {
    pub fn new(client: ChatClient) -> Self {
        LlmGenerator { client, templates: TemplateGenerator::default() }
    }
}

impl Generator for LlmGenerator {
    fn generate(&self, role: Role, preds: &[Literal]) -> Result<String, NlError> {
        let draft = self.templates.generate(role, preds)?;
        let user = format!("speaker: {role} bot\npredicates: {}\ndraft: {draft}", render_block(preds));
        let text = self.client.complete(assets::GENERATE_PROMPT, &user)?;
        let text = text.trim();
        Ok(if text.is_empty() { draft } else { text.to_string() })
    }
}
