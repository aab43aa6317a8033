//! Natural-language boundary: utterances to frames, response predicates to
//! text, and menu name correction. The deterministic backends need no
//! network; the LLM and embedding adapters sit behind the same traits.

mod correct;
mod generate;
mod llm;
mod phrasebook;
mod rules;
pub mod text;

use crate::frame::{CustomerFrame, Frame, ManagerFrame, Role};
use crate::kb::MenuKb;
use crate::manager_agent::ManagerContext;
use crate::service_agent::QuestionContext;
use crate::term::{Literal, Sym};

pub use correct::{cosine, similarity, EmbeddingClient, NameCorrector, DEFAULT_THRESHOLD};
pub use generate::TemplateGenerator;
pub use llm::{frames_from_reply, ChatClient, LlmGenerator, LlmParser};
pub use phrasebook::{Cues, Phrasebook, Templates};
pub use rules::RulesParser;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NlError {
    /// The remote backend could not be reached or answered garbage at the
    /// transport level. Callers may retry.
    #[error("backend transport failed: {0}")]
    Transport(String),
    #[error("no template for {0}")]
    MissingTemplate(String),
    #[error("nothing to say")]
    Empty,
}

/// Service-side state the parser uses to resolve short answers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CustomerContext {
    pub question: Option<QuestionContext>,
    /// Last food recommended or ordered.
    pub focus: Option<Sym>,
    /// Last topping recommended.
    pub focus_topping: Option<Sym>,
    /// Ordered dishes with their instance counts, in order.
    pub ordered: Vec<(Sym, usize)>,
}

pub struct ParseContext<'a> {
    pub role: Role,
    pub menu: &'a MenuKb,
    pub manager: ManagerContext,
    pub customer: CustomerContext,
}

impl<'a> ParseContext<'a> {
    pub fn new(role: Role, menu: &'a MenuKb) -> Self {
        ParseContext { role, menu, manager: ManagerContext::default(), customer: CustomerContext::default() }
    }
}

pub trait Parser: Send + Sync {
    /// Frames for one utterance. Output is always schema-valid; anything
    /// unparseable becomes `irrelevant`.
    fn parse(&self, utterance: &str, ctx: &ParseContext<'_>) -> Result<Vec<Frame>, NlError>;
}

pub trait Generator: Send + Sync {
    fn generate(&self, role: Role, preds: &[Literal]) -> Result<String, NlError>;
}

/// Replace food names the menu does not know with their closest match.
/// Names without a match are left for the agent to reject.
pub fn correct_frames(frames: Vec<Frame>, corrector: &NameCorrector) -> Vec<Frame> {
    let fix = |s: &Sym| -> Sym {
        if corrector.vocab().contains(s) {
            return s.clone();
        }
        corrector.correct(s).unwrap_or_else(|| s.clone())
    };
    frames
        .into_iter()
        .map(|f| match f {
            Frame::Customer(c) => Frame::Customer(match c {
                CustomerFrame::Order { food, number } => CustomerFrame::Order { food: fix(&food), number },
                CustomerFrame::Specify { combo, dish } => CustomerFrame::Specify { combo, dish: fix(&dish) },
                CustomerFrame::Update { dish, op, option } if &*option != "none" && !op.is_choice() => {
                    CustomerFrame::Update { dish: fix(&dish), op, option: fix(&option) }
                }
                CustomerFrame::Update { dish, op, option } => CustomerFrame::Update { dish: fix(&dish), op, option },
                CustomerFrame::Query { category, food } if &*food != "all" => {
                    CustomerFrame::Query { category, food: fix(&food) }
                }
                other => other,
            }),
            Frame::Manager(m) => Frame::Manager(match m {
                ManagerFrame::Runout(x) => ManagerFrame::Runout(fix(&x)),
                ManagerFrame::Restore(x) => ManagerFrame::Restore(fix(&x)),
                other => other,
            }),
        })
        .collect()
}

/// Vocabulary for name correction: every declared food on the menu.
pub fn vocabulary(menu: &MenuKb) -> Vec<Sym> {
    use crate::kb::FoodKind::*;
    menu.names(&[Dish, Combo, Ingredient, Sauce])
}
