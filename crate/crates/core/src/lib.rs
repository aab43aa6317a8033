pub mod assets;
pub mod kb;
pub mod reasoner;
pub mod shared_state;
pub mod syntax;
pub mod term;
pub mod frame;
pub mod order;
pub mod pricing;
pub mod manager_agent;
pub mod nl;
pub mod service_agent;
pub mod orchestrator;
pub mod api;

pub use frame::{CustomerFrame, Frame, ManagerFrame, Op, RecommendKind, Role};
pub use kb::{FoodKind, MenuKb, MutationSet};
pub use orchestrator::{Engine, Round, RoundTiming};
pub use shared_state::{SharedStore, ShortageState, Snapshot, StateDelta};
pub use term::{Fact, Literal, Sym, Term};
