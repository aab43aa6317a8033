//! Built-in fixture menu, rule files and phrasebook.

use std::sync::{Arc, OnceLock};

use crate::kb::MenuKb;
use crate::reasoner::RuleSet;

pub const MENU: &str = include_str!("../assets/menu.lp");
pub const SHARED_RULES: &str = include_str!("../assets/shared_rules.lp");
pub const UPDATE_RULES: &str = include_str!("../assets/update_rules.lp");
pub const PHRASEBOOK: &str = include_str!("../assets/phrasebook.toml");
pub const MANAGER_PARSE_PROMPT: &str = include_str!("../assets/prompts/manager_parse.v1.txt");
pub const CUSTOMER_PARSE_PROMPT: &str = include_str!("../assets/prompts/customer_parse.v1.txt");
pub const GENERATE_PROMPT: &str = include_str!("../assets/prompts/generate.v1.txt");

/// The fixture menu, parsed once.
pub fn menu() -> MenuKb {
    static KB: OnceLock<MenuKb> = OnceLock::new();
    KB.get_or_init(|| MenuKb::parse(MENU).expect("fixture menu is valid")).clone()
}

/// The collaborative rule set: availability plus state-update rules.
pub fn rules() -> Arc<RuleSet> {
    static RULES: OnceLock<Arc<RuleSet>> = OnceLock::new();
    RULES
        .get_or_init(|| {
            Arc::new(RuleSet::from_sources(&[SHARED_RULES, UPDATE_RULES]).expect("shipped rules are valid"))
        })
        .clone()
}
