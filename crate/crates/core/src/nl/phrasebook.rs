use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use super::text::normalize;

#[derive(Clone, Debug, Deserialize)]
pub struct Cues {
    pub quit: Vec<String>,
    pub completed: Vec<String>,
    pub recommend: Vec<String>,
    pub upgrade: Vec<String>,
    pub yes: Vec<String>,
    pub no: Vec<String>,
    pub order: Vec<String>,
    pub pronoun: Vec<String>,
    pub all: Vec<String>,
    pub runout: Vec<String>,
    pub restore: Vec<String>,
    pub done: Vec<String>,
    pub add: Vec<String>,
    pub edit: Vec<String>,
    pub delete: Vec<String>,
    pub regular: Vec<String>,
    pub large: Vec<String>,
    /// Modifier words per update operation.
    pub ops: BTreeMap<String, Vec<String>>,
    /// Question words per query category.
    pub query: BTreeMap<String, Vec<String>>,
    pub styles: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Templates {
    pub greeting_manager: String,
    pub greeting_customer: String,
    pub error: String,
    pub manager: HashMap<String, String>,
    pub customer: HashMap<String, String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Phrasebook {
    pub numbers: HashMap<String, u32>,
    pub aliases: BTreeMap<String, String>,
    pub manager_aliases: BTreeMap<String, String>,
    pub categories: HashMap<String, String>,
    pub cues: Cues,
    pub templates: Templates,
}

impl Phrasebook {
    pub fn parse(src: &str) -> Result<Phrasebook, toml::de::Error> {
        let mut pb: Phrasebook = toml::from_str(src)?;
        let fold = |m: &mut BTreeMap<String, String>| {
            *m = std::mem::take(m).into_iter().map(|(k, v)| (normalize(&k).join(" "), v)).collect();
        };
        fold(&mut pb.aliases);
        fold(&mut pb.manager_aliases);
        Ok(pb)
    }

    /// The shipped phrasebook.
    pub fn builtin() -> &'static Phrasebook {
        static PB: std::sync::OnceLock<Phrasebook> = std::sync::OnceLock::new();
        PB.get_or_init(|| Phrasebook::parse(crate::assets::PHRASEBOOK).expect("shipped phrasebook is valid"))
    }

    pub fn number(&self, word: &str) -> Option<u32> {
        self.numbers.get(word).copied().or_else(|| word.parse().ok().filter(|n| (1..=99).contains(n)))
    }
}
