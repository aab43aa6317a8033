use crate::term::Sym;

/// Case-folded words. Apostrophes vanish ("that's" becomes "thats"), a
/// dot survives only inside a number, other punctuation splits words.
pub fn normalize(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        let digit_at = |j: Option<usize>| j.and_then(|j| chars.get(j)).is_some_and(|c| c.is_ascii_digit());
        match c {
            '\'' | '\u{2019}' => {}
            '.' if digit_at(i.checked_sub(1)) && digit_at(Some(i + 1)) => out.push('.'),
            c if c.is_alphanumeric() => out.extend(c.to_lowercase()),
            _ => out.push(' '),
        }
    }
    out.split_whitespace().map(str::to_string).collect()
}

/// Folded form of a name, for comparisons.
pub fn fold(s: &str) -> String {
    normalize(s).join(" ")
}

fn word_matches(word: &str, want: &str, plural: bool) -> bool {
    word == want
        || plural && (word.strip_suffix('s') == Some(want) || word.strip_suffix("es") == Some(want))
}

/// Whether `phrase` occurs at `at`. The last word may carry a plural ending
/// when `plural` is set.
pub fn matches_at(tokens: &[String], at: usize, phrase: &[String], plural: bool) -> bool {
    if phrase.is_empty() || at + phrase.len() > tokens.len() {
        return false;
    }
    let last = phrase.len() - 1;
    phrase.iter().enumerate().all(|(i, w)| word_matches(&tokens[at + i], w, plural && i == last))
}

/// Start positions of every occurrence of a cue phrase.
pub fn find(tokens: &[String], phrase: &str) -> Vec<usize> {
    let p = normalize(phrase);
    (0..tokens.len()).filter(|&i| matches_at(tokens, i, &p, false)).collect()
}

pub fn has_any(tokens: &[String], phrases: &[String]) -> bool {
    phrases.iter().any(|p| !find(tokens, p).is_empty())
}

/// Positions of all cue occurrences, with the cue's word length.
pub fn cue_spans(tokens: &[String], phrases: &[String]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> =
        phrases.iter().flat_map(|p| {
            let n = normalize(p).len();
            find(tokens, p).into_iter().map(move |i| (i, n))
        }).collect();
    out.sort();
    out
}

/// A vocabulary name found in an utterance, covering `start..end`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub name: Sym,
}

/// Lexicon of name phrases, longest first.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: Vec<(Vec<String>, Sym)>,
}

impl Lexicon {
    pub fn new(names: impl IntoIterator<Item = Sym>, aliases: &[(&str, &str)]) -> Self {
        let mut entries: Vec<(Vec<String>, Sym)> = names.into_iter().map(|n| (normalize(&n), n)).collect();
        for (alias, target) in aliases {
            if let Some((_, name)) = entries.iter().find(|(_, n)| &**n == *target) {
                let name = name.clone();
                entries.push((normalize(alias), name));
            }
        }
        entries.retain(|(w, _)| !w.is_empty());
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Lexicon { entries }
    }

    /// Greedy longest-match scan, left to right.
    pub fn scan(&self, tokens: &[String]) -> Vec<Mention> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.entries.iter().find(|(p, _)| matches_at(tokens, i, p, true)) {
                Some((p, name)) => {
                    out.push(Mention { start: i, end: i + p.len(), name: name.clone() });
                    i += p.len();
                }
                None => i += 1,
            }
        }
        out
    }
}

/// First number in the text, as a decimal string ("$2.49" gives "2.49").
pub fn first_number(tokens: &[String]) -> Option<&str> {
    tokens.iter().map(String::as_str).find(|t| t.parse::<f64>().is_ok())
}

/// Join names for prose: "a", "a and b", "a, b and c".
pub fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}
