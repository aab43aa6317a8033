//! Round-latency harness: manager shortage rounds and service rounds
//! carrying a fixed number of requirement predicates, over a menu padded
//! to a fixed fact count.

use serde::Serialize;

use super::{Engine, EngineError, Round};
use crate::assets;
use crate::frame::{CustomerFrame, Frame, Op};
use crate::kb::{FoodKind, MenuKb};
use crate::term::Sym;

/// Fact count of the benchmark menu.
pub const BENCH_FACTS: usize = 1220;

const PAD_INGREDIENTS: &[&str] = &["Seasoned Beef", "Lettuce", "Cheese"];
const PAD_TOPPINGS: &[(&str, i64, i64)] = &[("Tomatoes", 30, 5), ("Beans", 40, 20), ("Sour Cream", 50, 10)];

fn pad_dish(i: usize) -> Vec<String> {
    let n = format!("'Bench Taco {i}'");
    let mut f = vec![
        format!("dish({n})."),
        format!("category({n}, taco)."),
        format!("original_price({n}, {}).", 150 + i % 100),
        format!("original_cal({n}, {}).", 150 + i % 80),
    ];
    f.extend(PAD_INGREDIENTS.iter().map(|x| format!("included_ingredient({n}, '{x}').")));
    for (t, p, c) in PAD_TOPPINGS {
        f.push(format!("available_topping({n}, '{t}')."));
        f.push(format!("upgrade_price({n}, '{t}', {p})."));
        f.push(format!("upgrade_cal({n}, '{t}', {c})."));
    }
    f.push(format!("available_special_style({n}, fresco)."));
    f.push(format!("special_style_price({n}, fresco, 0)."));
    f
}

/// The fixture menu plus synthetic tacos, exactly `target` facts when the
/// fixture is smaller.
pub fn padded_menu(target: usize) -> MenuKb {
    let base = assets::menu();
    let mut src = assets::MENU.to_string();
    let mut n = base.len();
    let mut i = 0;
    loop {
        let block = pad_dish(i);
        if n + block.len() > target {
            break;
        }
        n += block.len();
        src.push('\n');
        src.push_str(&block.join("\n"));
        i += 1;
    }
    if i > 0 {
        let spare = base
            .names(&[FoodKind::Ingredient])
            .into_iter()
            .filter(|x| !PAD_INGREDIENTS.contains(&&**x) && !PAD_TOPPINGS.iter().any(|t| t.0 == &**x));
        for x in spare.take(target.saturating_sub(n)) {
            src.push_str(&format!("\nincluded_ingredient('Bench Taco 0', '{x}')."));
        }
    }
    MenuKb::parse(&src).expect("padded menu is valid")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub rounds: usize,
    pub mean_reasoning_ms: f64,
    pub max_reasoning_ms: f64,
    pub mean_total_ms: f64,
}

impl Stats {
    pub fn of(rounds: &[Round]) -> Stats {
        let n = rounds.len().max(1) as f64;
        Stats {
            rounds: rounds.len(),
            mean_reasoning_ms: rounds.iter().map(|r| r.timing.reasoning_ms).sum::<f64>() / n,
            max_reasoning_ms: rounds.iter().map(|r| r.timing.reasoning_ms).fold(0.0, f64::max),
            mean_total_ms: rounds.iter().map(|r| r.timing.total_ms).sum::<f64>() / n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub kb_facts: usize,
    pub requirements: usize,
    pub manager: Stats,
    pub service: Stats,
}

/// Manager rounds marking toppings out and back in, through the parser.
pub fn manager_rounds(engine: &Engine, rounds: usize) -> Result<Vec<Round>, EngineError> {
    let toppings: Vec<Sym> = engine.store().snapshot().kb.names(&[FoodKind::Ingredient]);
    let id = engine.open_session(crate::frame::Role::Manager)?.id;
    let mut out = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let t = &toppings[(r / 2) % toppings.len()];
        let text = if r % 2 == 0 { format!("We have no more {t}.") } else { format!("{t} is back in stock.") };
        out.push(engine.run_round(&id, &text)?);
    }
    engine.close_session(&id)?;
    Ok(out)
}

/// `k` requirement frames: orders of distinct toppable dishes, each
/// followed by topping additions.
pub fn requirement_frames(kb: &MenuKb, k: usize) -> Vec<Frame> {
    let mut out = Vec::with_capacity(k);
    let dishes = kb.names(&[FoodKind::Dish]);
    let mut dishes = dishes.iter().filter(|d| kb.about("available_topping", d).nth(1).is_some());
    while out.len() < k {
        let Some(d) = dishes.next() else { break };
        out.push(Frame::Customer(CustomerFrame::Order { food: d.clone(), number: 1 }));
        for t in kb.about("available_topping", d).take(2) {
            if out.len() == k {
                break;
            }
            if let Some(t) = t.args.get(1).and_then(|a| a.as_atom()) {
                out.push(Frame::Customer(CustomerFrame::Update { dish: d.clone(), op: Op::Add, option: t.clone() }));
            }
        }
    }
    out
}

/// One fresh customer session per round, each round carrying `k`
/// requirement frames.
pub fn service_rounds(engine: &Engine, rounds: usize, k: usize) -> Result<Vec<Round>, EngineError> {
    let frames = requirement_frames(&engine.store().snapshot().kb, k);
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let id = engine.open_session(crate::frame::Role::Customer)?.id;
        out.push(engine.run_frames(&id, frames.clone())?);
        engine.close_session(&id)?;
    }
    Ok(out)
}

pub fn run(engine: &Engine, rounds: usize, requirements: usize) -> Result<BenchReport, EngineError> {
    let manager = Stats::of(&manager_rounds(engine, rounds)?);
    let service = Stats::of(&service_rounds(engine, rounds, requirements)?);
    Ok(BenchReport { kb_facts: engine.store().snapshot().kb.len(), requirements, manager, service })
}
