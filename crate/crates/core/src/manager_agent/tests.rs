use super::*;
use crate::assets;
use crate::frame::render_block;
use crate::shared_state::ShortageState;
use crate::syntax::parse_literals;

fn snap() -> Snapshot {
    Snapshot::new(Arc::new(assets::menu()), Arc::new(ShortageState::default()), assets::rules())
}

fn say(agent: &mut ManagerAgent, s: &Snapshot, src: &str) -> (String, StateDelta) {
    let frames: Vec<ManagerFrame> = parse_literals(src)
        .unwrap()
        .iter()
        .map(|l| ManagerFrame::from_literal(l).unwrap_or_else(|| panic!("bad frame {l}")))
        .collect();
    let (out, delta) = agent.step(s, &frames);
    (render_block(&out).replace(',', ", "), delta)
}

#[test]
fn shortage_reports_are_staged() {
    let s = snap();
    let mut m = ManagerAgent::new("s1");
    let (out, delta) = say(&mut m, &s, "runout('Slow-Roasted Chicken').");
    assert_eq!(out, "confirm(runout, Slow-Roasted Chicken).");
    assert_eq!(delta.staged, StateDelta::new("s1").runout("Slow-Roasted Chicken").staged);
    let (out, delta) = say(&mut m, &s, "runout('Moon Dust'). restore('Soft Taco').");
    assert_eq!(out, "confirm(unknown, Moon Dust). confirm(unknown, Soft Taco).");
    assert!(delta.is_empty());
    let (out, delta) = say(&mut m, &s, "runout('Lettuce'). restore('Lettuce').");
    assert_eq!(out, "confirm(conflict, Lettuce).");
    assert!(delta.is_empty());
    assert!(m.handover().is_none());
}

#[test]
fn new_dish_is_filled_slot_by_slot() {
    let s = snap();
    let mut m = ManagerAgent::new("s1");
    assert_eq!(say(&mut m, &s, "add('Queso Taco').").0, "ask(Queso Taco, type).");
    assert_eq!(m.context().asking.as_deref(), Some("type"));
    assert_eq!(say(&mut m, &s, "add(dish, 'Queso Taco').").0, "ask(Queso Taco, category).");
    assert_eq!(say(&mut m, &s, "add('Queso Taco', category, spaceship).").0, "confirm(invalid, category). ask(Queso Taco, category).");
    assert_eq!(say(&mut m, &s, "add('Queso Taco', category, taco).").0, "confirm(add, category). ask(Queso Taco, price).");
    assert_eq!(say(&mut m, &s, "add('Queso Taco', price, 2.49).").0, "confirm(add, price). ask(Queso Taco, ingredient).");
    let out = say(&mut m, &s, "add('Queso Taco', ingredient, 'Cheese'). add('Queso Taco', ingredient, 'Beans').").0;
    assert_eq!(out, "confirm(add, ingredient). ask(Queso Taco, ingredient).");
    assert_eq!(say(&mut m, &s, "done.").0, "ask(Queso Taco, calories).");
    // Volunteered popular toppings close that slot too.
    let out = say(&mut m, &s, "add('Queso Taco', calories, 210). add('Queso Taco', popular, 'Onions').").0;
    assert_eq!(out, "confirm(add, calories). confirm(add, popular). confirm(add, Queso Taco).");
    assert!(m.ckt.is_none());

    let (mutations, deferred) = m.handover().unwrap();
    assert!(deferred.is_empty());
    let added: Vec<String> = mutations.adds.iter().map(|f| f.to_string()).collect();
    assert_eq!(
        added,
        [
            "dish('Queso Taco')",
            "original_price('Queso Taco', 249)",
            "original_cal('Queso Taco', 210)",
            "category('Queso Taco', taco)",
            "included_ingredient('Queso Taco', 'Beans')",
            "included_ingredient('Queso Taco', 'Cheese')",
            "popular_topping('Queso Taco', 'Onions')",
        ]
    );
    assert!(mutations.removes.is_empty());
}

#[test]
fn shortages_on_scratch_foods_are_deferred() {
    let s = snap();
    let mut m = ManagerAgent::new("s1");
    assert_eq!(say(&mut m, &s, "add(ingredient, 'Corn').").0, "confirm(add, Corn).");
    let (out, delta) = say(&mut m, &s, "runout('Corn').");
    assert_eq!(out, "confirm(runout, Corn).");
    assert!(delta.is_empty());
    let (mutations, deferred) = m.handover().unwrap();
    assert_eq!(mutations.adds.len(), 1);
    assert_eq!(deferred.staged, StateDelta::new("s1").runout("Corn").staged);
}

#[test]
fn edits_and_deletes() {
    let s = snap();
    let mut m = ManagerAgent::new("s1");
    assert_eq!(say(&mut m, &s, "edit('Soft Taco', price, 1.99).").0, "confirm(edit, price).");
    assert_eq!(m.menu(&s).price("Soft Taco"), Some(199));
    let out = say(&mut m, &s, "edit('Soft Taco', ingredient, 'Lettuce', 'Chicken').").0;
    assert_eq!(out, "confirm(invalid, ingredient).");
    let out = say(&mut m, &s, "edit('Soft Taco', ingredient, 'Steak', 'Onions').").0;
    assert_eq!(out, "confirm(not_found, ingredient).");
    let out = say(&mut m, &s, "edit('Soft Taco', ingredient, 'Lettuce', 'Onions').").0;
    assert_eq!(out, "confirm(edit, ingredient).");
    assert_eq!(say(&mut m, &s, "delete('Soft Taco', price).").0, "confirm(invalid, price).");
    assert_eq!(say(&mut m, &s, "delete('Soft Taco').").0, "confirm(delete, Soft Taco).");
    assert!(m.menu(&s).kind_of("Soft Taco").is_none());
    let taco = crate::order::OrderLine::group_members(m.menu(&s), "taco");
    assert!(!taco.iter().any(|t| &**t == "Soft Taco"));
    let (mutations, _) = m.handover().unwrap();
    assert!(s.kb.apply(&mutations).is_ok());
}

#[test]
fn quit_abandons_open_slots() {
    let s = snap();
    let mut m = ManagerAgent::new("s1");
    say(&mut m, &s, "add(combo, 'Mega Combo').");
    assert_eq!(say(&mut m, &s, "quit.").0, "confirm(quit, none). quit.");
    assert!(m.done && m.ckt.is_none());
    assert!(m.handover().is_none());
}
