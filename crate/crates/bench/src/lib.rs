//! Fixtures shared by the criterion benches: the padded menu, a store over
//! it and the service-round frames.

use duotalk_core::orchestrator::bench::{padded_menu, requirement_frames, BENCH_FACTS};
use duotalk_core::{assets, CustomerFrame, Engine, Frame, MenuKb, SharedStore, ShortageState, Snapshot, StateDelta};

pub fn menu() -> MenuKb {
    padded_menu(BENCH_FACTS)
}

pub fn engine() -> Engine {
    Engine::deterministic(menu())
}

pub fn store(kb: MenuKb) -> SharedStore {
    SharedStore::new(kb, ShortageState::default(), assets::rules())
}

/// `k` customer requirements as agent frames.
pub fn customer_frames(kb: &MenuKb, k: usize) -> Vec<CustomerFrame> {
    requirement_frames(kb, k)
        .into_iter()
        .filter_map(|f| match f {
            Frame::Customer(c) => Some(c),
            Frame::Manager(_) => None,
        })
        .collect()
}

/// A delta flipping one ingredient, alternating by round.
pub fn shortage_delta(snap: &Snapshot, round: usize) -> StateDelta {
    let names = snap.kb.names(&[duotalk_core::FoodKind::Ingredient]);
    let name = &names[(round / 2) % names.len()];
    let d = StateDelta::new("bench");
    if snap.state.contains(name) { d.restore(name) } else { d.runout(name) }
}
