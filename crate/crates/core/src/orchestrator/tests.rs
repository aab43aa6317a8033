use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::*;
use crate::frame::ManagerFrame;

fn engine() -> Engine {
    Engine::deterministic(assets::menu())
}

/// Parser failing with a transport error for its first `fail` calls.
struct Flaky {
    fail: usize,
    calls: Arc<AtomicUsize>,
}

impl Parser for Flaky {
    fn parse(&self, utterance: &str, ctx: &ParseContext<'_>) -> Result<Vec<Frame>, NlError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if n < self.fail {
            return Err(NlError::Transport("connection refused".into()));
        }
        RulesParser::default().parse(utterance, ctx)
    }
}

struct DeadGenerator;

impl Generator for DeadGenerator {
    fn generate(&self, _: Role, _: &[Literal]) -> Result<String, NlError> {
        Err(NlError::Transport("timeout".into()))
    }
}

fn flaky_engine(fail: usize) -> (Engine, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    let store = SharedStore::new(assets::menu(), ShortageState::default(), assets::rules());
    let parser = Flaky { fail, calls: calls.clone() };
    (Engine::new(store, Box::new(parser), Box::new(TemplateGenerator::default())), calls)
}

#[test]
fn empty_utterance_takes_the_irrelevant_path() {
    let e = engine();
    let id = e.open_session(Role::Customer).unwrap().id;
    let r = e.run_round(&id, "").unwrap();
    assert_eq!(block(&r.frames), "irrelevant.");
    assert_eq!(block(&r.predicates), "confirm(irrelevant,none). else.");
    assert!(!r.text.is_empty());
    assert!(r.error.is_none());
}

#[test]
fn one_transport_failure_is_retried() {
    let (e, calls) = flaky_engine(1);
    let id = e.open_session(Role::Manager).unwrap().id;
    let r = e.run_round(&id, "We have no more lettuce.").unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 2);
    assert_eq!(block(&r.predicates), "confirm(runout,Lettuce).");
    assert!(r.error.is_none());
}

#[test]
fn persistent_transport_failure_apologizes() {
    let (e, calls) = flaky_engine(usize::MAX);
    let id = e.open_session(Role::Manager).unwrap().id;
    let before = e.store().versions();
    let r = e.run_round(&id, "We have no more lettuce.").unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 2);
    assert_eq!(r.text, TemplateGenerator::default().apology());
    assert!(r.error.as_deref().unwrap().contains("connection refused"));
    assert!(r.predicates.is_empty());
    // The round still happened: one read, one (empty) reconcile.
    assert_eq!(e.store().versions().1, before.1 + 1);
    assert!(e.store().snapshot().state.runout.is_empty());
}

#[test]
fn generator_failure_apologizes_but_keeps_the_reasoning() {
    let store = SharedStore::new(assets::menu(), ShortageState::default(), assets::rules());
    let e = Engine::new(store, Box::new(RulesParser::default()), Box::new(DeadGenerator));
    let id = e.open_session(Role::Manager).unwrap().id;
    let r = e.run_round(&id, "We have no more lettuce.").unwrap();
    assert_eq!(r.text, TemplateGenerator::default().apology());
    assert_eq!(block(&r.predicates), "confirm(runout,Lettuce).");
    assert!(e.store().snapshot().state.contains("Lettuce"));
}

#[test]
fn double_close_is_rejected() {
    let e = engine();
    let id = e.open_session(Role::Customer).unwrap().id;
    e.close_session(&id).unwrap();
    assert!(matches!(e.close_session(&id), Err(EngineError::Closed(_))));
    assert!(matches!(e.run_round(&id, "hi"), Err(EngineError::Closed(_))));
    assert!(matches!(e.close_session("s99"), Err(EngineError::UnknownSession(_))));
}

#[test]
fn every_round_reads_one_snapshot() {
    let e = engine();
    let id = e.open_session(Role::Customer).unwrap().id;
    for text in ["Can I have a soft taco?", "", "What's in the Quesarito?"] {
        e.run_round(&id, text).unwrap();
    }
    let c = e.store().counters(&id);
    assert_eq!((c.rounds, c.reads, c.reconciles, c.checks), (3, 3, 3, 3));
}

fn add_dish(e: &Engine, id: &str) {
    for text in [
        "We're adding a new dish called Queso Taco.",
        "It's a taco",
        "$2.49",
        "Cheese and beans",
        "That's all",
        "210 calories",
        "That's all",
    ] {
        let r = e.run_round(id, text).unwrap();
        assert!(r.error.is_none(), "{text}: {r:?}");
    }
}

#[test]
fn menu_edits_commit_once_at_close() {
    let e = engine();
    let id = e.open_session(Role::Manager).unwrap().id;
    add_dish(&e, &id);
    let last = e.with_session(&id, |s| s.rounds.last().unwrap().predicates.clone()).unwrap();
    assert_eq!(last, ["confirm(add,Queso Taco)"], "CKT should be complete");
    assert_eq!(e.store().versions().0, 1);
    let c = e.close_session(&id).unwrap();
    assert_eq!(c.outcome.committed.len(), 1);
    assert_eq!(e.store().versions().0, 2);
    assert!(e.store().snapshot().kb.holds("dish", &["Queso Taco".into()]));
}

#[test]
fn customer_sees_shortages_next_round_and_menu_edits_after_close() {
    let e = engine();
    let m = e.open_session(Role::Manager).unwrap().id;
    let c = e.open_session(Role::Customer).unwrap().id;
    e.run_round(&m, "We have no more cheese.").unwrap();
    add_dish(&e, &m);
    let r = e.run_round(&c, "Can I have a soft taco?").unwrap();
    assert!(block(&r.predicates).starts_with("confirm(unavailable,[unavailable(Soft Taco,runout(Cheese))])"));
    let order = Frame::Customer(CustomerFrame::Order { food: "Queso Taco".into(), number: 1 });
    let r = e.run_frames(&c, vec![order]).unwrap();
    assert_eq!(block(&r.predicates), "confirm(unknown,Queso Taco). else.");
    // Closing the manager defers the commit while the customer is active.
    let closed = e.close_session(&m).unwrap();
    assert!(closed.outcome.deferred && closed.outcome.committed.is_empty());
    assert!(!e.store().snapshot().kb.holds("dish", &["Queso Taco".into()]));
    e.close_session(&c).unwrap();
    assert!(e.store().snapshot().kb.holds("dish", &["Queso Taco".into()]));
    let c2 = e.open_session(Role::Customer).unwrap().id;
    let r = e.run_round(&c2, "Can I have a queso taco?").unwrap();
    // Known now, and its cheese is still out.
    let want = "confirm(unavailable,[unavailable(Queso Taco,runout(Cheese))])";
    assert!(block(&r.predicates).starts_with(want), "{:?}", r.predicates);
}

#[test]
fn closing_mid_template_discards_the_partial_entry() {
    let e = engine();
    let id = e.open_session(Role::Manager).unwrap().id;
    e.run_round(&id, "We're adding a new dish called Queso Taco.").unwrap();
    e.run_round(&id, "It's a taco").unwrap();
    let c = e.close_session(&id).unwrap();
    assert!(c.outcome.committed.is_empty());
    assert_eq!(e.store().versions().0, 1);
}

#[test]
fn quit_closes_and_commits() {
    let e = engine();
    let id = e.open_session(Role::Manager).unwrap().id;
    e.run_frames(&id, vec![Frame::Manager(ManagerFrame::Delete("Churros".into()))])
        .unwrap();
    let r = e.run_round(&id, "Let's end today's work.").unwrap();
    assert!(r.closed);
    assert!(!e.store().snapshot().kb.holds("dish", &["Churros".into()]));
    assert!(matches!(e.close_session(&id), Err(EngineError::Closed(_))));
}

#[test]
fn script_syntax_errors_name_the_line() {
    let err = parse_script("manager: hi\n\nwaiter: hello").unwrap_err();
    assert!(matches!(err, ReplayError::Syntax { line: 3 }));
    assert_eq!(parse_script("# c\n customer :  hi ").unwrap(), vec![ScriptLine { role: Role::Customer, text: "hi".into() }]);
}

#[test]
fn padded_menu_has_the_bench_size() {
    let kb = bench::padded_menu(bench::BENCH_FACTS);
    assert_eq!(kb.len(), bench::BENCH_FACTS);
    assert_eq!(bench::requirement_frames(&kb, 10).len(), 10);
}

#[test]
fn bench_rounds_are_clean() {
    let e = Engine::deterministic(bench::padded_menu(bench::BENCH_FACTS));
    let report = bench::run(&e, 4, 10).unwrap();
    assert_eq!(report.kb_facts, bench::BENCH_FACTS);
    assert_eq!((report.manager.rounds, report.service.rounds), (4, 4));
    let m = bench::manager_rounds(&e, 4).unwrap();
    assert!(m.iter().all(|r| r.error.is_none() && r.predicates[0].starts_with("confirm(r")), "{m:?}");
    let s = bench::service_rounds(&e, 1, 10).unwrap();
    assert_eq!(s[0].frames.len(), 10);
    assert!(s[0].error.is_none(), "{:?}", s[0]);
}
