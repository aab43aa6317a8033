use super::*;
use crate::assets;
use crate::syntax::parse_literal;

fn names(s: &ShortageState) -> Vec<&str> {
    s.runout.iter().map(|n| &**n).collect()
}

fn snap(runout: &[&str]) -> Snapshot {
    let state = ShortageState::new(runout.iter().map(|s| crate::term::sym(s)).collect());
    Snapshot::new(Arc::new(assets::menu()), Arc::new(state), assets::rules())
}

#[test]
fn restore_removes_runout() {
    let kb = assets::menu();
    let s = ShortageState::new(vec!["Lettuce".into()]);
    let next = reconcile(&assets::rules(), &kb, &s, &StateDelta::new("m").restore("Lettuce")).unwrap();
    assert!(next.runout.is_empty());
    assert_eq!(next.version, 2);
}

#[test]
fn runouts_accumulate_in_order() {
    let kb = assets::menu();
    let rules = assets::rules();
    let s = ShortageState::default();
    let s = reconcile(&rules, &kb, &s, &StateDelta::new("m").runout("Slow-Roasted Chicken")).unwrap();
    let s = reconcile(&rules, &kb, &s, &StateDelta::new("m").runout("Tomatoes")).unwrap();
    assert_eq!(names(&s), ["Slow-Roasted Chicken", "Tomatoes"]);
    let same = reconcile(&rules, &kb, &s, &StateDelta::new("m")).unwrap();
    assert_eq!(same.runout, s.runout);
    assert_eq!(same.version, s.version + 1);
}

#[test]
fn conflicting_and_unknown_deltas_are_rejected() {
    let kb = assets::menu();
    let rules = assets::rules();
    let s = ShortageState::default();
    let bad = StateDelta::new("m").runout("Lettuce").restore("Lettuce");
    assert!(matches!(reconcile(&rules, &kb, &s, &bad), Err(StateError::Inconsistent(_))));
    let unknown = StateDelta::new("m").runout("Unicorn");
    assert!(matches!(reconcile(&rules, &kb, &s, &unknown), Err(StateError::UnknownName(_))));
    let dish = StateDelta::new("m").runout("Soft Taco");
    assert!(matches!(reconcile(&rules, &kb, &s, &dish), Err(StateError::UnknownName(_))));
}

#[test]
fn chicken_shortage_explains_cantina_taco() {
    let s = snap(&["Slow-Roasted Chicken"]);
    let reasons = s.reasons("Cantina Chicken Soft Taco").unwrap();
    assert_eq!(reasons.len(), 1);
    assert_eq!(reasons[0].plain().to_string(), "runout(Slow-Roasted Chicken)");
    assert!(s.reasons("Soft Taco").unwrap().is_empty());
    // every chicken taco in the option group is out, so the combo is too
    assert!(s.is_unavailable("Cantina Chicken Combo").unwrap());
    assert!(s.is_unavailable("Taco Duo Combo").unwrap());
    assert!(!s.is_unavailable("Crunchwrap Supreme Combo").unwrap());
    assert!(snap(&[]).unavailability(None).unwrap().is_empty());
    assert!(matches!(s.unavailability(Some("Nope")), Err(StateError::UnknownFood(_))));
}

#[test]
fn direct_runout_reason_is_none() {
    let s = snap(&["Tomatoes"]);
    assert_eq!(s.reasons("Tomatoes").unwrap()[0].plain().to_string(), "runout(none)");
}

#[test]
fn commit_is_all_or_nothing() {
    let kb = assets::menu();
    let rules = assets::rules();
    let s = ShortageState::default();
    let mut m = MutationSet::new("m");
    m.adds = vec![parse_literal("ingredient('Cotija')").unwrap()];
    let (kb2, s2) = commit(&rules, &kb, &s, &m, &StateDelta::new("m").runout("Cotija")).unwrap();
    assert_eq!((kb2.version(), s2.version), (2, 2));
    assert_eq!(names(&s2), ["Cotija"]);

    let mut bad = MutationSet::new("m");
    bad.removes = vec![parse_literal("original_price('Soft Taco', 179)").unwrap()];
    assert!(commit(&rules, &kb, &s, &bad, &StateDelta::new("m").runout("Lettuce")).is_err());
}

#[test]
fn store_defers_commit_until_all_sessions_close() {
    let store = SharedStore::new(assets::menu(), ShortageState::default(), assets::rules());
    store.open("m").unwrap();
    store.open("c").unwrap();
    let mut m = MutationSet::new("m");
    m.removes = vec![parse_literal("original_price('Grilled Cheese Burrito', 349)").unwrap()];
    m.adds = vec![parse_literal("original_price('Grilled Cheese Burrito', 380)").unwrap()];
    let out = store.close("m", Some((m, StateDelta::new("m")))).unwrap();
    assert!(out.deferred);
    assert_eq!(store.snapshot().kb.price("Grilled Cheese Burrito"), Some(349));
    let out = store.close("c", None).unwrap();
    assert_eq!(out.committed, [(2, 2)]);
    assert_eq!(store.snapshot().kb.price("Grilled Cheese Burrito"), Some(380));
    assert!(matches!(store.close("c", None), Err(StoreError::NotOpen(_))));
}

#[test]
fn store_counts_one_read_reconcile_and_check_per_round() {
    let store = SharedStore::new(assets::menu(), ShortageState::default(), assets::rules());
    store.open("m").unwrap();
    for _ in 0..3 {
        store.begin_round("m").unwrap();
        store.end_round("m", &StateDelta::new("m").runout("Lettuce")).unwrap();
    }
    let c = store.counters("m");
    assert_eq!(c, Counters { rounds: 3, reads: 3, reconciles: 3, checks: 3 });
    assert_eq!(store.history().last(), Some(&(1, 4)));
}

#[test]
fn delta_log_records_staged_facts() {
    let dir = tempfile::tempdir().unwrap();
    let store = SharedStore::new(assets::menu(), ShortageState::default(), assets::rules())
        .with_log(DeltaLog::new(dir.path()).unwrap())
        .unwrap();
    store.open("s1").unwrap();
    store.end_round("s1", &StateDelta::new("s1").runout("Tomatoes")).unwrap();
    let log = std::fs::read_to_string(dir.path().join("deltas.log")).unwrap();
    assert!(log.trim_end().ends_with("\ts1\tnew_runout('Tomatoes')."), "{log}");
    let snapshot = std::fs::read_to_string(dir.path().join("state.lp")).unwrap();
    assert!(snapshot.contains("runout('Tomatoes')."));
}
