//! Automaton JSON decoding must reject malformed graphs without panicking;
//! accepted automata must be safe to query and must round-trip.

#![no_main]

use freeqm::stallings::SubgroupAutomaton;
use freeqm::word::Word;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(aut) = SubgroupAutomaton::from_json(text) else { return };
    // A decoded automaton satisfies the core invariants, so every query
    // below must succeed without panic.
    let _ = aut.index();
    if let Ok(w) = Word::parse("ab", aut.rank()) {
        let _ = aut.contains(&w);
    }
    let _ = aut.enumerate(2);
    let json = aut.to_json();
    let back = SubgroupAutomaton::from_json(&json).expect("own output re-parses");
    assert_eq!(aut.vertex_count(), back.vertex_count());
    assert_eq!(aut.edge_count(), back.edge_count());
    assert_eq!(aut.index(), back.index());
});
