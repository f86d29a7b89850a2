//! Word text parsing must never panic, and accepted words must round-trip
//! through display and stay reduced.

#![no_main]

use freeqm::word::Word;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Exercise the rank check paths too, including out-of-range ranks.
    for rank in [0u8, 1, 2, 3, 26, 27] {
        let _ = Word::parse(text, rank);
    }
    if let Ok(w) = Word::parse(text, 26) {
        let back = Word::parse(&w.to_string(), 26).expect("display re-parses");
        assert_eq!(w, back, "display round-trip changed the word");
        assert!(w.len() <= text.len(), "reduction never grows");
        let double = w.concat(&w.inverse()).expect("same rank");
        assert!(double.is_identity(), "w · w⁻¹ must cancel");
    }
});
