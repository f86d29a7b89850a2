//! Pipeline config JSON must parse or fail cleanly, and accepted configs
//! must survive a serialize/deserialize round trip unchanged.

#![no_main]

use freeqm::pipeline::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = PipelineConfig::from_json(text) else { return };
    // Validation may reject, but must not panic.
    let _ = cfg.validate();
    let json = serde_json::to_string(&cfg).expect("config serializes");
    let back = PipelineConfig::from_json(&json).expect("own output re-parses");
    assert_eq!(cfg, back, "config round-trip drifted");
});
