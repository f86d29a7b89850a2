//! Radius overrides (`KEY=VALUE`) must parse or fail cleanly; accepted
//! overrides must target a real radius field.

#![no_main]

use freeqm::pipeline::{apply_radius_overrides, parse_radius_override, PipelineConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((key, value)) = parse_radius_override(text) else { return };
    const KEYS: [&str; 6] =
        ["subgroup", "defect", "powers", "projection_ball", "scan_max", "elliptic"];
    assert!(KEYS.contains(&key.as_str()), "accepted unknown key {key:?}");
    let mut cfg = PipelineConfig::default();
    apply_radius_overrides(&mut cfg, &[(key.clone(), value)]);
    let applied = match key.as_str() {
        "subgroup" => cfg.radii.subgroup,
        "defect" => cfg.radii.defect,
        "powers" => cfg.radii.powers,
        "projection_ball" => cfg.radii.projection_ball,
        "scan_max" => cfg.radii.scan_max,
        "elliptic" => cfg.radii.elliptic,
        _ => unreachable!(),
    };
    assert_eq!(applied, value, "override did not land on {key}");
});
