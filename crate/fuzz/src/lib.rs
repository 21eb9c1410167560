//! Checks shared by the fuzz targets and the corpus replay test.

use reso_core::config::{apply_overrides, parse_override, parse_scenario, to_toml};
use reso_core::metrics::{compute_metrics, MetricsSettings};
use reso_core::presets::preset;
use reso_core::trace::Trace;

/// A scenario that parses and validates must survive a TOML round trip.
pub fn scenario_toml(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(sc) = parse_scenario(text) else { return };
    if sc.validate().is_err() {
        return;
    }
    let again = to_toml(&sc).expect("valid scenario serialises");
    let back = parse_scenario(&again).expect("serialised scenario parses");
    assert_eq!(to_toml(&back).unwrap(), again);
}

/// One `key=value` override per line, applied to the step-load preset.
pub fn overrides(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let base = preset("e2a").expect("preset");
    let mut pairs = Vec::new();
    for line in text.lines() {
        match parse_override(line) {
            Ok(p) => pairs.push(p),
            Err(_) => return,
        }
    }
    if let Ok(sc) = apply_overrides(&base, &pairs) {
        let _ = sc.validate();
        let text = to_toml(&sc).expect("overridden scenario serialises");
        assert_eq!(parse_scenario(&text).expect("reparses"), sc);
    }
}

/// A parsed trace can be measured and re-written without loss at 17 digits.
pub fn trace_csv(data: &[u8]) {
    let Ok(tr) = Trace::read_csv(data) else { return };
    let settings = MetricsSettings { window: 1e-3, ..Default::default() };
    let _ = compute_metrics(&tr, None, &settings);
    let back = Trace::read_csv(tr.to_csv_string(17).as_bytes()).expect("re-read");
    assert_eq!(back.samples.len(), tr.samples.len());
    for (a, b) in back.samples.iter().zip(&tr.samples) {
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            assert!(x == y || (x.is_nan() && y.is_nan()));
        }
    }
}
