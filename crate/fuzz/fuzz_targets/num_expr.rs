//! Numeric-expression and step-list parsers on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;
use magnus_sdde::parse::{parse_number, parse_step_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = parse_number(text) {
        assert!(v.is_finite());
    }
    if let Ok(steps) = parse_step_list(text) {
        assert!(steps.iter().all(|&h| h > 0.0 && h.is_finite()));
        // ranges have bounded exponents, so the expansion stays small
        assert!(steps.len() <= 2048 * (text.matches(',').count() + 1));
    }
});
