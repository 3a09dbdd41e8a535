//! Report-CSV reader on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;
use magnus_sdde::emit::parse_report_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_report_csv(text) {
        for row in rows {
            assert!(row.h.is_finite());
            assert!(row.mse.map_or(true, |v| v.is_finite()));
            assert!(row.slope.map_or(true, |v| v.is_finite()));
        }
    }
});
