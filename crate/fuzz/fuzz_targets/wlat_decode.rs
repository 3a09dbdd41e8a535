//! Lattice dump decoder on arbitrary bytes: must never panic or
//! over-allocate, and accepted inputs must re-encode byte-identically.

#![no_main]

use libfuzzer_sys::fuzz_target;
use magnus_sdde::noise::WienerLattice;

fuzz_target!(|data: &[u8]| {
    if let Ok(lat) = WienerLattice::from_bytes(data) {
        let bytes = lat.to_bytes();
        assert_eq!(bytes, data, "decode/encode must round-trip");
        // decoded lattices must be usable
        if lat.path_count() > 0 && lat.n_samples() > 0 {
            let t = lat.n_samples() as f64 * lat.h_ref();
            let _ = lat.increment(0, 0.0, t);
        }
    }
});
