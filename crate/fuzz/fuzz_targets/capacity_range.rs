#![no_main]

use irm_core::CapacityRange;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(range) = text.parse::<CapacityRange>() else {
        return;
    };
    assert!(range.lo <= range.hi);
    let again: CapacityRange = range.to_string().parse().unwrap();
    assert_eq!(range, again);
});
