#![no_main]

use irm_core::ccp::CcpCurve;
use irm_core::lru::MissRateCurve;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(curve) = MissRateCurve::from_json(text) {
        let _ = curve.to_csv();
        let _ = curve.max_discrepancy();
        let again = MissRateCurve::from_json(&curve.to_json()).unwrap();
        assert_eq!(curve.entries.len(), again.entries.len());
    }
    if let Ok(curve) = CcpCurve::from_json(text) {
        let _ = curve.to_csv();
        let _ = curve.max_relative_spread();
        let again = CcpCurve::from_json(&curve.to_json()).unwrap();
        assert_eq!(curve.entries.len(), again.entries.len());
    }
});
