#![no_main]

use irm_core::{DistSpec, ITable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = DistSpec::from_json(text) else {
        return;
    };
    let Ok(pop) = spec.build() else {
        return;
    };
    let total: f64 = pop.probs().iter().sum();
    assert!((total - 1.0).abs() < 1e-9, "probabilities sum to {total}");
    assert!(pop.probs().windows(2).all(|w| w[0] >= w[1]));
    if pop.m() <= 8 {
        let table = ITable::<f64>::build(&pop, pop.m() - 1).unwrap();
        assert!(table.recurrence_residual() < 1e-9);
    }
});
