#![no_main]

use irm_core::lru::flajolet_miss_rate;
use irm_core::{ITable, Popularity};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|weights: Vec<f64>| {
    let Ok(pop) = Popularity::make_explicit(&weights) else {
        return;
    };
    let m = pop.m();
    assert!(pop.sum_squares() >= 1.0 / m as f64 - 1e-12);
    if m > 10 {
        return;
    }
    let table = ITable::<f64>::build(&pop, m - 1).unwrap();
    let mut prev = 1.0;
    for j in 1..=m {
        let mr = flajolet_miss_rate(&table, j).unwrap();
        assert!((-1e-9..=1.0 + 1e-9).contains(&mr), "MR[{j}] = {mr}");
        assert!(mr <= prev + 1e-9);
        prev = mr;
    }
});
