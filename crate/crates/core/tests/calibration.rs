use irm_core::ccp::expected_partial_time;
use irm_core::lru::flajolet_miss_rate;
use irm_core::montecarlo::{simulate_ccp, simulate_lru};
use irm_core::{ITable, Popularity};

const SEEDS: u64 = 50;

fn covered(hits: usize) -> f64 {
    hits as f64 / SEEDS as f64
}

#[test]
fn lru_two_sigma_coverage() {
    let pop = Popularity::make_explicit(&[6.0, 4.0, 3.0, 2.0, 1.0, 1.0]).unwrap();
    let table = ITable::<f64>::build(&pop, 2).unwrap();
    let exact = flajolet_miss_rate(&table, 3).unwrap();
    let hits = (0..SEEDS)
        .filter(|&seed| {
            let est = simulate_lru(&pop, 3, None, 100_000, seed).unwrap();
            (est.mean - exact).abs() <= 2.0 * est.std_error
        })
        .count();
    assert!(covered(hits) >= 0.86, "{hits}/{SEEDS} within 2 se");
}

#[test]
fn ccp_two_sigma_coverage() {
    let pop = Popularity::make_explicit(&[5.0, 3.0, 2.0, 1.0]).unwrap();
    let table = ITable::<f64>::build(&pop, 3).unwrap();
    let exact = expected_partial_time(&table, 4).unwrap();
    let hits = (0..SEEDS)
        .filter(|&seed| {
            let est = simulate_ccp(&pop, 4, 20_000, 1_000 + seed).unwrap();
            (est.mean - exact).abs() <= 2.0 * est.std_error
        })
        .count();
    assert!(covered(hits) >= 0.86, "{hits}/{SEEDS} within 2 se");
}
