//! Shared fixtures for the benchmark suite.

use rdd_core::{presets, split_by_treatment, Dataset};

/// A simulated univariate incumbency dataset.
pub fn lee_dataset(n: usize, seed: u64) -> Dataset {
    presets::lee().spec.simulate(n, seed).expect("valid preset")
}

/// The treated subset of a simulated incumbency dataset.
pub fn lee_treated(n: usize, seed: u64) -> Dataset {
    let preset = presets::lee();
    let data = preset.spec.simulate(n, seed).expect("valid preset");
    split_by_treatment(&data, &preset.spec.rule).expect("both sides present").0
}
