use proptest::test_runner::{Config, RngSeed};

/// Deterministic proptest configuration.
pub fn pt(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x5eed_f00d), failure_persistence: None, ..Config::default() }
}
