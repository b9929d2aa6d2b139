//! Per-cell seed derivation.
//!
//! The tuple `(master, method, K, M, trial)` is encoded as five little-endian
//! `u64` words (method as its index in `mc, qmc, trapezoid, simpson`; `M` as
//! the shot count or `u64::MAX` for exact mode). Each word is absorbed with
//! `state = mix(state ^ word)` where `mix` is the SplitMix64 finalizer. `mix`
//! is a bijection, so changing any single field always changes the result.

use crate::quadrature::Method;
use crate::shots::ShotMode;

const INIT: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn method_code(m: Method) -> u64 {
    match m {
        Method::Mc => 0,
        Method::Qmc => 1,
        Method::Trapezoid => 2,
        Method::Simpson => 3,
    }
}

pub fn derive_seed(master: u64, method: Method, k: usize, mode: ShotMode, trial: usize) -> u64 {
    [master, method_code(method), k as u64, mode.code(), trial as u64]
        .iter()
        .fold(INIT, |state, &w| mix64(state ^ w))
}

/// Seed of the denominator run paired with a numerator seed.
pub fn companion_seed(seed: u64) -> u64 {
    mix64(seed ^ 0xD1B5_4A32_D192_ED03)
}
