//! Counter-based random numbers.
//!
//! Every draw is a pure function of a key `(seed, path, step, mode)`, so
//! Wiener increments replay bitwise across solver invocations (the Picard
//! driver requires identical increments on every iteration) and paths can be
//! generated concurrently without shared state.

use crate::math;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const C_PATH: u64 = 0xa24b_aed4_963e_e407;
const C_STEP: u64 = 0x9fb2_1c65_1e98_df25;
const C_MODE: u64 = 0xd6e8_feb8_6659_fd93;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64 uniform bits for the key; `lane` separates independent draws at the
/// same counter position.
#[inline]
pub fn keyed_u64(seed: u64, path: u64, step: u64, mode: u64, lane: u64) -> u64 {
    let mut s = mix64(seed ^ GAMMA);
    s = mix64(s ^ path.wrapping_mul(C_PATH));
    s = mix64(s ^ step.wrapping_mul(C_STEP));
    s = mix64(s ^ mode.wrapping_mul(C_MODE));
    mix64(s ^ lane.wrapping_mul(GAMMA))
}

/// Uniform on the open interval (0, 1), 53-bit resolution.
#[inline]
fn unit_open(bits: u64) -> f64 {
    (((bits >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw for the key, via Box–Muller.
#[inline]
pub fn keyed_normal(seed: u64, path: u64, step: u64, mode: u64) -> f64 {
    let u1 = unit_open(keyed_u64(seed, path, step, mode, 0));
    let u2 = unit_open(keyed_u64(seed, path, step, mode, 1));
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * math::PI * u2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_replay() {
        let a = keyed_normal(7, 3, 11, 2);
        let b = keyed_normal(7, 3, 11, 2);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn distinct_keys_decorrelate() {
        // Crude smoke check; the statistical suite lives in the noise tests.
        let x = keyed_normal(1, 0, 0, 0);
        let y = keyed_normal(1, 0, 0, 1);
        let z = keyed_normal(2, 0, 0, 0);
        assert!(x != y && x != z);
    }

    #[test]
    fn moments_roughly_standard() {
        let n = 20_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n {
            let v = keyed_normal(42, 0, i as u64, 0);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
