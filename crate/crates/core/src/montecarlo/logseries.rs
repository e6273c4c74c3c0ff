//! Logarithmic-series variates, `P(k) = -p^k / (k ln(1 - p))` for `k ≥ 1`.

use rand::Rng;

/// Kemp's second accelerated generator.
pub fn sample_log_series<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let r = (-p).ln_1p();
    loop {
        let v: f64 = rng.random();
        if v >= p {
            return 1;
        }
        let u: f64 = rng.random();
        let q = -(r * u).exp_m1();
        if v <= q * q {
            let x = (1.0 + v.ln() / q.ln()).floor();
            if x < 1.0 || !x.is_finite() {
                continue;
            }
            return x as u64;
        }
        return if v >= q { 1 } else { 2 };
    }
}
