/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// False only when the interval of `lower` lies strictly above the interval
/// of `upper`, i.e. the expected order `lower <= upper` is contradicted.
pub fn never_wrong_way(lower: (u64, u64), upper: (u64, u64)) -> bool {
    let (lo_a, _) = wilson_interval(lower.0, lower.1);
    let (_, hi_b) = wilson_interval(upper.0, upper.1);
    lo_a <= hi_b
}
