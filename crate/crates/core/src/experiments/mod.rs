//! Drivers for the Bernoulli, logistic-regression, Zipf-environment and
//! upper-bound studies. Each returns curve data; writing files is left to
//! the caller.

pub mod bernoulli;
pub mod logistic;
pub mod upper;
pub mod zipf;

/// Default sample sizes for the Bernoulli and upper-bound studies.
pub const DEFAULT_N_LIST: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];

/// `count` log-spaced sample sizes from 1 to `max`, rounded and deduplicated.
pub fn log_spaced_sizes(max: usize, count: usize) -> Vec<usize> {
    let top = (max as f64).log10();
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let e = if count == 1 { top } else { top * i as f64 / (count - 1) as f64 };
            10f64.powf(e).round() as usize
        })
        .collect();
    out.dedup();
    out
}

/// Least-squares slope of `ln value` against `ln n` over positive values.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, v)| *n > 0 && *v > 0.0)
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
