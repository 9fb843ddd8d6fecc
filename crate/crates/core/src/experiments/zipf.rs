//! Generalized Fano bounds for agents facing Zipf-distributed environments
//! with action sets of different sizes.
//!
//! Trained policies are not available, so the default loss is synthetic:
//! action `a_k` is a policy specialized to exponent `theta_k`, and in
//! environment rank `x` it pays `min(T, base + slope * 100 |F_theta(x) -
//! F_theta_k(x)|)` where `F` is the Zipf CDF, i.e. the percentile mismatch
//! between the true and the assumed exponent.

use crate::bounds::gfano::{gfano_prioritized_lower, GFanoInstance};
use crate::bounds::BoundResult;
use crate::error::{Error, Result};
use crate::model::{Family, LossMatrix, ParamGrid, Prior};
use crate::report::CurveSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLoss {
    pub cap: f64,
    pub base: f64,
    pub slope: f64,
}

impl Default for SyntheticLoss {
    fn default() -> Self {
        Self { cap: 50.0, base: 5.0, slope: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfConfig {
    /// Number of environments (ranks).
    pub support: usize,
    /// Exponents `max_exponent * i / num_thetas` for `i = 1..=num_thetas`.
    pub num_thetas: usize,
    pub max_exponent: f64,
    pub prior_center: f64,
    pub action_sizes: Vec<usize>,
    pub n_list: Vec<usize>,
    pub loss: SyntheticLoss,
}

impl Default for ZipfConfig {
    fn default() -> Self {
        Self {
            support: 400,
            num_thetas: 50,
            max_exponent: 5.0,
            prior_center: 2.5,
            action_sizes: vec![5, 15, 50],
            n_list: super::log_spaced_sizes(1000, 10),
            loss: SyntheticLoss::default(),
        }
    }
}

impl ZipfConfig {
    pub fn thetas(&self) -> Vec<f64> {
        (1..=self.num_thetas).map(|i| self.max_exponent * i as f64 / self.num_thetas as f64).collect()
    }

    pub fn grid(&self) -> Result<ParamGrid> {
        ParamGrid::from_prior(&self.thetas(), &Prior::GaussianBump { center: self.prior_center })
    }
}

fn cumulative(masses: &[f64]) -> Vec<f64> {
    masses
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Loss matrix over `thetas` x (policies specialized to `thetas`).
pub fn synthetic_loss(thetas: &[f64], support: usize, params: &SyntheticLoss) -> Result<LossMatrix> {
    let family = Family::zipf(support)?;
    let masses = thetas.iter().map(|&t| family.masses(&[t])).collect::<Result<Vec<_>>>()?;
    let cdfs: Vec<Vec<f64>> = masses.iter().map(|m| cumulative(m)).collect();
    let rows = (0..thetas.len())
        .map(|i| {
            (0..thetas.len())
                .map(|k| {
                    masses[i]
                        .iter()
                        .zip(cdfs[i].iter().zip(&cdfs[k]))
                        .map(|(p, (fi, fk))| p * params.cap.min(params.base + params.slope * 100.0 * (fi - fk).abs()))
                        .sum()
                })
                .collect()
        })
        .collect();
    let labels = thetas.iter().map(|t| format!("policy@{t}")).collect();
    LossMatrix::new(thetas.to_vec(), labels, rows)
}

/// Nested action subsets: each size picks, from the next larger subset,
/// the unused point nearest to each target `max (i - 1/2) / k` (ties to
/// the smaller point). Returned in the order of `sizes`.
pub fn nested_subsets(thetas: &[f64], max: f64, sizes: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]));
    let mut out = vec![Vec::new(); sizes.len()];
    let mut pool: Vec<usize> = (0..thetas.len()).collect();
    for idx in order {
        let k = sizes[idx];
        if k == 0 || k > pool.len() {
            return Err(Error::InvalidParameter(format!("cannot pick {k} actions from {}", pool.len())));
        }
        let mut chosen = Vec::with_capacity(k);
        for i in 1..=k {
            let target = max * (i as f64 - 0.5) / k as f64;
            let best = pool
                .iter()
                .copied()
                .filter(|c| !chosen.contains(c))
                .min_by(|&a, &b| (thetas[a] - target).abs().total_cmp(&(thetas[b] - target).abs()).then(a.cmp(&b)))
                .expect("pool larger than k");
            chosen.push(best);
        }
        chosen.sort_unstable();
        pool = chosen.clone();
        out[idx] = chosen;
    }
    Ok(out)
}

/// One curve per action-set size. A supplied loss matrix replaces the
/// synthetic one; its rows must match the exponent grid.
pub fn zipf_experiment(cfg: &ZipfConfig, loss: Option<LossMatrix>) -> Result<(Vec<CurveSeries>, Vec<Vec<BoundResult>>)> {
    let grid = cfg.grid()?;
    let thetas = grid.scalar_points().unwrap_or_default().to_vec();
    let full = match loss {
        Some(l) => l,
        None => synthetic_loss(&thetas, cfg.support, &cfg.loss)?,
    };
    let base = GFanoInstance::uniform(grid, Family::zipf(cfg.support)?, full.clone(), 0)?;
    let subsets = if full.num_actions() == thetas.len() {
        nested_subsets(&thetas, cfg.max_exponent, &cfg.action_sizes)?
    } else {
        // an external matrix: nest by column order
        cfg.action_sizes.iter().map(|&k| (0..k.min(full.num_actions())).collect()).collect()
    };
    let mut curves = Vec::new();
    let mut results = Vec::new();
    for (size, cols) in cfg.action_sizes.iter().zip(subsets) {
        let inst = base.with_loss(full.select_actions(&cols)?)?;
        let mut curve = CurveSeries::new("zipf", format!("|A| = {size}"));
        let mut rs = Vec::new();
        for &n in &cfg.n_list {
            let r = gfano_prioritized_lower(&inst.with_n(n))?;
            curve.push(n, r.value, 0.0)?;
            rs.push(r);
        }
        curves.push(curve);
        results.push(rs);
    }
    Ok((curves, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_peak_and_uniform_environment() {
        assert_eq!(Prior::GaussianBump { center: 2.5 }.eval(2.5), 1.0);
        let p = Family::zipf(400).unwrap().masses(&[0.0]).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 400.0).abs() < 1e-15));
    }

    #[test]
    fn default_subsets_are_nested() {
        let cfg = ZipfConfig::default();
        let t = cfg.thetas();
        let s = nested_subsets(&t, 5.0, &[5, 15, 50]).unwrap();
        let pts = |v: &Vec<usize>| v.iter().map(|&i| (t[i] * 10.0).round() / 10.0).collect::<Vec<_>>();
        assert_eq!(pts(&s[0]), vec![0.5, 1.5, 2.5, 3.5, 4.5]);
        assert_eq!(pts(&s[1]), vec![0.2, 0.5, 0.8, 1.2, 1.5, 1.8, 2.2, 2.5, 2.8, 3.2, 3.5, 3.8, 4.2, 4.5, 4.8]);
        assert!(s[0].iter().all(|i| s[1].contains(i)));
        assert_eq!(s[2].len(), 50);
    }

    #[test]
    fn synthetic_loss_shape() {
        let l = synthetic_loss(&[0.5, 2.5, 4.5], 50, &SyntheticLoss::default()).unwrap();
        for i in 0..3 {
            assert!((l.get(i, i) - 5.0).abs() < 1e-12);
            for k in 0..3 {
                assert!(l.get(i, k) >= 5.0 - 1e-12 && l.get(i, k) <= 50.0);
            }
        }
        assert!(l.get(0, 2) > l.get(0, 1));
    }

    #[test]
    fn small_sets_dominate() {
        let cfg = ZipfConfig { support: 60, n_list: vec![1, 10], ..ZipfConfig::default() };
        let (curves, _) = zipf_experiment(&cfg, None).unwrap();
        for w in curves.windows(2) {
            for (a, b) in w[0].points.iter().zip(&w[1].points) {
                assert!(a.value >= b.value * (1.0 - 1e-9) - 1e-12);
            }
        }
    }
}
