//! Risk of a learner at one parameter, exact or by Monte Carlo, and the
//! learner-specific prioritized risk `max_theta pi(theta) R(learner, theta)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Family, Learner, LossSpec, ParamGrid};

/// Identifier of the generator behind every Monte Carlo estimate.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Default cap on the number of datasets enumerated exactly.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Datasets per Monte Carlo partition. Partition `k` draws from stream `k`
/// of the seeded generator, so estimates do not depend on the thread count.
const PARTITION: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum RiskMethod {
    Exact,
    MonteCarlo { seed: u64, num_datasets: usize, rng: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    /// Zero for exact evaluation.
    pub std_error: f64,
    pub method: RiskMethod,
}

/// How per-parameter risks are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    Exact { cap: u64 },
    /// `seed` is a root seed; parameter `i` of a grid uses
    /// `derive_seed(seed, &[i])`.
    MonteCarlo { num_datasets: usize, seed: u64 },
}

impl Evaluation {
    pub fn exact() -> Self {
        Evaluation::Exact { cap: DEFAULT_ENUMERATION_CAP }
    }
}

/// Deterministically derives a child seed from a root seed and a path of
/// indices (experiment cell, grid point, ...).
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(root, |acc, &k| {
        let mut rng = ChaCha8Rng::seed_from_u64(acc);
        rng.set_stream(k);
        rng.next_u64()
    })
}

/// `m^n`, or an error when it exceeds `cap`.
pub fn dataset_count(m: usize, n: usize, cap: u64) -> Result<usize> {
    let size = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::EnumerationTooLarge { size, cap });
    }
    Ok(size as usize)
}

/// Calls `visit(dataset, probability)` for every dataset of `n` draws from
/// `masses`, in lexicographic order (first observation most significant).
pub fn for_each_dataset<F>(masses: &[f64], n: usize, cap: u64, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize], f64) -> Result<()>,
{
    let m = masses.len();
    let total = dataset_count(m, n, cap)?;
    let mut data = vec![0usize; n];
    // prefix[i] = probability of data[..i]
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * masses[0];
    }
    for _ in 0..total {
        visit(&data, prefix[n])?;
        // odometer step, then refresh the prefix products that changed
        let mut k = n;
        while k > 0 {
            k -= 1;
            data[k] += 1;
            if data[k] < m {
                break;
            }
            data[k] = 0;
        }
        for i in k..n {
            prefix[i + 1] = prefix[i] * masses[data[i]];
        }
    }
    Ok(())
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Sample standard deviation (N - 1 denominator) over sqrt(N).
    pub std_error: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Default)]
struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.count == 0 {
            return other;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Welford {
            count,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * w,
        }
    }
}

fn cdf(masses: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    masses
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Averages `f` over `num_datasets` datasets of `n` i.i.d. draws from
/// `masses`.
pub fn mc_expectation<F>(masses: &[f64], n: usize, num_datasets: usize, seed: u64, f: F) -> Result<Moments>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if num_datasets < 2 {
        return Err(Error::InvalidParameter("monte carlo needs at least 2 datasets".into()));
    }
    let cdf = cdf(masses);
    let parts = num_datasets.div_ceil(PARTITION);
    let stats = (0..parts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = PARTITION.min(num_datasets - k * PARTITION);
            let mut data = vec![0usize; n];
            let mut w = Welford::default();
            for _ in 0..count {
                for x in data.iter_mut() {
                    *x = draw(&cdf, &mut rng);
                }
                w.push(f(&data)?);
            }
            Ok(w)
        })
        .collect::<Result<Vec<Welford>>>()?;
    let total = stats.into_iter().fold(Welford::default(), Welford::merge);
    let var = (total.m2 / (total.count - 1) as f64).max(0.0);
    Ok(Moments { mean: total.mean, std_error: (var / total.count as f64).sqrt(), count: total.count })
}

/// Exact risk `sum_x P_theta^n(x) L(theta, learner(x))`.
pub fn risk_exact(family: &Family, theta: &[f64], learner: &Learner, loss: &LossSpec, n: usize, cap: u64) -> Result<RiskEstimate> {
    let masses = family.masses(theta)?;
    let mut total = 0.0;
    for_each_dataset(&masses, n, cap, |data, p| {
        if p > 0.0 {
            total += p * loss.eval(theta, &learner.act(data))?;
        }
        Ok(())
    })?;
    Ok(RiskEstimate { value: total, std_error: 0.0, method: RiskMethod::Exact })
}

pub fn risk_mc(
    family: &Family,
    theta: &[f64],
    learner: &Learner,
    loss: &LossSpec,
    n: usize,
    num_datasets: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    let masses = family.masses(theta)?;
    let m = mc_expectation(&masses, n, num_datasets, seed, |data| loss.eval(theta, &learner.act(data)))?;
    Ok(RiskEstimate {
        value: m.mean,
        std_error: m.std_error,
        method: RiskMethod::MonteCarlo { seed, num_datasets, rng: RNG_ALGORITHM },
    })
}

/// Monte Carlo estimate of `R(b, theta) - R(a, theta)` from the same
/// datasets, with the standard error of the paired differences.
#[allow(clippy::too_many_arguments)]
pub fn paired_difference_mc(
    family: &Family,
    theta: &[f64],
    a: &Learner,
    b: &Learner,
    loss: &LossSpec,
    n: usize,
    num_datasets: usize,
    seed: u64,
) -> Result<Moments> {
    let masses = family.masses(theta)?;
    mc_expectation(&masses, n, num_datasets, seed, |data| {
        Ok(loss.eval(theta, &b.act(data))? - loss.eval(theta, &a.act(data))?)
    })
}

pub fn evaluate_risk(
    family: &Family,
    theta: &[f64],
    learner: &Learner,
    loss: &LossSpec,
    n: usize,
    eval: Evaluation,
    index: usize,
) -> Result<RiskEstimate> {
    match eval {
        Evaluation::Exact { cap } => risk_exact(family, theta, learner, loss, n, cap),
        Evaluation::MonteCarlo { num_datasets, seed } => {
            risk_mc(family, theta, learner, loss, n, num_datasets, derive_seed(seed, &[index as u64]))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrioritizedRisk {
    pub value: f64,
    pub argmax: usize,
    pub theta: Vec<f64>,
    /// `pi(theta*) * std_error(R(theta*))`.
    pub std_error: f64,
    /// Per grid point risk, unweighted.
    pub risks: Vec<RiskEstimate>,
}

/// `max_i pi_i R(learner, theta_i)`, ties to the smallest index.
pub fn learner_prioritized_risk(
    grid: &ParamGrid,
    family: &Family,
    learner: &Learner,
    loss: &LossSpec,
    n: usize,
    eval: Evaluation,
) -> Result<PrioritizedRisk> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty parameter grid".into()));
    }
    let risks = (0..grid.len())
        .into_par_iter()
        .map(|i| evaluate_risk(family, grid.point(i), learner, loss, n, eval, i))
        .collect::<Result<Vec<_>>>()?;
    let mut argmax = 0;
    let mut value = f64::NEG_INFINITY;
    for (i, r) in risks.iter().enumerate() {
        let v = grid.prior(i) * r.value;
        if v > value {
            value = v;
            argmax = i;
        }
    }
    Ok(PrioritizedRisk {
        value,
        argmax,
        theta: grid.point(argmax).to_vec(),
        std_error: grid.prior(argmax) * risks[argmax].std_error,
        risks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Action, Metric, Prior};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::function::factorial::binomial;

    fn abs() -> LossSpec {
        LossSpec::Pseudometric(Metric::AbsDiff)
    }

    #[test]
    fn exact_risk_examples() {
        let f = Family::Bernoulli;
        let cap = DEFAULT_ENUMERATION_CAP;
        let r = risk_exact(&f, &[0.5], &Learner::constant(0.5), &abs(), 3, cap).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(risk_exact(&f, &[1.0], &Learner::empirical_mean(), &abs(), 2, cap).unwrap().value, 0.0);
        let r = risk_exact(&f, &[0.5], &Learner::empirical_mean(), &abs(), 2, cap).unwrap();
        assert_relative_eq!(r.value, 0.25, epsilon = 1e-15);
        assert_eq!(r.method, RiskMethod::Exact);
    }

    #[test]
    fn exact_risk_respects_cap() {
        let r = risk_exact(&Family::Bernoulli, &[0.5], &Learner::empirical_mean(), &abs(), 21, DEFAULT_ENUMERATION_CAP);
        assert!(matches!(r, Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn datasets_enumerate_lexicographically() {
        let mut seen = Vec::new();
        for_each_dataset(&[0.2, 0.3, 0.5], 2, 100, |d, p| {
            seen.push((d.to_vec(), p));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 9);
        assert_eq!(seen[1].0, vec![0, 1]);
        assert_eq!(seen[3].0, vec![1, 0]);
        assert_relative_eq!(seen[5].1, 0.3 * 0.5);
        assert_relative_eq!(seen.iter().map(|s| s.1).sum::<f64>(), 1.0, epsilon = 1e-15);
        let mut count = 0;
        for_each_dataset(&[0.5, 0.5], 0, 10, |d, p| {
            assert!(d.is_empty());
            assert_eq!(p, 1.0);
            count += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(count, 1);
    }

    #[test]
    fn mc_constant_learner_has_zero_error() {
        let r = risk_mc(&Family::Bernoulli, &[0.3], &Learner::constant(0.3), &abs(), 7, 1000, 99).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.method, RiskMethod::MonteCarlo { seed: 99, num_datasets: 1000, rng: "chacha8" });
    }

    #[test]
    fn mc_matches_exact_and_is_deterministic() {
        let run = || risk_mc(&Family::Bernoulli, &[0.5], &Learner::empirical_mean(), &abs(), 2, 1_000_000, 1).unwrap();
        let a = run();
        assert!((a.value - 0.25).abs() <= 3.0 * a.std_error, "{a:?}");
        let b = run();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn mc_is_independent_of_thread_count() {
        let run = || risk_mc(&Family::Bernoulli, &[0.37], &Learner::empirical_mean(), &abs(), 5, 50_000, 3).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
        assert_eq!(single.value.to_bits(), many.value.to_bits());
        assert_eq!(single.std_error.to_bits(), many.std_error.to_bits());
    }

    #[test]
    fn mc_rejects_single_dataset() {
        assert!(risk_mc(&Family::Bernoulli, &[0.5], &Learner::empirical_mean(), &abs(), 2, 1, 0).is_err());
    }

    #[test]
    fn mc_converges_on_small_instances() {
        let zipf = Family::zipf(4).unwrap();
        let cases: Vec<(Family, f64, Learner, usize)> = vec![
            (Family::Bernoulli, 0.2, Learner::empirical_mean(), 6),
            (Family::Bernoulli, 0.7, Learner::beta_posterior_mean(1.0, 2.0), 13),
            (zipf.clone(), 1.5, Learner::new("rank mean", |d| Action::Scalar(d.iter().sum::<usize>() as f64 / 4.0)), 5),
            (zipf, 0.5, Learner::new("first", |d| Action::Scalar(d[0] as f64)), 6),
        ];
        for (k, (f, t, l, n)) in cases.into_iter().enumerate() {
            let exact = risk_exact(&f, &[t], &l, &abs(), n, 10_000).unwrap().value;
            let mc = risk_mc(&f, &[t], &l, &abs(), n, 100_000, k as u64).unwrap();
            assert!((mc.value - exact).abs() <= 4.0 * mc.std_error, "case {k}: {exact} vs {mc:?}");
        }
    }

    #[test]
    fn derived_seeds_differ_and_repeat() {
        let a = derive_seed(7, &[1, 2]);
        assert_eq!(a, derive_seed(7, &[1, 2]));
        assert_ne!(a, derive_seed(7, &[2, 1]));
        assert_ne!(a, derive_seed(8, &[1, 2]));
        assert_eq!(derive_seed(7, &[]), 7);
    }

    #[test]
    fn prioritized_risk_single_point() {
        let grid = ParamGrid::scalar(vec![0.5], vec![2.0]).unwrap();
        let r = learner_prioritized_risk(&grid, &Family::Bernoulli, &Learner::empirical_mean(), &abs(), 2, Evaluation::exact()).unwrap();
        assert_relative_eq!(r.value, 0.5, epsilon = 1e-15);
        assert_eq!(r.theta, vec![0.5]);
    }

    #[test]
    fn prioritized_risk_matches_binomial_reimplementation() {
        let pts: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let grid = ParamGrid::from_prior(&pts, &Prior::Beta { alpha: 1.0, beta: 2.0 }).unwrap();
        let n = 10;
        let r = learner_prioritized_risk(&grid, &Family::Bernoulli, &Learner::empirical_mean(), &abs(), n, Evaluation::exact()).unwrap();
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &t) in pts.iter().enumerate() {
            let risk: f64 = (0..=n)
                .map(|s| {
                    binomial(n as u64, s as u64) * t.powi(s as i32) * (1.0 - t).powi((n - s) as i32)
                        * (t - s as f64 / n as f64).abs()
                })
                .sum();
            let v = 2.0 * (1.0 - t) * risk;
            if v > best.0 {
                best = (v, i);
            }
        }
        assert_relative_eq!(r.value, best.0, epsilon = 1e-12);
        assert_eq!(r.argmax, best.1);
    }

    #[test]
    fn prioritized_risk_ties_go_to_first_point() {
        let grid = ParamGrid::scalar(vec![0.25, 0.75], vec![1.0, 1.0]).unwrap();
        let r = learner_prioritized_risk(&grid, &Family::Bernoulli, &Learner::constant(0.5), &abs(), 1, Evaluation::exact()).unwrap();
        assert_eq!(r.argmax, 0);
    }

    #[test]
    fn uniform_prior_gives_worst_case_risk() {
        let grid = ParamGrid::unit_interval(11, &Prior::Uniform).unwrap();
        let l = Learner::beta_posterior_mean(1.0, 1.0);
        let r = learner_prioritized_risk(&grid, &Family::Bernoulli, &l, &abs(), 4, Evaluation::exact()).unwrap();
        let worst = r.risks.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.value, worst);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prioritized_risk_orderings(priors in prop::collection::vec(0.01f64..1.0, 5), n in 0usize..6, a in 0.5f64..3.0) {
            let pts = vec![0.1, 0.3, 0.5, 0.7, 0.9];
            let l = Learner::beta_posterior_mean(a, 1.0);
            // pi <= 1: prioritized risk below worst-case risk
            let g = ParamGrid::scalar(pts.clone(), priors.clone()).unwrap();
            let r = learner_prioritized_risk(&g, &Family::Bernoulli, &l, &abs(), n, Evaluation::exact()).unwrap();
            let worst = r.risks.iter().map(|e| e.value).fold(0.0, f64::max);
            prop_assert!(r.value <= worst + 1e-15);
            // sum pi = 1: max below average
            let s: f64 = priors.iter().sum();
            let norm: Vec<f64> = priors.iter().map(|p| p / s).collect();
            let g = ParamGrid::scalar(pts, norm.clone()).unwrap();
            let r = learner_prioritized_risk(&g, &Family::Bernoulli, &l, &abs(), n, Evaluation::exact()).unwrap();
            let avg: f64 = r.risks.iter().zip(&norm).map(|(e, p)| p * e.value).sum();
            prop_assert!(r.value <= avg + 1e-15);
        }
    }
}
