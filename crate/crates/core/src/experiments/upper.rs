//! Monte Carlo learner-specific prioritized risk of Beta posterior-mean
//! learners on the Bernoulli problem.
//!
//! All learners see the same datasets (common random numbers): the cell
//! for sample size `n` and grid point `i` uses seed
//! `derive_seed(derive_seed(root, [n]), [i])`.

use crate::error::Result;
use crate::model::{Family, Learner, LossSpec, Metric, ParamGrid, Prior};
use crate::report::CurveSeries;
use crate::risk::{derive_seed, learner_prioritized_risk, paired_difference_mc, Evaluation, PrioritizedRisk};

pub const DEFAULT_NUM_DATASETS: usize = 10_000;
pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct UpperConfig {
    pub n_list: Vec<usize>,
    pub num_datasets: usize,
    pub seed: u64,
    pub grid_points: usize,
    /// The prior defining the prioritized risk.
    pub prior: Prior,
}

impl Default for UpperConfig {
    fn default() -> Self {
        Self {
            n_list: super::DEFAULT_N_LIST.to_vec(),
            num_datasets: DEFAULT_NUM_DATASETS,
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            prior: Prior::Beta { alpha: 1.0, beta: 2.0 },
        }
    }
}

/// (label, alpha, beta) of the compared posterior-mean learners.
pub const LEARNERS: [(&str, f64, f64); 3] = [
    ("bayes, uniform prior", 1.0, 1.0),
    ("bayes, prior Beta(1,2)", 1.0, 2.0),
    ("custom, Beta(1,4)", 1.0, 4.0),
];

/// `worse - better` in learner-specific prioritized risk at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub n: usize,
    pub better: usize,
    pub worse: usize,
    /// Difference of the two Monte Carlo maxima.
    pub difference: f64,
    /// `sqrt(se_better^2 + se_worse^2)`, treating the maxima as independent.
    pub independent_se: f64,
    /// `pi(theta*) (R_worse - R_better)(theta*)` at the better learner's
    /// argmax, from the shared datasets; a lower bound on the difference of
    /// the true maxima in expectation.
    pub paired_lower: f64,
    pub paired_se: f64,
}

impl Separation {
    /// Whether the paired lower bound exceeds `k` paired standard errors.
    pub fn significant(&self, k: f64) -> bool {
        self.paired_lower > k * self.paired_se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperResult {
    pub curves: Vec<CurveSeries>,
    /// `risks[learner][k]` for `n_list[k]`.
    pub risks: Vec<Vec<PrioritizedRisk>>,
    /// Beta(1,2) vs uniform and Beta(1,4) vs Beta(1,2) at every `n`.
    pub separations: Vec<Separation>,
}

pub fn learners() -> Vec<Learner> {
    LEARNERS.iter().map(|&(_, a, b)| Learner::beta_posterior_mean(a, b)).collect()
}

pub fn upper_bound_experiment(cfg: &UpperConfig) -> Result<UpperResult> {
    let grid = ParamGrid::unit_interval(cfg.grid_points, &cfg.prior)?;
    let family = Family::Bernoulli;
    let loss = LossSpec::Pseudometric(Metric::AbsDiff);
    let ls = learners();
    let mut risks = vec![Vec::new(); ls.len()];
    let mut curves: Vec<CurveSeries> = LEARNERS.iter().map(|(l, _, _)| CurveSeries::new("upper", *l)).collect();
    let mut separations = Vec::new();
    for &n in &cfg.n_list {
        let cell_seed = derive_seed(cfg.seed, &[n as u64]);
        let eval = Evaluation::MonteCarlo { num_datasets: cfg.num_datasets, seed: cell_seed };
        for (k, l) in ls.iter().enumerate() {
            let r = learner_prioritized_risk(&grid, &family, l, &loss, n, eval)?;
            curves[k].push(n, r.value, r.std_error)?;
            risks[k].push(r);
        }
        for (better, worse) in [(1, 0), (2, 1)] {
            let rb = risks[better].last().expect("pushed above");
            let rw = risks[worse].last().expect("pushed above");
            let i = rb.argmax;
            let seed = derive_seed(cell_seed, &[i as u64]);
            let d = paired_difference_mc(&family, grid.point(i), &ls[better], &ls[worse], &loss, n, cfg.num_datasets, seed)?;
            let pi = grid.prior(i);
            separations.push(Separation {
                n,
                better,
                worse,
                difference: rw.value - rb.value,
                independent_se: rb.std_error.hypot(rw.std_error),
                paired_lower: pi * d.mean,
                paired_se: pi * d.std_error,
            });
        }
    }
    Ok(UpperResult { curves, risks, separations })
}
