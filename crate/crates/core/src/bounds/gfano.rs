//! Generalized Fano lower bound for unbounded losses over finite parameter
//! and action sets:
//! `R_Bayes(p, L) >= (rho*_lambda - I(theta; X^n)) / lambda` with
//! `rho*_lambda = -max_a ln sum_theta p(theta) exp(-lambda L(theta, a))`.
//! The prioritized version replaces `L` by `pi L`.

use rayon::prelude::*;

use super::{BoundMethod, BoundResult, InfoRoute, Witness};
use crate::divergence::{entropy, family_rows, mixture_information, validate_simplex};
use crate::error::{Error, Result};
use crate::model::{Family, LossMatrix, ParamGrid};
use crate::optimize::golden_section_max;

/// Exponents `k` of the lambda grid `2^k`.
pub const LAMBDA_EXPONENTS: std::ops::RangeInclusive<i32> = -10..=10;

/// Relative tolerance of the golden-section refinement in lambda.
pub const LAMBDA_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GFanoInstance {
    grid: ParamGrid,
    weights: Vec<f64>,
    family: Family,
    loss: LossMatrix,
    n: usize,
    /// Single-observation masses per grid point.
    rows: Vec<Vec<f64>>,
}

impl GFanoInstance {
    /// Loss rows are matched to grid points by index; for scalar grids the
    /// row labels must equal the points.
    pub fn new(grid: ParamGrid, weights: Vec<f64>, family: Family, loss: LossMatrix, n: usize) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::LengthMismatch(weights.len(), grid.len()));
        }
        validate_simplex(&weights)?;
        if loss.num_params() != grid.len() {
            return Err(Error::LengthMismatch(loss.num_params(), grid.len()));
        }
        if let Some(pts) = grid.scalar_points() {
            if let Some(i) = (0..pts.len()).find(|&i| loss.row_index(pts[i]) != Some(i)) {
                return Err(Error::UnknownParameter(vec![pts[i]]));
            }
        }
        let rows = family_rows(&family, &grid)?;
        Ok(Self { grid, weights, family, loss, n, rows })
    }

    /// Uniform weights over the grid.
    pub fn uniform(grid: ParamGrid, family: Family, loss: LossMatrix, n: usize) -> Result<Self> {
        let k = grid.len();
        Self::new(grid, vec![1.0 / k as f64; k], family, loss, n)
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn loss(&self) -> &LossMatrix {
        &self.loss
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn with_loss(&self, loss: LossMatrix) -> Result<Self> {
        Self::new(self.grid.clone(), self.weights.clone(), self.family.clone(), loss, self.n)
    }

    /// Smaller of the mixture bound `n sum p KL(P_t || P_bar)` and the
    /// entropy `H(p)`; both bound `I(theta; X^n)` from above.
    pub fn info_upper(&self) -> Result<(f64, InfoRoute)> {
        let mix = mixture_information(&self.rows, &self.weights, self.n)?;
        let h = entropy(&self.weights);
        Ok(if h < mix { (h, InfoRoute::Entropy) } else { (mix, InfoRoute::Mixture) })
    }

    fn effective_loss(&self, i: usize, a: usize, weighted: bool) -> f64 {
        let l = self.loss.get(i, a);
        if weighted {
            self.grid.prior(i) * l
        } else {
            l
        }
    }
}

/// `-max_a ln sum_theta p(theta) exp(-lambda L~(theta, a))`, with a
/// max-shifted log-sum-exp.
pub fn rho_star(inst: &GFanoInstance, lambda: f64, weighted: bool) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} must be positive")));
    }
    let k = inst.loss.num_actions();
    if k == 0 {
        return Err(Error::EmptyActionSet);
    }
    let mut best = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(inst.grid.len());
    for a in 0..k {
        terms.clear();
        for (i, &p) in inst.weights.iter().enumerate() {
            if p > 0.0 {
                terms.push(p.ln() - lambda * inst.effective_loss(i, a, weighted));
            }
        }
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
        best = best.max(lse);
    }
    Ok(-best)
}

fn bound_at(inst: &GFanoInstance, lambda: f64, weighted: bool, info: (f64, InfoRoute)) -> Result<BoundResult> {
    let witness = Witness::GFano {
        lambda,
        rho_star: rho_star(inst, lambda, weighted)?,
        info_upper: info.0,
        info_route: info.1,
        weighted,
        num_actions: inst.loss.num_actions(),
    };
    Ok(BoundResult { method: BoundMethod::GFano, value: witness.replay(), n: inst.n, witness })
}

/// `[(rho*_lambda - I_upper) / lambda]_+`, a lower bound on the Bayes risk
/// under `p` (prior-weighted loss when `weighted`).
pub fn gfano_bayes_lower(inst: &GFanoInstance, lambda: f64, weighted: bool) -> Result<BoundResult> {
    bound_at(inst, lambda, weighted, inst.info_upper()?)
}

/// Maximizes the weighted bound over `lambda = 2^k`, `k = -10..10`, then
/// refines by golden-section search in `lambda` between the grid
/// neighbours of the best point.
pub fn gfano_prioritized_lower(inst: &GFanoInstance) -> Result<BoundResult> {
    let info = inst.info_upper()?;
    let grid: Vec<f64> = LAMBDA_EXPONENTS.map(|k| 2f64.powi(k)).collect();
    let results = grid
        .par_iter()
        .map(|&l| bound_at(inst, l, true, info))
        .collect::<Result<Vec<_>>>()?;
    let mut bi = 0;
    for (i, r) in results.iter().enumerate() {
        if r.value > results[bi].value {
            bi = i;
        }
    }
    let mut best = results[bi].clone();
    if best.value > 0.0 {
        let lo = grid[bi.saturating_sub(1)];
        let hi = grid[(bi + 1).min(grid.len() - 1)];
        let f = |l: f64| bound_at(inst, l, true, info).map_or(f64::NEG_INFINITY, |r| r.value);
        let (l, v) = golden_section_max(f, lo, hi, LAMBDA_REL_TOL, 500);
        if v > best.value {
            best = bound_at(inst, l, true, info)?;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Prior;
    use approx::assert_relative_eq;

    fn instance(rows: Vec<Vec<f64>>, pts: Vec<f64>, priors: Vec<f64>, family: Family, n: usize) -> GFanoInstance {
        let k = rows[0].len();
        let labels = (0..k).map(|a| format!("a{a}")).collect();
        let loss = LossMatrix::new(pts.clone(), labels, rows).unwrap();
        let grid = ParamGrid::scalar(pts, priors).unwrap();
        GFanoInstance::uniform(grid, family, loss, n).unwrap()
    }

    #[test]
    fn zero_loss_gives_zero() {
        let inst = instance(vec![vec![0.0, 0.0]; 3], vec![0.2, 0.5, 0.8], vec![1.0; 3], Family::Bernoulli, 2);
        for l in [0.1, 1.0, 30.0] {
            assert_eq!(rho_star(&inst, l, false).unwrap(), 0.0);
        }
        assert_eq!(gfano_prioritized_lower(&inst).unwrap().value, 0.0);
    }

    #[test]
    fn single_atom_picks_smallest_loss() {
        let inst = instance(vec![vec![2.0, 5.0]], vec![0.5], vec![1.0], Family::Bernoulli, 1);
        assert_relative_eq!(rho_star(&inst, 1.0, false).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_loss_without_data() {
        let inst = instance(vec![vec![3.0]; 3], vec![0.1, 0.4, 0.9], vec![1.0; 3], Family::Bernoulli, 0);
        for l in [0.25, 1.0, 4.0] {
            let r = gfano_bayes_lower(&inst, l, false).unwrap();
            assert_relative_eq!(r.value, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rho_star_non_decreasing_in_lambda() {
        let inst = instance(
            vec![vec![1.0, 0.0, 4.0], vec![0.5, 2.0, 0.1], vec![3.0, 1.0, 0.0]],
            vec![0.2, 0.5, 0.8],
            vec![1.0, 2.0, 0.5],
            Family::Bernoulli,
            1,
        );
        let mut prev = f64::NEG_INFINITY;
        for k in -10..=10 {
            let r = rho_star(&inst, 2f64.powi(k), true).unwrap();
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn identical_distributions_crossed_optima() {
        let same = Family::categorical(vec![0.0, 1.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let inst = instance(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 1.0], vec![1.0, 1.0], same, 4);
        let r = gfano_prioritized_lower(&inst).unwrap();
        assert!(r.value > 0.0);
        // with no information the optimum is max_lambda rho*/lambda
        let grid_best = LAMBDA_EXPONENTS.map(|k| rho_star(&inst, 2f64.powi(k), true).unwrap() / 2f64.powi(k)).fold(0.0, f64::max);
        assert!(r.value >= grid_best);
        assert_eq!(r.replay(), r.value);
    }

    #[test]
    fn optimizer_dominates_its_grid() {
        let inst = instance(
            vec![vec![1.0, 0.0, 4.0], vec![0.5, 2.0, 0.1], vec![3.0, 1.0, 0.0]],
            vec![0.2, 0.5, 0.8],
            vec![1.0, 2.0, 0.5],
            Family::Bernoulli,
            1,
        );
        let best = gfano_prioritized_lower(&inst).unwrap().value;
        for k in LAMBDA_EXPONENTS {
            assert!(best >= gfano_bayes_lower(&inst, 2f64.powi(k), true).unwrap().value);
        }
    }

    #[test]
    fn dropping_actions_never_lowers_the_bound() {
        let inst = instance(
            vec![vec![1.0, 0.0, 4.0, 2.0], vec![0.5, 2.0, 0.1, 1.0], vec![3.0, 1.0, 0.0, 0.7]],
            vec![0.2, 0.5, 0.8],
            vec![1.0, 2.0, 0.5],
            Family::Bernoulli,
            1,
        );
        let full = gfano_prioritized_lower(&inst).unwrap().value;
        for cols in [vec![0, 1, 2], vec![1, 3], vec![2]] {
            let sub = inst.with_loss(inst.loss().select_actions(&cols).unwrap()).unwrap();
            assert!(gfano_prioritized_lower(&sub).unwrap().value >= full * (1.0 - 1e-9));
        }
    }

    #[test]
    fn info_upper_is_monotone_and_capped() {
        let grid = ParamGrid::from_prior(&[0.1, 0.5, 0.9], &Prior::Uniform).unwrap();
        let loss = LossMatrix::absolute_error(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9]).unwrap();
        let inst = GFanoInstance::uniform(grid, Family::Bernoulli, loss, 0).unwrap();
        let mut prev = -1.0;
        for n in 0..50 {
            let (i, _) = inst.with_n(n).info_upper().unwrap();
            assert!(i >= prev && i <= 3f64.ln() + 1e-15);
            prev = i;
        }
        assert_eq!(inst.with_n(1000).info_upper().unwrap().1, InfoRoute::Entropy);
    }

    #[test]
    fn rejects_mismatched_loss_rows() {
        let grid = ParamGrid::from_prior(&[0.1, 0.5], &Prior::Uniform).unwrap();
        let loss = LossMatrix::absolute_error(&[0.1, 0.6], &[0.0]).unwrap();
        assert!(GFanoInstance::uniform(grid, Family::Bernoulli, loss, 1).is_err());
    }
}
