//! Brute-force ground truth on tiny finite instances: exact Bayes risk,
//! prioritized risk minimized over every deterministic learner, optimal
//! test error and exact mutual information.
//!
//! Randomized learners are not enumerated, so the enumerated prioritized
//! risk can only overstate the true infimum; every validity check built on
//! it is one-sided (bound <= enumerated value).

use rayon::prelude::*;

use crate::divergence::{kl_masses, product_table, validate_simplex, DEFAULT_PRODUCT_CAP};
use crate::error::{Error, Result};
use crate::model::{Action, Family, Learner, LossMatrix, ParamGrid};
use crate::risk::dataset_count;

/// Cap on datasets and on enumerated learners.
pub const ORACLE_CAP: u64 = 1_000_000;

/// Grid with information weights `p`, a finite family, a loss matrix whose
/// rows follow the grid and `n`, with every `P_theta^n` tabulated.
#[derive(Debug, Clone)]
pub struct FiniteInstance {
    grid: ParamGrid,
    weights: Vec<f64>,
    family: Family,
    loss: LossMatrix,
    n: usize,
    /// `tables[i][x] = P_{theta_i}^n(x)`, datasets in lexicographic order.
    tables: Vec<Vec<f64>>,
}

impl FiniteInstance {
    pub fn new(grid: ParamGrid, weights: Vec<f64>, family: Family, loss: LossMatrix, n: usize) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::LengthMismatch(weights.len(), grid.len()));
        }
        validate_simplex(&weights)?;
        if loss.num_params() != grid.len() {
            return Err(Error::LengthMismatch(loss.num_params(), grid.len()));
        }
        dataset_count(family.support_size(), n, ORACLE_CAP)?;
        let tables = grid
            .points()
            .map(|t| product_table(&family.masses(t)?, n, ORACLE_CAP))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, weights, family, loss, n, tables })
    }

    /// Estimation instance: actions are the grid points themselves with
    /// absolute-error loss, and uniform weights.
    pub fn estimation(grid: ParamGrid, family: Family, n: usize) -> Result<Self> {
        let pts = grid
            .scalar_points()
            .ok_or_else(|| Error::InvalidParameter("estimation instances need a scalar grid".into()))?
            .to_vec();
        let loss = LossMatrix::absolute_error(&pts, &pts)?;
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

    pub fn num_datasets(&self) -> usize {
        self.tables[0].len()
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

/// `inf_sigma sum_theta p(theta) R(sigma, theta)` under `L` (or `pi L` when
/// `weighted`), attained by the per-dataset posterior-optimal action.
pub fn bayes_risk_exact(inst: &FiniteInstance, weighted: bool) -> f64 {
    let mut total = 0.0;
    for x in 0..inst.num_datasets() {
        let mut best = f64::INFINITY;
        for a in 0..inst.loss.num_actions() {
            let c: f64 = (0..inst.grid.len())
                .map(|i| inst.weights[i] * inst.tables[i][x] * inst.effective_loss(i, a, weighted))
                .sum();
            if c < best {
                best = c;
            }
        }
        total += best;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedRisk {
    pub value: f64,
    /// Action index per dataset (lexicographic order) of a minimizing
    /// learner; the first one in enumeration order on ties.
    pub table: Vec<usize>,
}

impl EnumeratedRisk {
    pub fn learner(&self, support: usize) -> Learner {
        let actions = self.table.iter().map(|&a| Action::Index(a)).collect();
        Learner::from_table("enumerated minimizer", support, actions)
    }
}

fn decode_learner(mut idx: u64, k: usize, len: usize) -> Vec<usize> {
    let mut table = vec![0; len];
    for slot in table.iter_mut().rev() {
        *slot = (idx % k as u64) as usize;
        idx /= k as u64;
    }
    table
}

/// `min over deterministic learners of max_theta pi(theta) R(sigma, theta)`.
pub fn prioritized_risk_enumerated(inst: &FiniteInstance) -> Result<EnumeratedRisk> {
    let k = inst.loss.num_actions();
    let m = inst.num_datasets();
    let count = (k as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if count > ORACLE_CAP as u128 {
        return Err(Error::EnumerationTooLarge { size: count, cap: ORACLE_CAP });
    }
    // contrib[i][x * k + a] = P_i^n(x) L(theta_i, a)
    let contrib: Vec<Vec<f64>> = (0..inst.grid.len())
        .map(|i| (0..m).flat_map(|x| (0..k).map(move |a| (x, a))).map(|(x, a)| inst.tables[i][x] * inst.loss.get(i, a)).collect())
        .collect();
    let eval = |idx: u64| -> f64 {
        let table = decode_learner(idx, k, m);
        (0..inst.grid.len())
            .map(|i| inst.grid.prior(i) * table.iter().enumerate().map(|(x, &a)| contrib[i][x * k + a]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (value, idx) = (0..count as u64)
        .into_par_iter()
        .map(|idx| (eval(idx), idx))
        .reduce(|| (f64::INFINITY, u64::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok(EnumeratedRisk { value, table: decode_learner(idx, k, m) })
}

/// `inf_Psi P(Psi != V)` for `V` uniform over the members:
/// `1 - (1/|V|) sum_x max_v P_v^n(x)`.
pub fn optimal_test_error(rows: &[Vec<f64>], n: usize) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::DegenerateIndexSet(0));
    }
    let tables = rows.iter().map(|r| product_table(r, n, DEFAULT_PRODUCT_CAP)).collect::<Result<Vec<_>>>()?;
    let hit: f64 = (0..tables[0].len()).map(|x| tables.iter().map(|t| t[x]).fold(0.0, f64::max)).sum();
    Ok((1.0 - hit / rows.len() as f64).max(0.0))
}

/// Exact `I(theta; X^n)` by enumeration.
pub fn mutual_information_exact(rows: &[Vec<f64>], weights: &[f64], n: usize) -> Result<f64> {
    if rows.len() != weights.len() {
        return Err(Error::LengthMismatch(rows.len(), weights.len()));
    }
    validate_simplex(weights)?;
    let tables = rows.iter().map(|r| product_table(r, n, DEFAULT_PRODUCT_CAP)).collect::<Result<Vec<_>>>()?;
    let mut mix = vec![0.0; tables[0].len()];
    for (t, w) in tables.iter().zip(weights) {
        for (acc, v) in mix.iter_mut().zip(t) {
            *acc += w * v;
        }
    }
    Ok(tables.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(t, w)| w * kl_masses(t, &mix)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::mixture_information;
    use crate::model::{LossSpec, Prior};
    use crate::risk::{learner_prioritized_risk, Evaluation};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|a| format!("a{a}")).collect()
    }

    fn matrix_instance(pts: Vec<f64>, priors: Vec<f64>, weights: Vec<f64>, family: Family, rows: Vec<Vec<f64>>, n: usize) -> FiniteInstance {
        let loss = LossMatrix::new(pts.clone(), labels(rows[0].len()), rows).unwrap();
        FiniteInstance::new(ParamGrid::scalar(pts, priors).unwrap(), weights, family, loss, n).unwrap()
    }

    #[test]
    fn bayes_examples() {
        let zero = matrix_instance(vec![0.3, 0.6], vec![1.0; 2], vec![0.5; 2], Family::Bernoulli, vec![vec![0.0, 0.0]; 2], 2);
        assert_eq!(bayes_risk_exact(&zero, false), 0.0);
        let id = matrix_instance(vec![0.3, 0.6], vec![1.0; 2], vec![0.5; 2], Family::Bernoulli, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 0);
        assert_relative_eq!(bayes_risk_exact(&id, false), 0.5);
    }

    #[test]
    fn bayes_non_increasing_in_n() {
        let rows = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let mut prev = f64::INFINITY;
        for n in 0..=3 {
            let inst = matrix_instance(vec![0.2, 0.5, 0.8], vec![1.0, 0.5, 2.0], vec![0.2, 0.3, 0.5], Family::Bernoulli, rows.clone(), n);
            let b = bayes_risk_exact(&inst, true);
            assert!(b <= prev + 1e-15);
            prev = b;
        }
    }

    #[test]
    fn single_action_is_its_constant_learner() {
        let inst = matrix_instance(vec![0.2, 0.5, 0.8], vec![1.0, 0.5, 2.0], vec![1.0 / 3.0; 3], Family::Bernoulli, vec![vec![1.0], vec![3.0], vec![0.5]], 2);
        let r = prioritized_risk_enumerated(&inst).unwrap();
        assert_relative_eq!(r.value, 1.5);
        assert_eq!(r.table, vec![0; 4]);
    }

    #[test]
    fn four_learner_hand_expansion() {
        // M = 2, n = 1, |A| = 2: learners (a(x=0), a(x=1))
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let inst = matrix_instance(vec![0.25, 0.75], vec![1.0, 1.0], vec![0.5; 2], Family::Bernoulli, rows, 1);
        // constant 0: risks (0, 1); constant 1: (1, 0); follow x: (0.25, 0.25); flip: (0.75, 0.75)
        let r = prioritized_risk_enumerated(&inst).unwrap();
        assert_relative_eq!(r.value, 0.25, epsilon = 1e-15);
        assert_eq!(r.table, vec![0, 1]);
        // the witness learner reproduces its value
        let grid = inst.grid().clone();
        let lr = learner_prioritized_risk(&grid, inst.family(), &r.learner(2), &LossSpec::Matrix(inst.loss().clone()), 1, Evaluation::exact()).unwrap();
        assert_relative_eq!(lr.value, r.value, epsilon = 1e-15);
    }

    #[test]
    fn learner_cap_enforced() {
        let rows = vec![vec![0.0, 1.0, 2.0, 3.0]; 2];
        let inst = matrix_instance(vec![0.25, 0.75], vec![1.0, 1.0], vec![0.5; 2], Family::Bernoulli, rows, 4);
        assert!(matches!(prioritized_risk_enumerated(&inst), Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn test_error_examples() {
        assert_relative_eq!(optimal_test_error(&[vec![0.3, 0.7], vec![0.3, 0.7]], 3).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(optimal_test_error(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap(), 0.0);
        assert_relative_eq!(optimal_test_error(&[vec![0.6, 0.4], vec![0.4, 0.6]], 1).unwrap(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn estimation_instance_layout() {
        let grid = ParamGrid::from_prior(&[0.2, 0.5, 0.8], &Prior::Beta { alpha: 1.0, beta: 2.0 }).unwrap();
        let inst = FiniteInstance::estimation(grid, Family::Bernoulli, 2).unwrap();
        assert_eq!(inst.num_datasets(), 4);
        assert_relative_eq!(inst.loss().get(0, 2), 0.6, epsilon = 1e-15);
    }

    fn random_instance() -> impl Strategy<Value = FiniteInstance> {
        (1usize..=4, 2usize..=3, 1usize..=3, 0usize..=2).prop_flat_map(|(t, m, a, n)| {
            (
                prop::collection::vec(0.1f64..2.0, t),
                prop::collection::vec(0.05f64..1.0, t),
                prop::collection::vec(prop::collection::vec(0.05f64..1.0, m), t),
                prop::collection::vec(prop::collection::vec(0.0f64..3.0, a), t),
                Just(n),
            )
                .prop_map(move |(pri, w, tab, loss, n)| {
                    let norm = |v: Vec<f64>| {
                        let s: f64 = v.iter().sum();
                        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
                    };
                    let pts: Vec<f64> = (0..t).map(|i| i as f64).collect();
                    let fam = Family::categorical(pts.clone(), tab.into_iter().map(norm).collect()).unwrap();
                    let lm = LossMatrix::new(pts.clone(), labels(loss[0].len()), loss).unwrap();
                    FiniteInstance::new(ParamGrid::scalar(pts, pri).unwrap(), norm(w), fam, lm, n).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn weighted_bayes_below_enumerated(inst in random_instance()) {
            let b = bayes_risk_exact(&inst, true);
            let e = prioritized_risk_enumerated(&inst).unwrap().value;
            prop_assert!(b <= e + 1e-12);
        }

        #[test]
        fn bayes_invariant_under_relabeling(inst in random_instance()) {
            let k = inst.loss().num_actions();
            let rev: Vec<usize> = (0..k).rev().collect();
            let relabeled = FiniteInstance::new(inst.grid().clone(), inst.weights().to_vec(), inst.family().clone(), inst.loss().select_actions(&rev).unwrap(), inst.n()).unwrap();
            prop_assert!((bayes_risk_exact(&inst, true) - bayes_risk_exact(&relabeled, true)).abs() <= 1e-12);
            // reversing parameter indices: rebuild with negated labels so the grid stays increasing
            let t = inst.grid().len();
            let pts: Vec<f64> = (0..t).map(|i| -(((t - 1 - i) as f64))).collect();
            let order: Vec<usize> = (0..t).rev().collect();
            let rows: Vec<Vec<f64>> = order.iter().map(|&i| inst.family().masses(&[i as f64]).unwrap()).collect();
            let fam = Family::categorical(pts.clone(), rows).unwrap();
            let loss = LossMatrix::new(pts.clone(), inst.loss().actions().to_vec(), order.iter().map(|&i| inst.loss().row(i).to_vec()).collect()).unwrap();
            let pri = order.iter().map(|&i| inst.grid().prior(i)).collect();
            let w = order.iter().map(|&i| inst.weights()[i]).collect();
            let flipped = FiniteInstance::new(ParamGrid::scalar(pts, pri).unwrap(), w, fam, loss, inst.n()).unwrap();
            prop_assert!((bayes_risk_exact(&inst, true) - bayes_risk_exact(&flipped, true)).abs() <= 1e-12);
        }

        #[test]
        fn mixture_information_dominates_exact(t in 1usize..=4, m in 2usize..=4, n in 0usize..=3,
                                               raw in prop::collection::vec(0.01f64..1.0, 16), w in prop::collection::vec(0.05f64..1.0, 4)) {
            let rows: Vec<Vec<f64>> = (0..t).map(|i| {
                let r = &raw[i * 4..i * 4 + m];
                let s: f64 = r.iter().sum();
                r.iter().map(|x| x / s).collect()
            }).collect();
            let ws: f64 = w[..t].iter().sum();
            let weights: Vec<f64> = w[..t].iter().map(|x| x / ws).collect();
            let exact = mutual_information_exact(&rows, &weights, n).unwrap();
            prop_assert!(exact <= mixture_information(&rows, &weights, n).unwrap() + 1e-12);
        }
    }
}
