//! Prior-weighted LeCam, Fano and Assouad bounds for estimation losses, and
//! the closed-form logistic-regression bound.

use rayon::prelude::*;

use super::{BoundMethod, BoundResult, InfoRoute, TvRoute, Witness};
use crate::divergence::{
    kl_masses, mixture_information, pairwise_information, tv_product_exact, tv_product_mixtures, tv_product_upper, type_count,
    DivergenceValue, Exactness, DEFAULT_PRODUCT_CAP,
};
use crate::error::{Error, Result};
use crate::model::{Design, Family, Learner, LossSpec, Prior};
use crate::optimize::golden_section_max;
use crate::packing::{max_delta_two_point, require_packing, require_separation, sign_of_bit, HammingSeparation, Packing};
use crate::risk::{for_each_dataset, mc_expectation, derive_seed, Evaluation};
use crate::model::ParamGrid;

/// Largest number of type classes (count vectors of `n` draws over the
/// support) for which `TvRoute::Auto` computes TV exactly. Exact TV between
/// products only needs one term per type class, so this admits Bernoulli
/// problems far beyond `2^n <= 10^6`.
pub const AUTO_EXACT_LIMIT: u64 = 1_000_000;

fn use_exact(route: TvRoute, support: usize, n: usize) -> bool {
    match route {
        TvRoute::Exact => true,
        TvRoute::Pinsker => false,
        TvRoute::Auto => type_count(n, support) <= AUTO_EXACT_LIMIT as u128,
    }
}

fn two_point_divergence(p: &[f64], q: &[f64], n: usize, route: TvRoute) -> Result<DivergenceValue> {
    let (kf, kr) = (kl_masses(p, q), kl_masses(q, p));
    let scale = |k: f64| if n == 0 { 0.0 } else { n as f64 * k };
    let (tv, tv_exactness) = if use_exact(route, p.len(), n) {
        (tv_product_exact(p, q, n, DEFAULT_PRODUCT_CAP)?, Exactness::Exact)
    } else {
        (tv_product_upper(kf.min(kr), n), Exactness::UpperBound)
    };
    Ok(DivergenceValue {
        kl_forward: scale(kf),
        kl_reverse: scale(kr),
        tv,
        kl_exactness: Exactness::Exact,
        tv_exactness,
    })
}

/// `(delta / 2) [1 - TV(P_0^n, P_1^n)]_+` for a verified two-point packing.
pub fn lecam_bound(packing: &Packing, family: &Family, n: usize, route: TvRoute) -> Result<BoundResult> {
    if packing.len() != 2 {
        return Err(Error::InvalidParameter(format!("lecam needs 2 members, got {}", packing.len())));
    }
    require_packing(packing)?;
    let m = packing.members();
    let divergence = two_point_divergence(&family.masses(&m[0])?, &family.masses(&m[1])?, n, route)?;
    let witness = Witness::LeCam {
        theta0: m[0][0],
        theta1: m[1][0],
        prior0: packing.prior_values()[0],
        prior1: packing.prior_values()[1],
        delta: packing.delta(),
        divergence,
    };
    Ok(BoundResult { method: BoundMethod::LeCam, value: witness.replay(), n, witness })
}

/// Candidate two-point packings `{c - w, c + w}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingSearch {
    pub centers: Vec<f64>,
    /// Sorted half-widths.
    pub widths: Vec<f64>,
    /// Admissible parameter range.
    pub lo: f64,
    pub hi: f64,
    /// Golden-section refinement of the width around the best candidate.
    pub refine: bool,
}

impl Default for PackingSearch {
    /// Centers 0.05..0.95 and half-widths 0.01..0.45 in steps of 0.01, plus 20
    /// log-spaced half-widths in [1e-4, 1e-2) so the optimum stays inside
    /// the grid at large n, on [0, 1].
    fn default() -> Self {
        let centers = (5..=95).map(|i| i as f64 / 100.0).collect();
        let mut widths: Vec<f64> = (0..20).map(|i| 1e-4 * 100f64.powf(i as f64 / 20.0)).collect();
        widths.extend((1..=45).map(|i| i as f64 / 100.0));
        Self { centers, widths, lo: 0.0, hi: 1.0, refine: true }
    }
}

fn lecam_candidate(c: f64, w: f64, search: &PackingSearch, family: &Family, prior: &Prior, n: usize, route: TvRoute) -> Result<Option<BoundResult>> {
    let (t0, t1) = (c - w, c + w);
    if !(w > 0.0 && t0 >= search.lo && t1 <= search.hi) {
        return Ok(None);
    }
    let (p0, p1) = (prior.eval(t0), prior.eval(t1));
    if !(p0 > 0.0 && p1 > 0.0) {
        return Ok(None);
    }
    let delta = max_delta_two_point(t0, t1, p0, p1);
    let packing = Packing::scalar(&[t0, t1], vec![p0, p1], delta)?;
    lecam_bound(&packing, family, n, route).map(Some)
}

/// Best LeCam bound over the candidate packings, each at its largest
/// feasible delta. Ties go to the first candidate (center-major order).
pub fn lecam_optimize(search: &PackingSearch, family: &Family, prior: &Prior, n: usize, route: TvRoute) -> Result<BoundResult> {
    let cands: Vec<(f64, usize)> = search
        .centers
        .iter()
        .flat_map(|&c| (0..search.widths.len()).map(move |k| (c, k)))
        .collect();
    let results = cands
        .par_iter()
        .map(|&(c, k)| lecam_candidate(c, search.widths[k], search, family, prior, n, route))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, BoundResult)> = None;
    for (i, r) in results.into_iter().enumerate() {
        if let Some(r) = r {
            if best.as_ref().is_none_or(|(_, b)| r.value > b.value) {
                best = Some((i, r));
            }
        }
    }
    let (i, mut best) = best.ok_or_else(|| Error::InvalidParameter("no feasible two-point packing".into()))?;
    if search.refine {
        let (c, k) = cands[i];
        let lo = search.widths[k.saturating_sub(1)];
        let hi = search.widths[(k + 1).min(search.widths.len() - 1)];
        let value = |w: f64| match lecam_candidate(c, w, search, family, prior, n, route) {
            Ok(Some(r)) => r.value,
            _ => f64::NEG_INFINITY,
        };
        let (w, v) = golden_section_max(value, lo, hi, 1e-9, 200);
        if v > best.value {
            if let Some(r) = lecam_candidate(c, w, search, family, prior, n, route)? {
                best = r;
            }
        }
    }
    Ok(best)
}

/// `delta [1 - (I + ln 2) / ln |V|]_+` with `I` an upper bound on the
/// information between a uniform index and the data.
pub fn fano_bound(packing: &Packing, family: &Family, n: usize, route: InfoRoute) -> Result<BoundResult> {
    if packing.len() < 2 {
        return Err(Error::DegenerateIndexSet(packing.len()));
    }
    require_packing(packing)?;
    let rows = packing.members().iter().map(|m| family.masses(m)).collect::<Result<Vec<_>>>()?;
    let k = rows.len();
    let info_upper = match route {
        InfoRoute::Mixture => mixture_information(&rows, &vec![1.0 / k as f64; k], n)?,
        InfoRoute::Pairwise => pairwise_information(&rows, n)?,
        InfoRoute::Entropy => (k as f64).ln(),
    };
    let witness = Witness::Fano {
        members: packing.members().to_vec(),
        prior_values: packing.prior_values().to_vec(),
        delta: packing.delta(),
        info_upper,
        route,
    };
    Ok(BoundResult { method: BoundMethod::Fano, value: witness.replay(), n, witness })
}

/// `delta sum_j [1 - TV(P_{+j}^n, P_{-j}^n)]_+` for a Hamming separation
/// verified against `grid` (the points an estimator may output).
///
/// Without exact TV the sum is weakened by Cauchy-Schwarz, convexity and
/// Pinsker to `delta d [1 - sqrt(mean_{j,v} min(1, n (KL + KL') / 4))]_+`
/// where the pairs differ in coordinate `j` only.
pub fn assouad_bound(sep: &HammingSeparation, grid: &ParamGrid, family: &Family, n: usize, route: TvRoute) -> Result<BoundResult> {
    require_separation(sep, grid)?;
    let rows = sep.members().iter().map(|m| family.masses(m)).collect::<Result<Vec<_>>>()?;
    let d = sep.dim();
    let half = 1.0 / (1usize << (d - 1)) as f64;
    let (tv, tv_exactness) = if use_exact(route, family.support_size(), n) {
        let tv = (0..d)
            .map(|j| {
                let side = |s: f64| -> Vec<(f64, Vec<f64>)> {
                    (0..rows.len()).filter(|&k| sign_of_bit(k, j) == s).map(|k| (half, rows[k].clone())).collect()
                };
                tv_product_mixtures(&side(1.0), &side(-1.0), n, DEFAULT_PRODUCT_CAP)
            })
            .collect::<Result<Vec<_>>>()?;
        (tv, Exactness::Exact)
    } else {
        let mut acc = 0.0;
        for j in 0..d {
            for (k, row) in rows.iter().enumerate() {
                let flip = &rows[k ^ (1 << j)];
                let sym = kl_masses(row, flip) + kl_masses(flip, row);
                acc += (n as f64 * sym / 4.0).min(1.0);
            }
        }
        let tv_bar = (acc / (d * rows.len()) as f64).sqrt();
        (vec![tv_bar; d], Exactness::UpperBound)
    };
    let witness = Witness::Assouad { d, delta: sep.delta(), tv, tv_exactness };
    Ok(BoundResult { method: BoundMethod::Assouad, value: witness.replay(), n, witness })
}

/// Relative tolerance between the per-coordinate and common-lambda forms.
pub const CLOSED_FORM_AGREEMENT: f64 = 1e-12;

/// `(1/16) d^{3/2} / sqrt(sum_j lambda_j^2 sum_i z_ij^2)`; with a common
/// lambda the witness also carries `(1/16) d^{3/2} / (lambda ||Z||_F)`. An
/// all-zero design gives `+inf` (the bound is vacuous in the other
/// direction: no information, unbounded risk).
pub fn logistic_closed_form(design: &Design, lambdas: &[f64]) -> Result<BoundResult> {
    let d = design.dim();
    if lambdas.len() != d {
        return Err(Error::LengthMismatch(lambdas.len(), d));
    }
    if let Some(l) = lambdas.iter().find(|&&l| !(l >= 1.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!("lambda {l} must be >= 1")));
    }
    let energy = design.coordinate_energy();
    let fro = design.frobenius_norm();
    let common = lambdas.iter().all(|&l| l == lambdas[0]).then(|| {
        if fro == 0.0 {
            f64::INFINITY
        } else {
            (d as f64).powf(1.5) / (16.0 * lambdas[0] * fro)
        }
    });
    let witness = Witness::LogisticClosed {
        d,
        lambdas: lambdas.to_vec(),
        coordinate_energy: energy,
        frobenius_norm: fro,
        common_lambda_value: common,
    };
    let value = witness.replay();
    if let Some(c) = common {
        let agree = (c.is_infinite() && value.is_infinite()) || (c - value).abs() <= CLOSED_FORM_AGREEMENT * value.abs();
        if !agree {
            return Err(Error::Invariant(format!("closed forms disagree: {value} vs {c}")));
        }
    }
    Ok(BoundResult { method: BoundMethod::AssouadLogisticClosed, value, n: design.len(), witness })
}

/// `lambda_j = (1/4) (1/a + 1/b)` for each normalized pair of prior values.
pub fn lambda_from_prior(pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(a, b)| {
            if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) || (a + b - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("prior pair ({a}, {b}) must lie in (0,1) and sum to 1")));
            }
            Ok(0.25 * (1.0 / a + 1.0 / b))
        })
        .collect()
}

/// Closed-form logistic bound with the design regenerated from a prefix of
/// `design`: helper for curves over the number of regressors.
pub fn logistic_curve(design: &Design, lambdas: &[f64], sizes: &[usize]) -> Result<Vec<BoundResult>> {
    sizes.iter().map(|&k| logistic_closed_form(&design.prefix(k)?, lambdas)).collect()
}

/// Both sides of the reduction from estimation to testing:
/// `max_v pi_v R(learner, theta_v) >= delta P(Psi != V)` with the
/// prior-weighted test `Psi(x) = argmin_v pi_v rho(theta_v, learner(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionCheck {
    pub prioritized_risk: f64,
    pub test_error: f64,
    pub delta: f64,
    /// Zero for exact evaluation.
    pub std_error: f64,
    pub holds: bool,
}

impl ReductionCheck {
    pub fn gap(&self) -> f64 {
        self.prioritized_risk - self.delta * self.test_error
    }
}

fn prior_weighted_test(packing: &Packing, action: &crate::model::Action, loss: &LossSpec) -> Result<usize> {
    let mut best = (f64::INFINITY, 0);
    for (v, (m, p)) in packing.members().iter().zip(packing.prior_values()).enumerate() {
        let c = p * loss.eval(m, action)?;
        if c < best.0 {
            best = (c, v);
        }
    }
    Ok(best.1)
}

/// Evaluates both sides exactly, or by Monte Carlo (then "holds" allows 4
/// standard errors of slack).
pub fn reduction_check(learner: &Learner, packing: &Packing, family: &Family, n: usize, eval: Evaluation) -> Result<ReductionCheck> {
    require_packing(packing)?;
    let loss = LossSpec::Pseudometric(packing.metric());
    let k = packing.len();
    let mut risk = f64::NEG_INFINITY;
    let mut risk_se: f64 = 0.0;
    let mut err = 0.0;
    let mut err_var = 0.0;
    for (v, m) in packing.members().iter().enumerate() {
        let masses = family.masses(m)?;
        let pi = packing.prior_values()[v];
        let (r, e, r_se, e_se) = match eval {
            Evaluation::Exact { cap } => {
                let (mut r, mut e) = (0.0, 0.0);
                for_each_dataset(&masses, n, cap, |x, p| {
                    if p > 0.0 {
                        let a = learner.act(x);
                        r += p * loss.eval(m, &a)?;
                        if prior_weighted_test(packing, &a, &loss)? != v {
                            e += p;
                        }
                    }
                    Ok(())
                })?;
                (r, e, 0.0, 0.0)
            }
            Evaluation::MonteCarlo { num_datasets, seed } => {
                let s = derive_seed(seed, &[v as u64]);
                let r = mc_expectation(&masses, n, num_datasets, s, |x| loss.eval(m, &learner.act(x)))?;
                let e = mc_expectation(&masses, n, num_datasets, s, |x| {
                    Ok(f64::from(u8::from(prior_weighted_test(packing, &learner.act(x), &loss)? != v)))
                })?;
                (r.mean, e.mean, r.std_error, e.std_error)
            }
        };
        if pi * r > risk {
            risk = pi * r;
            risk_se = pi * r_se;
        }
        err += e / k as f64;
        err_var += (e_se / k as f64).powi(2);
    }
    let std_error = (risk_se.powi(2) + (packing.delta() * err_var.sqrt()).powi(2)).sqrt();
    let holds = risk + 4.0 * std_error >= packing.delta() * err;
    Ok(ReductionCheck { prioritized_risk: risk, test_error: err, delta: packing.delta(), std_error, holds })
}
