//! Prior-weighted LeCam bounds for estimating a Bernoulli mean.

use crate::bounds::estimation::{lecam_optimize, PackingSearch};
use crate::bounds::{BoundResult, TvRoute};
use crate::error::Result;
use crate::model::{Family, Prior};
use crate::report::CurveSeries;

pub fn series_label(prior: &Prior) -> String {
    match prior {
        Prior::Uniform => "minimax (uniform prior)".into(),
        p => format!("prioritized ({p})"),
    }
}

/// Optimized LeCam bound at every `n`; the uniform-prior curve is the
/// minimax curve. Exact bounds carry a zero standard error.
pub fn bernoulli_experiment(prior: &Prior, n_list: &[usize], route: TvRoute) -> Result<(CurveSeries, Vec<BoundResult>)> {
    let search = PackingSearch::default();
    let mut curve = CurveSeries::new("bernoulli", series_label(prior));
    let mut results = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let r = lecam_optimize(&search, &Family::Bernoulli, prior, n, route)?;
        curve.push(n, r.value, 0.0)?;
        results.push(r);
    }
    Ok((curve, results))
}
