//! Closed-form Assouad bounds for logistic regression and the comparison
//! between two regressor matrices `Z` and `Z'` with `||Z|| <= ||Z'||`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::estimation::{logistic_closed_form, logistic_curve};
use crate::error::{Error, Result};
use crate::model::Design;
use crate::report::CurveSeries;

pub const DEFAULT_DIM: usize = 3;
pub const DEFAULT_REGRESSORS: usize = 10;
/// `lambda` for prior values (0.8, 0.2) on every coordinate pair.
pub const DEFAULT_LAMBDA: f64 = 1.5625;

/// `n` regressors in `R^d` with entries uniform on [-1, 1].
pub fn random_design(d: usize, n: usize, seed: u64) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..d * n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Design::from_flat(d, &z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticReport {
    pub d: usize,
    pub lambda: f64,
    pub frobenius_z: f64,
    pub frobenius_zp: f64,
    /// `(1/16) d^{3/2} / (lambda ||Z||)`.
    pub bound_z: f64,
    /// `beta' = (1/16) d^{3/2} / (lambda ||Z'||)`.
    pub beta_prime: f64,
    /// `(1/8) d^{3/2} / (lambda ||Z||)`: risk some low-prior parameter must
    /// exceed when a learner using `Z` matches `beta'` on high-prior ones.
    pub low_prior_z: f64,
    pub low_prior_zp: f64,
    /// `beta' <= bound_z` and `low_prior_z >= low_prior_zp`.
    pub ordering_holds: bool,
    /// Bounds over the first `k` regressors of each matrix.
    pub curves: Vec<CurveSeries>,
}

impl LogisticReport {
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let g = |x: f64| format!("{x:.12e}");
        vec![
            ("d", self.d.to_string()),
            ("lambda", g(self.lambda)),
            ("frobenius_z", g(self.frobenius_z)),
            ("frobenius_z_prime", g(self.frobenius_zp)),
            ("bound_z", g(self.bound_z)),
            ("beta_prime", g(self.beta_prime)),
            ("low_prior_threshold_z", g(self.low_prior_z)),
            ("low_prior_threshold_z_prime", g(self.low_prior_zp)),
            ("ordering_holds", self.ordering_holds.to_string()),
        ]
    }
}

pub fn logistic_experiment(z: &Design, zp: &Design, lambda: f64) -> Result<LogisticReport> {
    if z.dim() != zp.dim() {
        return Err(Error::LengthMismatch(z.dim(), zp.dim()));
    }
    let (fz, fzp) = (z.frobenius_norm(), zp.frobenius_norm());
    if fz > fzp {
        return Err(Error::InvalidParameter(format!("need ||Z|| <= ||Z'||, got {fz} > {fzp}")));
    }
    let d = z.dim();
    let lambdas = vec![lambda; d];
    let bound_z = logistic_closed_form(z, &lambdas)?.value;
    let beta_prime = logistic_closed_form(zp, &lambdas)?.value;
    let (low_prior_z, low_prior_zp) = (2.0 * bound_z, 2.0 * beta_prime);
    let mut curves = Vec::new();
    for (label, m) in [("Z", z), ("Z'", zp)] {
        let sizes: Vec<usize> = (1..=m.len()).collect();
        let mut c = CurveSeries::new("logistic", label);
        for (k, r) in sizes.iter().zip(logistic_curve(m, &lambdas, &sizes)?) {
            c.push(*k, r.value, 0.0)?;
        }
        curves.push(c);
    }
    Ok(LogisticReport {
        d,
        lambda,
        frobenius_z: fz,
        frobenius_zp: fzp,
        bound_z,
        beta_prime,
        low_prior_z,
        low_prior_zp,
        ordering_holds: beta_prime <= bound_z && low_prior_z >= low_prior_zp,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equal_matrices_equal_bounds() {
        let z = random_design(3, 10, 1).unwrap();
        let r = logistic_experiment(&z, &z, DEFAULT_LAMBDA).unwrap();
        assert_eq!(r.bound_z, r.beta_prime);
        assert!(r.ordering_holds);
    }

    #[test]
    fn half_norm_doubles_bound() {
        let z = random_design(3, 10, 2).unwrap();
        let r = logistic_experiment(&z, &z.scaled(2.0), DEFAULT_LAMBDA).unwrap();
        assert_relative_eq!(r.bound_z, 2.0 * r.beta_prime, max_relative = 1e-12);
        assert!(r.ordering_holds);
        assert_eq!(r.curves.len(), 2);
        assert_eq!(r.curves[0].points.len(), 10);
    }

    #[test]
    fn wrong_order_rejected() {
        let z = random_design(3, 10, 3).unwrap();
        assert!(logistic_experiment(&z.scaled(2.0), &z, 1.0).is_err());
    }
}
