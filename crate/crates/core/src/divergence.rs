//! KL and total-variation divergences on finite supports, and the
//! inequality chain (Pinsker, tensorization) the bounds are built from.
//!
//! All logarithms are natural. An infinite KL divergence is represented by
//! `f64::INFINITY`; consumers clamp it to the trivially valid result.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{sigmoid, Family, ParamGrid, SIMPLEX_TOL};

/// Default cap on the number of terms in an exact product computation.
pub const DEFAULT_PRODUCT_CAP: u64 = 1_000_000;

/// Whether a stored divergence value is exact or one side of a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    UpperBound,
    LowerBound,
}

impl Exactness {
    pub fn name(self) -> &'static str {
        match self {
            Exactness::Exact => "exact",
            Exactness::UpperBound => "upper-bound",
            Exactness::LowerBound => "lower-bound",
        }
    }
}

/// KL in both directions and TV between two (possibly n-fold product)
/// distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub kl_forward: f64,
    pub kl_reverse: f64,
    pub tv: f64,
    pub kl_exactness: Exactness,
    pub tv_exactness: Exactness,
}

impl DivergenceValue {
    /// Divergences between the `n`-fold products of `p` and `q`. KL is exact
    /// by tensorization; TV is exact when the number of product types stays
    /// within `cap`, otherwise the Pinsker bound using the smaller KL.
    pub fn product(p: &[f64], q: &[f64], n: usize, cap: u64) -> Result<Self> {
        let kl_f = n as f64 * kl_categorical(p, q)?;
        let kl_r = n as f64 * kl_categorical(q, p)?;
        let (tv, tv_exactness) = match tv_product_exact(p, q, n, cap) {
            Ok(tv) => (tv, Exactness::Exact),
            Err(Error::EnumerationTooLarge { .. }) => {
                (tv_product_upper(kl_f.min(kl_r), 1), Exactness::UpperBound)
            }
            Err(e) => return Err(e),
        };
        Ok(Self { kl_forward: kl_f, kl_reverse: kl_r, tv, kl_exactness: Exactness::Exact, tv_exactness })
    }
}

/// Check `p` is a probability vector (non-negative, finite, sums to 1 within
/// `SIMPLEX_TOL`).
pub fn validate_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter("empty probability vector".into()));
    }
    if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!("probability {v} is negative or non-finite")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotNormalized { sum: s });
    }
    Ok(())
}

/// `sum p_i ln(p_i / q_i)` with `0 ln 0 = 0`; `+inf` on support mismatch.
/// Inputs are assumed validated.
pub(crate) fn kl_masses(p: &[f64], q: &[f64]) -> f64 {
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            kl += pi * (pi / qi).ln();
        }
    }
    // rounding can leave a tiny negative sum for near-identical inputs
    kl.max(0.0)
}

pub fn kl_categorical(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    validate_simplex(p)?;
    validate_simplex(q)?;
    Ok(kl_masses(p, q))
}

/// KL(Ber(p) || Ber(q)). Returns `+inf` when `q` sits on a boundary that `p`
/// does not share.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    for v in [p, q] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("bernoulli mean {v} outside [0, 1]")));
        }
    }
    Ok(kl_masses(&[1.0 - p, p], &[1.0 - q, q]))
}

pub fn tv_exact(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(tv.min(1.0))
}

/// Pinsker plus tensorization: `min(1, sqrt(n * kl / 2))` bounds the TV
/// between n-fold products whose single-sample KL is `kl_single`.
pub fn tv_product_upper(kl_single: f64, n: usize) -> f64 {
    if n == 0 || kl_single <= 0.0 {
        return 0.0;
    }
    if !kl_single.is_finite() {
        return 1.0;
    }
    (n as f64 * kl_single / 2.0).sqrt().min(1.0)
}

/// Number of count vectors of `m` non-negative integers summing to `n`,
/// saturating at `u128::MAX`.
pub fn type_count(n: usize, m: usize) -> u128 {
    if m == 0 {
        return 0;
    }
    // C(n + m - 1, m - 1) computed incrementally
    let k = (m - 1).min(n) as u128;
    let top = (n + m - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Visits every count vector (type) of length `m` summing to `n` together
/// with the log multinomial coefficient.
fn for_each_type(n: usize, m: usize, mut visit: impl FnMut(&[usize], f64)) {
    let ln_fact = |k: usize| ln_gamma(k as f64 + 1.0);
    let ln_n = ln_fact(n);
    let mut counts = vec![0usize; m];
    fn rec(
        pos: usize,
        left: usize,
        acc: f64,
        counts: &mut [usize],
        ln_fact: &dyn Fn(usize) -> f64,
        visit: &mut dyn FnMut(&[usize], f64),
    ) {
        let m = counts.len();
        if pos == m - 1 {
            counts[pos] = left;
            visit(counts, acc - ln_fact(left));
            return;
        }
        for k in 0..=left {
            counts[pos] = k;
            rec(pos + 1, left - k, acc - ln_fact(k), counts, ln_fact, visit);
        }
    }
    rec(0, n, ln_n, &mut counts, &ln_fact, &mut visit);
}

fn ln_type_prob(counts: &[usize], ln_masses: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&k, &lp) in counts.iter().zip(ln_masses) {
        if k > 0 {
            s += k as f64 * lp;
        }
    }
    s
}

/// Exact TV between the n-fold products of `p` and `q`, summed over count
/// vectors (the product masses only depend on the counts). Fails with
/// `EnumerationTooLarge` when the number of types exceeds `cap`.
pub fn tv_product_exact(p: &[f64], q: &[f64], n: usize, cap: u64) -> Result<f64> {
    tv_product_mixtures(&[(1.0, p.to_vec())], &[(1.0, q.to_vec())], n, cap)
}

/// Exact TV between two mixtures `sum_k w_k P_k^n` of n-fold products. Each
/// component is `(weight, single-observation masses)`; weights of a side sum
/// to one. Mixtures of products still only depend on the counts, so this is
/// a sum over types.
pub fn tv_product_mixtures(a: &[(f64, Vec<f64>)], b: &[(f64, Vec<f64>)], n: usize, cap: u64) -> Result<f64> {
    let m = a.first().or(b.first()).map_or(0, |c| c.1.len());
    for side in [a, b] {
        if side.is_empty() {
            return Err(Error::InvalidParameter("empty mixture".into()));
        }
        let w: Vec<f64> = side.iter().map(|c| c.0).collect();
        validate_simplex(&w)?;
        for (_, row) in side {
            if row.len() != m {
                return Err(Error::LengthMismatch(row.len(), m));
            }
            validate_simplex(row)?;
        }
    }
    let types = type_count(n, m);
    if types > cap as u128 {
        return Err(Error::EnumerationTooLarge { size: types, cap });
    }
    let logs = |side: &[(f64, Vec<f64>)]| -> Vec<(f64, Vec<f64>)> {
        side.iter().map(|(w, row)| (*w, row.iter().map(|v| v.ln()).collect())).collect()
    };
    let (la, lb) = (logs(a), logs(b));
    let mass = |side: &[(f64, Vec<f64>)], counts: &[usize], ln_coef: f64| -> f64 {
        side.iter().map(|(w, lp)| w * (ln_coef + ln_type_prob(counts, lp)).exp()).sum()
    };
    let mut total = 0.0;
    for_each_type(n, m, |counts, ln_coef| {
        total += (mass(&la, counts, ln_coef) - mass(&lb, counts, ln_coef)).abs();
    });
    Ok((0.5 * total).min(1.0))
}

/// Masses of all `m^n` datasets under the n-fold product of `p`, in
/// lexicographic order (first observation most significant).
pub fn product_table(p: &[f64], n: usize, cap: u64) -> Result<Vec<f64>> {
    let size = (p.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::EnumerationTooLarge { size, cap });
    }
    let mut table = vec![1.0];
    for _ in 0..n {
        table = table.iter().flat_map(|&t| p.iter().map(move |&pi| t * pi)).collect();
    }
    Ok(table)
}

/// Both sides of `KL(p_a || p_b) + KL(p_b || p_a) <= (a - b)^2` for the
/// sigmoid pair `p_x = 1 / (1 + e^x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidKlPair {
    pub bound: f64,
    pub symmetric_kl: f64,
}

pub fn binary_kl_sum_bound(a: f64, b: f64) -> SigmoidKlPair {
    let (pa, pb) = (sigmoid(-a), sigmoid(-b));
    let fwd = kl_masses(&[1.0 - pa, pa], &[1.0 - pb, pb]);
    let rev = kl_masses(&[1.0 - pb, pb], &[1.0 - pa, pa]);
    SigmoidKlPair { bound: (a - b).powi(2), symmetric_kl: fwd + rev }
}

/// Single-observation mass rows for every grid point.
pub fn family_rows(family: &Family, grid: &ParamGrid) -> Result<Vec<Vec<f64>>> {
    grid.points().map(|t| family.masses(t)).collect()
}

/// `n * sum_t w_t KL(P_t || P_bar)` with `P_bar` the `w`-mixture: the mutual
/// information bound obtained from the product reference measure
/// `P_bar^n`.
pub fn mixture_information(rows: &[Vec<f64>], weights: &[f64], n: usize) -> Result<f64> {
    if rows.len() != weights.len() {
        return Err(Error::LengthMismatch(rows.len(), weights.len()));
    }
    validate_simplex(weights)?;
    if n == 0 || rows.len() < 2 {
        return Ok(0.0);
    }
    let m = rows[0].len();
    let mut mix = vec![0.0; m];
    for (row, &w) in rows.iter().zip(weights) {
        if row.len() != m {
            return Err(Error::LengthMismatch(row.len(), m));
        }
        for (acc, v) in mix.iter_mut().zip(row) {
            *acc += w * v;
        }
    }
    let per_sample: f64 = rows
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(row, &w)| w * kl_masses(row, &mix))
        .sum();
    Ok(n as f64 * per_sample)
}

/// `n * max_{t, t'} KL(P_t || P_t')`.
pub fn pairwise_information(rows: &[Vec<f64>], n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for (i, p) in rows.iter().enumerate() {
        for (j, q) in rows.iter().enumerate() {
            if i != j {
                if p.len() != q.len() {
                    return Err(Error::LengthMismatch(p.len(), q.len()));
                }
                worst = worst.max(kl_masses(p, q));
            }
        }
    }
    Ok(n as f64 * worst)
}

pub fn mutual_information_upper(family: &Family, grid: &ParamGrid, weights: &[f64], n: usize) -> Result<f64> {
    mixture_information(&family_rows(family, grid)?, weights, n)
}

pub fn mutual_information_pairwise_upper(family: &Family, grid: &ParamGrid, n: usize) -> Result<f64> {
    pairwise_information(&family_rows(family, grid)?, n)
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.05).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }

    #[test]
    fn kl_bernoulli_examples() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert_relative_eq!(kl_bernoulli(0.5, 0.25).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.143_841_036_225_890_5, epsilon = 1e-15);
        assert_relative_eq!(kl_bernoulli(1.0, 0.5).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(kl_bernoulli(0.5, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(kl_bernoulli(1.0, 1.0).unwrap(), 0.0);
        assert!(kl_bernoulli(1.2, 0.5).is_err());
    }

    #[test]
    fn kl_categorical_examples() {
        let u = [0.25; 4];
        assert_eq!(kl_categorical(&u, &u).unwrap(), 0.0);
        assert_relative_eq!(kl_categorical(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 2f64.ln());
        assert_eq!(kl_categorical(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl_categorical(&[0.5, 0.5], &[0.3, 0.3, 0.4]).is_err());
        assert!(matches!(kl_categorical(&[0.5, 0.6], &[0.5, 0.5]), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_exact(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_exact(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(tv_exact(&[0.3, 0.7], &[0.6, 0.4]).unwrap(), 0.3, epsilon = 1e-15);
        assert!(tv_exact(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn tv_product_upper_examples() {
        assert_eq!(tv_product_upper(0.0, 7), 0.0);
        assert_relative_eq!(tv_product_upper(0.5, 1), 0.5);
        assert_eq!(tv_product_upper(10.0, 10), 1.0);
        assert_eq!(tv_product_upper(f64::INFINITY, 3), 1.0);
    }

    #[test]
    fn type_counts() {
        assert_eq!(type_count(5, 2), 6);
        assert_eq!(type_count(3, 3), 10);
        assert_eq!(type_count(0, 4), 1);
        assert_eq!(type_count(1_000_000, 400), u128::MAX);
    }

    #[test]
    fn product_tv_by_types_matches_full_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = rng.gen_range(2..5);
            let n = rng.gen_range(0..6);
            let p = random_simplex(&mut rng, m);
            let q = random_simplex(&mut rng, m);
            let pt = product_table(&p, n, DEFAULT_PRODUCT_CAP).unwrap();
            let qt = product_table(&q, n, DEFAULT_PRODUCT_CAP).unwrap();
            let full = tv_exact(&pt, &qt).unwrap();
            let typed = tv_product_exact(&p, &q, n, DEFAULT_PRODUCT_CAP).unwrap();
            assert_relative_eq!(full, typed, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixture_tv_matches_full_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(1..5);
            let comps: Vec<Vec<f64>> = (0..4).map(|_| random_simplex(&mut rng, 3)).collect();
            let table = |k: usize| product_table(&comps[k], n, DEFAULT_PRODUCT_CAP).unwrap();
            let mix = |i: usize, j: usize| -> Vec<f64> {
                table(i).iter().zip(table(j)).map(|(x, y)| 0.5 * (x + y)).collect()
            };
            let full = tv_exact(&mix(0, 1), &mix(2, 3)).unwrap();
            let a = [(0.5, comps[0].clone()), (0.5, comps[1].clone())];
            let b = [(0.5, comps[2].clone()), (0.5, comps[3].clone())];
            let typed = tv_product_mixtures(&a, &b, n, DEFAULT_PRODUCT_CAP).unwrap();
            assert_relative_eq!(full, typed, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_tv_large_n_bernoulli() {
        // Bin(4096, .49) vs Bin(4096, .51): far apart but not disjoint
        let tv = tv_product_exact(&[0.51, 0.49], &[0.49, 0.51], 4096, DEFAULT_PRODUCT_CAP).unwrap();
        assert!(tv > 0.7 && tv < 1.0, "{tv}");
        assert!(tv <= tv_product_upper(kl_bernoulli(0.49, 0.51).unwrap(), 4096));
    }

    #[test]
    fn product_cap_is_enforced() {
        assert!(matches!(
            product_table(&[0.5, 0.5], 21, DEFAULT_PRODUCT_CAP),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let zipf = vec![1.0 / 400.0; 400];
        assert!(tv_product_exact(&zipf, &zipf, 10, DEFAULT_PRODUCT_CAP).is_err());
    }

    #[test]
    fn divergence_value_falls_back_to_pinsker() {
        let p = [0.6, 0.4];
        let q = [0.4, 0.6];
        let small = DivergenceValue::product(&p, &q, 3, DEFAULT_PRODUCT_CAP).unwrap();
        assert_eq!(small.tv_exactness, Exactness::Exact);
        let big = DivergenceValue::product(&p, &q, 3, 2).unwrap();
        assert_eq!(big.tv_exactness, Exactness::UpperBound);
        assert!(big.tv >= small.tv);
        assert_relative_eq!(small.kl_forward, 3.0 * kl_bernoulli(0.4, 0.6).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn sigmoid_pair_examples() {
        let same = binary_kl_sum_bound(3.0, 3.0);
        assert_eq!(same.bound, 0.0);
        assert_eq!(same.symmetric_kl, 0.0);
        let one = binary_kl_sum_bound(0.0, 1.0);
        assert_eq!(one.bound, 1.0);
        assert!(one.symmetric_kl <= 1.0);
        let wide = binary_kl_sum_bound(-2.0, 2.0);
        assert_eq!(wide.bound, 16.0);
        assert!(wide.symmetric_kl <= 16.0);
        // symmetric KL of the pair collapses to (p_b - p_a)(a - b)
        let closed = (sigmoid(-2.0) - sigmoid(2.0)) * (-2.0 - 2.0);
        assert_relative_eq!(wide.symmetric_kl, closed, epsilon = 1e-12);
    }

    #[test]
    fn mixture_information_examples() {
        assert_eq!(mixture_information(&[vec![0.3, 0.7]], &[1.0], 5).unwrap(), 0.0);
        let rows = vec![vec![0.6, 0.4], vec![0.4, 0.6]];
        assert_eq!(mixture_information(&rows, &[0.5, 0.5], 0).unwrap(), 0.0);
        let by_hand = 0.5 * kl_bernoulli(0.4, 0.5).unwrap() + 0.5 * kl_bernoulli(0.6, 0.5).unwrap();
        assert_relative_eq!(mixture_information(&rows, &[0.5, 0.5], 1).unwrap(), by_hand, epsilon = 1e-15);
        assert!(mixture_information(&rows, &[0.5, 0.6], 1).is_err());
    }

    #[test]
    fn pairwise_information_examples() {
        let same = vec![vec![0.2, 0.8]; 3];
        assert_eq!(pairwise_information(&same, 4).unwrap(), 0.0);
        let rows = vec![vec![0.6, 0.4], vec![0.4, 0.6]];
        let expected = 2.0 * kl_bernoulli(0.6, 0.4).unwrap();
        assert_relative_eq!(pairwise_information(&rows, 2).unwrap(), expected, epsilon = 1e-15);
        assert_eq!(pairwise_information(&rows[..1], 2).unwrap(), 0.0);
    }

    #[test]
    fn information_grows_with_n() {
        let rows = vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6], vec![0.3, 0.3, 0.4]];
        let w = [0.2, 0.5, 0.3];
        let mut prev = 0.0;
        for n in 0..6 {
            let i = mixture_information(&rows, &w, n).unwrap();
            assert!(i >= prev);
            prev = i;
        }
    }

    fn simplex(m: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, m).prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
    }

    fn pair(max_m: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2..=max_m).prop_flat_map(|m| (simplex(m), simplex(m)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn pinsker_bernoulli(p in 0.0f64..=1.0, q in 0.001f64..0.999) {
            let tv = tv_exact(&[1.0 - p, p], &[1.0 - q, q]).unwrap();
            prop_assert!(tv <= (kl_bernoulli(p, q).unwrap() / 2.0).sqrt() + 1e-12);
        }

        #[test]
        fn sigmoid_pair_inequality(a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let r = binary_kl_sum_bound(a, b);
            prop_assert!(r.symmetric_kl <= r.bound + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn tensorization((p, q) in pair(4), n in 0usize..=5) {
            let pt = product_table(&p, n, DEFAULT_PRODUCT_CAP).unwrap();
            let qt = product_table(&q, n, DEFAULT_PRODUCT_CAP).unwrap();
            let single = kl_categorical(&p, &q).unwrap();
            prop_assert!((kl_masses(&pt, &qt) - n as f64 * single).abs() <= 1e-9);
        }

        #[test]
        fn pinsker_dominates_product_tv((p, q) in pair(4), n in 1usize..=5) {
            let pt = product_table(&p, n, DEFAULT_PRODUCT_CAP).unwrap();
            let qt = product_table(&q, n, DEFAULT_PRODUCT_CAP).unwrap();
            let exact = tv_exact(&pt, &qt).unwrap();
            prop_assert!(exact <= tv_product_upper(kl_categorical(&p, &q).unwrap(), n) + 1e-12);
            prop_assert!(exact <= tv_product_upper(kl_categorical(&q, &p).unwrap(), n) + 1e-12);
        }
    }
}
