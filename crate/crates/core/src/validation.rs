//! Built-in tiny instances and the property suites run by `oracle check`,
//! `selftest` and the acceptance target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::estimation::{assouad_bound, fano_bound, lecam_bound, logistic_closed_form, reduction_check};
use crate::bounds::gfano::{gfano_prioritized_lower, GFanoInstance};
use crate::bounds::{InfoRoute, TvRoute};
use crate::divergence::{binary_kl_sum_bound, kl_bernoulli, kl_masses, product_table, tv_exact, DEFAULT_PRODUCT_CAP};
use crate::error::Result;
use crate::model::{Action, Design, Family, Learner, LossMatrix, ParamGrid, Prior};
use crate::oracle::{bayes_risk_exact, prioritized_risk_enumerated, FiniteInstance};
use crate::packing::{max_delta, max_delta_hamming, max_delta_two_point, HammingSeparation, Packing};
use crate::risk::Evaluation;

/// Absolute slack for every inequality checked on exactly computed values.
pub const CHAIN_TOL: f64 = 1e-9;
/// Slack for the reduction inequality under exact enumeration.
pub const REDUCTION_TOL: f64 = 1e-12;
pub const TENSORIZATION_TOL: f64 = 1e-9;

/// Outcome of one property suite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub violations: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn absorb(&mut self, other: SuiteReport) {
        self.checks += other.checks;
        self.violations.extend(other.violations);
    }
}

/// A finite instance plus, for estimation problems, the estimates that
/// serve as actions (loss `|theta - a|`), which enables the packing bounds.
#[derive(Debug, Clone)]
pub struct BuiltinInstance {
    pub name: String,
    pub instance: FiniteInstance,
    pub estimates: Option<Vec<f64>>,
}

fn estimation(name: &str, family: Family, points: &[f64], prior: &Prior, estimates: &[f64], n: usize) -> Result<BuiltinInstance> {
    let grid = ParamGrid::from_prior(points, prior)?;
    let thetas = grid.scalar_points().unwrap_or_default().to_vec();
    let loss = LossMatrix::absolute_error(&thetas, estimates)?;
    let k = grid.len();
    Ok(BuiltinInstance {
        name: format!("{name}/n={n}"),
        instance: FiniteInstance::new(grid, vec![1.0 / k as f64; k], family, loss, n)?,
        estimates: Some(estimates.to_vec()),
    })
}

fn generic(name: &str, family: Family, points: &[f64], priors: Vec<f64>, rows: Vec<Vec<f64>>, n: usize) -> Result<BuiltinInstance> {
    let labels = (0..rows[0].len()).map(|a| format!("a{a}")).collect();
    let loss = LossMatrix::new(points.to_vec(), labels, rows)?;
    let k = points.len();
    Ok(BuiltinInstance {
        name: format!("{name}/n={n}"),
        instance: FiniteInstance::new(ParamGrid::scalar(points.to_vec(), priors)?, vec![1.0 / k as f64; k], family, loss, n)?,
        estimates: None,
    })
}

/// 22 instances with `|Theta| <= 5`, `M <= 3`, `|A| <= 4`, `n <= 3`.
pub fn builtin_instances() -> Result<Vec<BuiltinInstance>> {
    let b12 = Prior::Beta { alpha: 1.0, beta: 2.0 };
    let b14 = Prior::Beta { alpha: 1.0, beta: 4.0 };
    let b22 = Prior::Beta { alpha: 2.0, beta: 2.0 };
    let bump = Prior::GaussianBump { center: 0.5 };
    let cat3 = Family::categorical(
        vec![0.2, 0.5, 0.8],
        vec![vec![0.6, 0.3, 0.1], vec![0.3, 0.4, 0.3], vec![0.1, 0.3, 0.6]],
    )?;
    let cat4 = Family::categorical(
        vec![0.2, 0.4, 0.6, 0.8],
        vec![vec![0.7, 0.2, 0.1], vec![0.4, 0.4, 0.2], vec![0.2, 0.4, 0.4], vec![0.1, 0.2, 0.7]],
    )?;
    let cat2 = Family::categorical(vec![0.25, 0.75], vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]])?;
    let p2 = [0.2, 0.8];
    let p3 = [0.2, 0.5, 0.8];
    let p4 = [0.1, 0.4, 0.6, 0.9];
    let p5 = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut out = Vec::new();
    for n in 0..=3 {
        out.push(estimation("bernoulli-2pt-uniform", Family::Bernoulli, &p2, &Prior::Uniform, &p2, n)?);
    }
    for n in 1..=3 {
        out.push(estimation("bernoulli-3pt-beta12", Family::Bernoulli, &p3, &b12, &p3, n)?);
    }
    for n in [1, 3] {
        out.push(estimation("bernoulli-4pt-bump", Family::Bernoulli, &p4, &bump, &p4, n)?);
    }
    for n in [2, 3] {
        out.push(estimation("bernoulli-5pt-beta14", Family::Bernoulli, &p5, &b14, &[0.1, 0.3, 0.5, 0.7], n)?);
    }
    out.push(estimation("bernoulli-2pt-beta12", Family::Bernoulli, &[0.25, 0.75], &b12, &[0.25, 0.75], 2)?);
    for n in 0..=2 {
        out.push(estimation("categorical-3pt-uniform", cat3.clone(), &p3, &Prior::Uniform, &p3, n)?);
    }
    for n in [1, 2] {
        out.push(estimation("categorical-4pt-beta22", cat4.clone(), &[0.2, 0.4, 0.6, 0.8], &b22, &[0.2, 0.4, 0.6, 0.8], n)?);
    }
    out.push(estimation("categorical-2pt-beta12", cat2, &[0.25, 0.75], &b12, &[0.25, 0.75], 2)?);
    let crossed = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    for n in [1, 2] {
        out.push(generic("crossed-2x2", Family::Bernoulli, &[0.3, 0.7], vec![1.5, 0.5], crossed.clone(), n)?);
    }
    let rows3 = vec![vec![0.0, 2.0, 5.0], vec![1.0, 0.0, 1.5], vec![4.0, 2.0, 0.0]];
    out.push(generic("categorical-3x3", cat3, &p3, vec![0.5, 1.0, 2.0], rows3, 2)?);
    let rows5 = vec![
        vec![0.0, 1.0, 3.0, 6.0],
        vec![1.0, 0.0, 1.0, 3.0],
        vec![3.0, 1.0, 0.5, 1.0],
        vec![6.0, 3.0, 1.0, 0.0],
        vec![8.0, 5.0, 2.0, 0.5],
    ];
    out.push(generic("bernoulli-5x4", Family::Bernoulli, &p5, vec![2.0, 1.5, 1.0, 0.5, 0.25], rows5, 3)?);
    Ok(out)
}

/// Every value on one row of the inequality chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub name: String,
    pub enumerated: f64,
    pub bayes_weighted: f64,
    pub gfano: f64,
    /// Best value per estimation method, when the instance is an
    /// estimation problem.
    pub lecam: Option<f64>,
    pub fano: Option<f64>,
    pub assouad: Option<f64>,
}

fn subsets(k: usize, min: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << k).filter(move |m| m.count_ones() as usize >= min).map(move |m| (0..k).filter(|&i| m >> i & 1 == 1).collect())
}

fn estimation_bounds(b: &BuiltinInstance, estimates: &[f64], report: &mut SuiteReport, enumerated: f64) -> Result<(f64, f64, f64)> {
    let inst = &b.instance;
    let grid = inst.grid();
    let pts = grid.scalar_points().unwrap_or_default();
    let pri = grid.priors();
    let (n, family) = (inst.n(), inst.family());
    let action_grid = ParamGrid::scalar(estimates.to_vec(), vec![1.0; estimates.len()])?;
    let (mut lecam, mut fano, mut assouad) = (0.0f64, 0.0f64, 0.0f64);
    let record = |report: &mut SuiteReport, method: &str, value: f64| {
        report.check(value <= enumerated + CHAIN_TOL, || format!("{}: {method} {value} > enumerated {enumerated}", b.name));
    };
    for s in subsets(pts.len(), 2) {
        let (sp, spri): (Vec<f64>, Vec<f64>) = s.iter().map(|&i| (pts[i], pri[i])).unzip();
        let delta = max_delta(&sp, &spri)?;
        let packing = Packing::scalar(&sp, spri.clone(), delta)?;
        if s.len() == 2 {
            for route in [TvRoute::Exact, TvRoute::Pinsker] {
                let v = lecam_bound(&packing, family, n, route)?.value;
                record(report, "lecam", v);
                lecam = lecam.max(v);
            }
            // one-dimensional hypercube through the same two points
            let scale = max_delta_two_point(sp[0], sp[1], spri[0], spri[1]);
            let sep = HammingSeparation::hypercube(vec![sp[0] + scale / spri[0]], scale, spri.clone())?;
            let sep = sep.with_delta(max_delta_hamming(&sep, &action_grid)?.min(sep.delta()));
            for route in [TvRoute::Exact, TvRoute::Pinsker] {
                let v = assouad_bound(&sep, &action_grid, family, n, route)?.value;
                record(report, "assouad", v);
                assouad = assouad.max(v);
            }
        }
        for route in [InfoRoute::Mixture, InfoRoute::Pairwise] {
            let v = fano_bound(&packing, family, n, route)?.value;
            record(report, "fano", v);
            fano = fano.max(v);
        }
    }
    Ok((lecam, fano, assouad))
}

/// Checks `bound <= enumerated` for every method and
/// `gfano <= weighted Bayes <= enumerated` on one instance.
pub fn inequality_chain(b: &BuiltinInstance, report: &mut SuiteReport) -> Result<ChainReport> {
    let inst = &b.instance;
    let enumerated = prioritized_risk_enumerated(inst)?.value;
    let bayes = bayes_risk_exact(inst, true);
    let g = GFanoInstance::new(inst.grid().clone(), inst.weights().to_vec(), inst.family().clone(), inst.loss().clone(), inst.n())?;
    let gfano = gfano_prioritized_lower(&g)?.value;
    report.check(gfano <= bayes + CHAIN_TOL, || format!("{}: gfano {gfano} > bayes {bayes}", b.name));
    report.check(bayes <= enumerated + CHAIN_TOL, || format!("{}: bayes {bayes} > enumerated {enumerated}", b.name));
    report.check(gfano <= enumerated + CHAIN_TOL, || format!("{}: gfano {gfano} > enumerated {enumerated}", b.name));
    let (lecam, fano, assouad) = match &b.estimates {
        Some(est) => {
            let (l, f, a) = estimation_bounds(b, est, report, enumerated)?;
            (Some(l), Some(f), Some(a))
        }
        None => (None, None, None),
    };
    Ok(ChainReport { name: b.name.clone(), enumerated, bayes_weighted: bayes, gfano, lecam, fano, assouad })
}

pub fn inequality_chain_suite() -> Result<(SuiteReport, Vec<ChainReport>)> {
    let mut report = SuiteReport::new("inequality-chain");
    let rows = builtin_instances()?
        .iter()
        .map(|b| inequality_chain(b, &mut report))
        .collect::<Result<Vec<_>>>()?;
    Ok((report, rows))
}

/// Pinsker and the sigmoid inequality on `pairs` random pairs each, and
/// tensorization of KL for `n <= 5`.
pub fn divergence_suite(seed: u64, pairs: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("divergence");
    for _ in 0..pairs {
        let (p, q): (f64, f64) = (rng.gen_range(0.0..=1.0), rng.gen_range(1e-6..1.0 - 1e-6));
        let tv = tv_exact(&[1.0 - p, p], &[1.0 - q, q])?;
        let kl = kl_bernoulli(p, q)?;
        report.check(tv <= (kl / 2.0).sqrt() + 1e-15, || format!("pinsker: p={p} q={q} tv={tv} kl={kl}"));
    }
    for _ in 0..pairs {
        let (a, b): (f64, f64) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let s = binary_kl_sum_bound(a, b);
        report.check(s.symmetric_kl <= s.bound * (1.0 + 1e-12) + 1e-15, || {
            format!("sigmoid: a={a} b={b} kl={} bound={}", s.symmetric_kl, s.bound)
        });
    }
    let simplex = |rng: &mut ChaCha8Rng, m: usize| {
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect::<Vec<f64>>()
    };
    for n in 1..=5 {
        for _ in 0..40 {
            let m = rng.gen_range(2..=4);
            let (p, q) = (simplex(&mut rng, m), simplex(&mut rng, m));
            let single = kl_masses(&p, &q);
            let joint = kl_masses(&product_table(&p, n, DEFAULT_PRODUCT_CAP)?, &product_table(&q, n, DEFAULT_PRODUCT_CAP)?);
            report.check((joint - n as f64 * single).abs() <= TENSORIZATION_TOL, || {
                format!("tensorization: n={n} joint={joint} n*single={}", n as f64 * single)
            });
        }
    }
    Ok(report)
}

/// The reduction inequality for `learners` random table learners on
/// enumerable Bernoulli packings, evaluated exactly.
pub fn reduction_suite(seed: u64, learners: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("reduction");
    for trial in 0..learners {
        let k = rng.gen_range(2..=3);
        let mut pts: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..0.95)).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        if pts.len() < 2 {
            pts = vec![0.3, 0.7];
        }
        let priors: Vec<f64> = pts.iter().map(|_| rng.gen_range(0.2..2.0)).collect();
        let packing = Packing::scalar(&pts, priors.clone(), max_delta(&pts, &priors)?)?;
        let n = rng.gen_range(1..=4);
        let table: Vec<Action> = (0..1usize << n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Action::Scalar(pts[rng.gen_range(0..pts.len())])
                } else {
                    Action::Scalar(rng.gen_range(0.0..=1.0))
                }
            })
            .collect();
        let learner = Learner::from_table(format!("random-{trial}"), 2, table);
        let c = reduction_check(&learner, &packing, &Family::Bernoulli, n, Evaluation::exact())?;
        report.check(c.gap() >= -REDUCTION_TOL, || {
            format!("reduction trial {trial}: risk {} < delta*error {}", c.prioritized_risk, c.delta * c.test_error)
        });
    }
    Ok(report)
}

/// Per-coordinate vs common-lambda closed form on `count` random designs
/// (`d <= 6`, `n <= 20`), the unit case and homogeneity.
pub fn logistic_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("logistic");
    let unit = logistic_closed_form(&Design::from_flat(1, &[1.0])?, &[1.0])?.value;
    report.check(unit == 0.0625, || format!("unit case {unit} != 0.0625"));
    for _ in 0..count {
        let d = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=20);
        let z: Vec<f64> = (0..d * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let design = Design::from_flat(d, &z)?;
        let lambda = rng.gen_range(1.0..5.0);
        let r = logistic_closed_form(&design, &vec![lambda; d])?;
        let common = match r.witness {
            crate::bounds::Witness::LogisticClosed { common_lambda_value, .. } => common_lambda_value,
            _ => None,
        };
        let ok = common.is_some_and(|c| (c - r.value).abs() <= 1e-12 * r.value);
        report.check(ok, || format!("closed forms disagree for d={d} n={n}: {} vs {common:?}", r.value));
        let c = rng.gen_range(0.1..10.0);
        let scaled = logistic_closed_form(&design.scaled(c), &vec![lambda; d])?.value;
        report.check((scaled - r.value / c).abs() <= 1e-12 * r.value / c, || {
            format!("homogeneity d={d} n={n} c={c}: {scaled} vs {}", r.value / c)
        });
    }
    Ok(report)
}

/// Everything `selftest` runs, with fixed seeds.
pub fn full_suite(seed: u64) -> Result<Vec<SuiteReport>> {
    let (chain, _) = inequality_chain_suite()?;
    let mut oracle = SuiteReport::new("oracle-properties");
    for b in builtin_instances()? {
        let inst = &b.instance;
        let mut prev = f64::INFINITY;
        for n in 0..=inst.n() {
            let at = FiniteInstance::new(inst.grid().clone(), inst.weights().to_vec(), inst.family().clone(), inst.loss().clone(), n)?;
            let v = bayes_risk_exact(&at, true);
            oracle.check(v <= prev + CHAIN_TOL, || format!("{}: bayes risk increased at n={n}", b.name));
            prev = v;
        }
        let rev: Vec<usize> = (0..inst.loss().num_actions()).rev().collect();
        let relabeled = FiniteInstance::new(inst.grid().clone(), inst.weights().to_vec(), inst.family().clone(), inst.loss().select_actions(&rev)?, inst.n())?;
        let (a, r) = (bayes_risk_exact(inst, true), bayes_risk_exact(&relabeled, true));
        oracle.check((a - r).abs() <= CHAIN_TOL, || format!("{}: relabeling changed bayes risk {a} -> {r}", b.name));
    }
    let mut all = SuiteReport::new("total");
    let suites = vec![
        chain,
        oracle,
        divergence_suite(seed, 10_000)?,
        reduction_suite(seed, 100)?,
        logistic_suite(seed, 100)?,
    ];
    for s in &suites {
        all.absorb(s.clone());
    }
    let mut out = suites;
    out.push(all);
    Ok(out)
}
