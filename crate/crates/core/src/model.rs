//! Shared domain types: parameter grids with prior weights, observation
//! families, losses and learners.
//!
//! Observations are always encoded as indices `0..support_size`. For the
//! Bernoulli family index `k` is the outcome `k`; for the Zipf family index
//! `k` is rank `k + 1`; for logistic labels index `k` encodes a whole label
//! vector, bit `i` set meaning `y_i = +1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

/// Tolerance used when matching tabulated parameters by value.
const MATCH_TOL: f64 = 1e-9;

/// Tolerance on probability vectors summing to one.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Prior (or more generally, prioritization) function over a scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Uniform,
    /// Beta(alpha, beta) density on [0, 1]; zero outside.
    Beta { alpha: f64, beta: f64 },
    /// `exp(-(theta - center)^2)`, unnormalized.
    GaussianBump { center: f64 },
}

impl Prior {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            Prior::Uniform => 1.0,
            Prior::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&theta) {
                    return 0.0;
                }
                let ln_norm = ln_beta(alpha, beta);
                // powf(0, 0) == 1 gives the one-sided limits at the endpoints
                theta.powf(alpha - 1.0) * (1.0 - theta).powf(beta - 1.0) / ln_norm.exp()
            }
            Prior::GaussianBump { center } => (-(theta - center).powi(2)).exp(),
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Uniform => write!(f, "uniform"),
            Prior::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            Prior::GaussianBump { center } => write!(f, "bump:{center}"),
        }
    }
}

impl FromStr for Prior {
    type Err = Error;

    /// Accepts `uniform`, `beta:A,B` and `bump:C`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unrecognised prior {s:?}"));
        if s == "uniform" {
            return Ok(Prior::Uniform);
        }
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = parse_list(args)?;
        match (kind, nums.as_slice()) {
            ("beta", [a, b]) if *a > 0.0 && *b > 0.0 => Ok(Prior::Beta { alpha: *a, beta: *b }),
            ("bump", [c]) => Ok(Prior::GaussianBump { center: *c }),
            _ => Err(bad()),
        }
    }
}

/// Parse a comma separated list of decimal numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
        })
        .collect()
}

/// A finite set of parameter points with the prior value attached to each.
///
/// Points are scalars (`dim == 1`, strictly increasing) or fixed-dimension
/// vectors (distinct). Every prior value is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    dim: usize,
    coords: Vec<f64>,
    prior: Vec<f64>,
}

impl ParamGrid {
    pub fn scalar(points: Vec<f64>, prior: Vec<f64>) -> Result<Self> {
        if points.len() != prior.len() {
            return Err(Error::LengthMismatch(points.len(), prior.len()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "scalar grid points must be strictly increasing".into(),
            ));
        }
        check_prior(&prior)?;
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("non-finite grid point".into()));
        }
        Ok(Self { dim: 1, coords: points, prior })
    }

    pub fn vector(points: Vec<Vec<f64>>, prior: Vec<f64>) -> Result<Self> {
        if points.len() != prior.len() {
            return Err(Error::LengthMismatch(points.len(), prior.len()));
        }
        let dim = points.first().map_or(1, Vec::len);
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidParameter("grid points must share one dimension".into()));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidParameter(format!("duplicate grid point {i}")));
                }
            }
        }
        check_prior(&prior)?;
        Ok(Self { dim, coords: points.concat(), prior })
    }

    /// Scalar grid whose prior values are read off `prior`. Points where the
    /// prior vanishes carry no weight in any prior-weighted supremum and are
    /// dropped.
    pub fn from_prior(points: &[f64], prior: &Prior) -> Result<Self> {
        let (pts, vals): (Vec<f64>, Vec<f64>) = points
            .iter()
            .map(|&t| (t, prior.eval(t)))
            .filter(|&(_, v)| v > 0.0)
            .unzip();
        if pts.is_empty() {
            return Err(Error::InvalidParameter("prior vanishes on every grid point".into()));
        }
        Self::scalar(pts, vals)
    }

    /// `k` uniformly spaced points on [0, 1] (endpoints included).
    pub fn unit_interval(k: usize, prior: &Prior) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("unit interval grid needs >= 2 points".into()));
        }
        let pts: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        Self::from_prior(&pts, prior)
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// First coordinate of point `i`; the point itself on scalar grids.
    pub fn scalar_point(&self, i: usize) -> f64 {
        self.coords[i * self.dim]
    }

    pub fn scalar_points(&self) -> Option<&[f64]> {
        (self.dim == 1).then_some(self.coords.as_slice())
    }

    pub fn prior(&self, i: usize) -> f64 {
        self.prior[i]
    }

    pub fn priors(&self) -> &[f64] {
        &self.prior
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks(self.dim)
    }
}

fn check_prior(prior: &[f64]) -> Result<()> {
    match prior.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(i) => Err(Error::InvalidParameter(format!(
            "prior value {} at index {i} is not strictly positive",
            prior[i]
        ))),
        None => Ok(()),
    }
}

/// Fixed regressors `z_1..z_n` in R^d, stored one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    d: usize,
    n: usize,
    z: Vec<f64>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("regressor rows must be non-empty and equal length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite regressor".into()));
        }
        Ok(Self { d, n: rows.len(), z: rows.concat() })
    }

    /// Build from `d` and values listed observation by observation.
    pub fn from_flat(d: usize, values: &[f64]) -> Result<Self> {
        if d == 0 || values.is_empty() || values.len() % d != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} regressor values do not fill rows of width {d}",
                values.len()
            )));
        }
        let rows: Vec<Vec<f64>> = values.chunks(d).map(<[f64]>::to_vec).collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `z_ij`: coordinate `j` of regressor `i`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.z[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.z[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.z.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.z.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `sum_i z_ij^2` for each coordinate `j`.
    pub fn coordinate_energy(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.d];
        for row in self.z.chunks(self.d) {
            for (acc, v) in e.iter_mut().zip(row) {
                *acc += v * v;
            }
        }
        e
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { d: self.d, n: self.n, z: self.z.iter().map(|v| v * c).collect() }
    }

    /// The first `k` regressors.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidParameter(format!("prefix {k} of {} regressors", self.n)));
        }
        Ok(Self { d: self.d, n: k, z: self.z[..k * self.d].to_vec() })
    }
}

/// Largest number of regressors whose label vectors are tabulated.
const MAX_LOGISTIC_LABELS: usize = 20;

/// Observation model `theta -> P_theta` over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Outcomes {0, 1} with mean theta.
    Bernoulli,
    /// One probability row per tabulated scalar parameter.
    Categorical { thetas: Vec<f64>, table: Vec<Vec<f64>> },
    /// Ranks 1..=support with mass proportional to rank^-theta.
    Zipf { support: usize },
    /// Labels y_i in {-1, 1}, independent given the regressors, with
    /// P(y_i = y) = 1 / (1 + exp(-y z_i^T theta)). One observation is the
    /// whole label vector.
    LogisticLabels { design: Design },
}

impl Family {
    pub fn categorical(thetas: Vec<f64>, table: Vec<Vec<f64>>) -> Result<Self> {
        if thetas.len() != table.len() || thetas.is_empty() {
            return Err(Error::LengthMismatch(thetas.len(), table.len()));
        }
        let m = table[0].len();
        for row in &table {
            if row.len() != m {
                return Err(Error::LengthMismatch(row.len(), m));
            }
            crate::divergence::validate_simplex(row)?;
        }
        Ok(Family::Categorical { thetas, table })
    }

    pub fn zipf(support: usize) -> Result<Self> {
        if support == 0 {
            return Err(Error::InvalidParameter("zipf support must be positive".into()));
        }
        Ok(Family::Zipf { support })
    }

    pub fn logistic(design: Design) -> Result<Self> {
        if design.len() > MAX_LOGISTIC_LABELS {
            return Err(Error::EnumerationTooLarge {
                size: 1u128 << design.len(),
                cap: 1u64 << MAX_LOGISTIC_LABELS,
            });
        }
        Ok(Family::LogisticLabels { design })
    }

    /// Number of atoms of a single observation.
    pub fn support_size(&self) -> usize {
        match self {
            Family::Bernoulli => 2,
            Family::Categorical { table, .. } => table[0].len(),
            Family::Zipf { support } => *support,
            Family::LogisticLabels { design } => 1 << design.len(),
        }
    }

    /// Probability mass vector of one observation under `theta`.
    pub fn masses(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match self {
            Family::Bernoulli => {
                let t = scalar_of(theta)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::Domain(format!("bernoulli mean {t} outside [0, 1]")));
                }
                Ok(vec![1.0 - t, t])
            }
            Family::Categorical { thetas, table } => {
                let t = scalar_of(theta)?;
                thetas
                    .iter()
                    .position(|&s| (s - t).abs() <= MATCH_TOL)
                    .map(|i| table[i].clone())
                    .ok_or_else(|| Error::UnknownParameter(theta.to_vec()))
            }
            Family::Zipf { support } => {
                let t = scalar_of(theta)?;
                if !t.is_finite() {
                    return Err(Error::Domain(format!("zipf exponent {t}")));
                }
                // rank 1 has weight 1, so the normalizer cannot underflow
                let w: Vec<f64> = (1..=*support).map(|x| (-t * (x as f64).ln()).exp()).collect();
                let total: f64 = w.iter().sum();
                Ok(w.into_iter().map(|v| v / total).collect())
            }
            Family::LogisticLabels { design } => {
                if theta.len() != design.dim() {
                    return Err(Error::LengthMismatch(theta.len(), design.dim()));
                }
                let margins: Vec<f64> = (0..design.len())
                    .map(|i| design.row(i).iter().zip(theta).map(|(z, t)| z * t).sum())
                    .collect();
                let masses = (0..1usize << design.len())
                    .map(|k| {
                        margins
                            .iter()
                            .enumerate()
                            .map(|(i, &m)| if k >> i & 1 == 1 { sigmoid(m) } else { sigmoid(-m) })
                            .product()
                    })
                    .collect();
                Ok(masses)
            }
        }
    }
}

/// Logistic function 1 / (1 + e^-x).
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn scalar_of(theta: &[f64]) -> Result<f64> {
    match theta {
        [t] => Ok(*t),
        _ => Err(Error::LengthMismatch(theta.len(), 1)),
    }
}

/// Pseudometric on the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `|theta - theta_hat|` on scalars.
    AbsDiff,
    /// `||theta - theta_hat||_1`.
    L1,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::AbsDiff => "abs-diff",
            Metric::L1 => "l1",
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch(a.len(), b.len()));
        }
        if self == Metric::AbsDiff && a.len() != 1 {
            return Err(Error::LengthMismatch(a.len(), 1));
        }
        Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
    }
}

/// Loss over (parameter, action) for finite action sets. Rows are keyed by
/// scalar parameter values, columns by action label.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    thetas: Vec<f64>,
    actions: Vec<String>,
    values: Vec<f64>,
}

impl LossMatrix {
    pub fn new(thetas: Vec<f64>, actions: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        if thetas.len() != rows.len() || thetas.is_empty() {
            return Err(Error::LengthMismatch(thetas.len(), rows.len()));
        }
        for row in &rows {
            if row.len() != actions.len() {
                return Err(Error::LengthMismatch(row.len(), actions.len()));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidParameter(format!("loss entry {v} must be finite and >= 0")));
            }
        }
        Ok(Self { thetas, actions, values: rows.concat() })
    }

    /// `|theta_i - a_k|` for scalar estimates `a_k`.
    pub fn absolute_error(thetas: &[f64], estimates: &[f64]) -> Result<Self> {
        let rows = thetas
            .iter()
            .map(|t| estimates.iter().map(|a| (t - a).abs()).collect())
            .collect();
        let labels = estimates.iter().map(|a| a.to_string()).collect();
        Self::new(thetas.to_vec(), labels, rows)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn num_params(&self) -> usize {
        self.thetas.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn get(&self, row: usize, action: usize) -> f64 {
        self.values[row * self.actions.len() + action]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let k = self.actions.len();
        &self.values[row * k..(row + 1) * k]
    }

    pub fn row_index(&self, theta: f64) -> Option<usize> {
        self.thetas.iter().position(|&t| (t - theta).abs() <= MATCH_TOL)
    }

    /// Keep only the listed action columns, in the given order.
    pub fn select_actions(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.actions.len()) {
            return Err(Error::InvalidParameter(format!("action column {c} out of range")));
        }
        let rows = (0..self.thetas.len())
            .map(|i| columns.iter().map(|&c| self.get(i, c)).collect())
            .collect();
        let labels = columns.iter().map(|&c| self.actions[c].clone()).collect();
        Self::new(self.thetas.clone(), labels, rows)
    }

    /// Reads the CSV layout: header row `theta,<action labels...>`, then one
    /// row per parameter with its value in the first column.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let actions: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_owned).collect();
        let mut thetas = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut vals = rec.iter().map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            });
            let theta = vals.next().ok_or_else(|| Error::Parse("empty loss-matrix row".into()))??;
            thetas.push(theta);
            rows.push(vals.collect::<Result<Vec<f64>>>()?);
        }
        Self::new(thetas, actions, rows)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["theta".to_string()];
        header.extend(self.actions.iter().cloned());
        w.write_record(&header)?;
        for (i, t) in self.thetas.iter().enumerate() {
            let mut rec = vec![format!("{t:.16e}")];
            rec.extend(self.row(i).iter().map(|v| format!("{v:.16e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What a learner outputs for a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Scalar(f64),
    Vector(Vec<f64>),
    /// Column of a loss matrix.
    Index(usize),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Scalar(v) => write!(f, "{v}"),
            Action::Vector(v) => write!(f, "{v:?}"),
            Action::Index(k) => write!(f, "#{k}"),
        }
    }
}

/// Loss `L(theta, a)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    Pseudometric(Metric),
    Matrix(LossMatrix),
}

impl LossSpec {
    pub fn eval(&self, theta: &[f64], action: &Action) -> Result<f64> {
        match (self, action) {
            (LossSpec::Pseudometric(m), Action::Scalar(a)) => m.distance(theta, std::slice::from_ref(a)),
            (LossSpec::Pseudometric(m), Action::Vector(a)) => m.distance(theta, a),
            (LossSpec::Matrix(lm), Action::Index(k)) => {
                let t = scalar_of(theta)?;
                let row = lm.row_index(t).ok_or_else(|| Error::UnknownParameter(theta.to_vec()))?;
                if *k >= lm.num_actions() {
                    return Err(Error::IncompatibleAction(action.to_string()));
                }
                Ok(lm.get(row, *k))
            }
            _ => Err(Error::IncompatibleAction(action.to_string())),
        }
    }
}

type Rule = dyn Fn(&[usize]) -> Action + Send + Sync;

/// A deterministic learner: dataset (observation indices) to action.
#[derive(Clone)]
pub struct Learner {
    label: String,
    rule: Arc<Rule>,
}

impl fmt::Debug for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Learner").field("label", &self.label).finish()
    }
}

impl Learner {
    pub fn new(label: impl Into<String>, rule: impl Fn(&[usize]) -> Action + Send + Sync + 'static) -> Self {
        Self { label: label.into(), rule: Arc::new(rule) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn act(&self, data: &[usize]) -> Action {
        (self.rule)(data)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant {value}"), move |_| Action::Scalar(value))
    }

    pub fn constant_index(k: usize) -> Self {
        Self::new(format!("constant action {k}"), move |_| Action::Index(k))
    }

    /// Fraction of ones in a Bernoulli dataset; 1/2 on the empty dataset.
    pub fn empirical_mean() -> Self {
        Self::new("empirical mean", |data| {
            if data.is_empty() {
                Action::Scalar(0.5)
            } else {
                Action::Scalar(data.iter().filter(|&&x| x == 1).count() as f64 / data.len() as f64)
            }
        })
    }

    /// Posterior mean `(alpha + s) / (alpha + beta + n)` under a Beta prior
    /// after `s` ones in `n` Bernoulli trials.
    pub fn beta_posterior_mean(alpha: f64, beta: f64) -> Self {
        Self::new(format!("posterior mean Beta({alpha},{beta})"), move |data| {
            let s = data.iter().filter(|&&x| x == 1).count() as f64;
            Action::Scalar((alpha + s) / (alpha + beta + data.len() as f64))
        })
    }

    /// Looks the dataset up in a table indexed by its lexicographic rank
    /// (first observation most significant) in base `support`.
    pub fn from_table(label: impl Into<String>, support: usize, table: Vec<Action>) -> Self {
        Self::new(label, move |data| table[dataset_rank(data, support)].clone())
    }
}

/// Lexicographic rank of a dataset among all `support^n` datasets.
pub fn dataset_rank(data: &[usize], support: usize) -> usize {
    data.iter().fold(0, |acc, &x| acc * support + x)
}
