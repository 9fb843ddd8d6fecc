//! Resolved run configuration, its INI manifest, and the CSV loaders used
//! by the command line.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::bounds::estimation::{AUTO_EXACT_LIMIT, CLOSED_FORM_AGREEMENT};
use crate::bounds::gfano::LAMBDA_REL_TOL;
use crate::bounds::TvRoute;
use crate::error::{Error, Result};
use crate::experiments::{self, logistic, upper, zipf};
use crate::model::{parse_list, Design, Family, LossMatrix, Prior};
use crate::risk::RNG_ALGORITHM;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PRISK_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Bernoulli,
    Logistic,
    Zipf,
    Upper,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bernoulli => "bernoulli",
            ExperimentKind::Logistic => "logistic",
            ExperimentKind::Zipf => "zipf",
            ExperimentKind::Upper => "upper",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bernoulli" => Ok(ExperimentKind::Bernoulli),
            "logistic" => Ok(ExperimentKind::Logistic),
            "zipf" => Ok(ExperimentKind::Zipf),
            "upper" => Ok(ExperimentKind::Upper),
            other => Err(Error::Parse(format!("unknown experiment {other:?}"))),
        }
    }
}

/// Everything an experiment run depends on. Fields irrelevant to the
/// chosen experiment are still recorded so a manifest is complete.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub svg: bool,
    pub n_list: Vec<usize>,
    /// Bernoulli: one curve per prior. Upper: the first prior defines the
    /// prioritized risk.
    pub priors: Vec<Prior>,
    pub route: TvRoute,
    pub num_datasets: usize,
    pub grid_points: usize,
    pub action_sizes: Vec<usize>,
    pub zipf_support: usize,
    pub zipf_thetas: usize,
    pub zipf_max_exponent: f64,
    pub zipf_prior_center: f64,
    pub loss_cap: f64,
    pub loss_base: f64,
    pub loss_slope: f64,
    pub loss_csv: Option<PathBuf>,
    pub lambda: f64,
    pub dim: usize,
    pub regressors: usize,
    pub z_csv: Option<PathBuf>,
    pub z_prime_csv: Option<PathBuf>,
    /// `Z' = scale * Z` when no `Z'` file is given.
    pub z_prime_scale: f64,
}

impl RunConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let z = zipf::ZipfConfig::default();
        let (n_list, priors) = match experiment {
            ExperimentKind::Bernoulli => (
                experiments::DEFAULT_N_LIST.to_vec(),
                vec![Prior::Uniform, Prior::Beta { alpha: 1.0, beta: 2.0 }],
            ),
            ExperimentKind::Upper => (experiments::DEFAULT_N_LIST.to_vec(), vec![Prior::Beta { alpha: 1.0, beta: 2.0 }]),
            ExperimentKind::Zipf => (z.n_list.clone(), vec![Prior::GaussianBump { center: z.prior_center }]),
            ExperimentKind::Logistic => (Vec::new(), vec![Prior::Uniform]),
        };
        Self {
            experiment,
            seed: 0,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            svg: true,
            n_list,
            priors,
            route: TvRoute::Auto,
            num_datasets: upper::DEFAULT_NUM_DATASETS,
            grid_points: upper::DEFAULT_GRID_POINTS,
            action_sizes: z.action_sizes.clone(),
            zipf_support: z.support,
            zipf_thetas: z.num_thetas,
            zipf_max_exponent: z.max_exponent,
            zipf_prior_center: z.prior_center,
            loss_cap: z.loss.cap,
            loss_base: z.loss.base,
            loss_slope: z.loss.slope,
            loss_csv: None,
            lambda: logistic::DEFAULT_LAMBDA,
            dim: logistic::DEFAULT_DIM,
            regressors: logistic::DEFAULT_REGRESSORS,
            z_csv: None,
            z_prime_csv: None,
            z_prime_scale: 2.0,
        }
    }

    pub fn zipf_config(&self) -> zipf::ZipfConfig {
        zipf::ZipfConfig {
            support: self.zipf_support,
            num_thetas: self.zipf_thetas,
            max_exponent: self.zipf_max_exponent,
            prior_center: self.zipf_prior_center,
            action_sizes: self.action_sizes.clone(),
            n_list: self.n_list.clone(),
            loss: zipf::SyntheticLoss { cap: self.loss_cap, base: self.loss_base, slope: self.loss_slope },
        }
    }

    pub fn upper_config(&self) -> upper::UpperConfig {
        upper::UpperConfig {
            n_list: self.n_list.clone(),
            num_datasets: self.num_datasets,
            seed: self.seed,
            grid_points: self.grid_points,
            prior: self.priors.first().cloned().unwrap_or(Prior::Beta { alpha: 1.0, beta: 2.0 }),
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.csv", self.experiment))
    }

    pub fn svg_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.svg", self.experiment))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.manifest.ini", self.experiment))
    }

    pub fn to_ini(&self) -> Ini {
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut ini = Ini::new();
        ini.with_section(Some("run"))
            .set("experiment", self.experiment.name())
            .set("seed", self.seed.to_string())
            .set("out_dir", self.out_dir.display().to_string())
            .set("svg", self.svg.to_string());
        ini.with_section(Some("params"))
            .set("n_list", join(&self.n_list))
            .set("priors", self.priors.iter().map(Prior::to_string).collect::<Vec<_>>().join(";"))
            .set("route", self.route.to_string())
            .set("num_datasets", self.num_datasets.to_string())
            .set("grid_points", self.grid_points.to_string());
        ini.with_section(Some("zipf"))
            .set("action_sizes", join(&self.action_sizes))
            .set("support", self.zipf_support.to_string())
            .set("num_thetas", self.zipf_thetas.to_string())
            .set("max_exponent", self.zipf_max_exponent.to_string())
            .set("prior_center", self.zipf_prior_center.to_string())
            .set("loss_cap", self.loss_cap.to_string())
            .set("loss_base", self.loss_base.to_string())
            .set("loss_slope", self.loss_slope.to_string())
            .set("loss_csv", opt(&self.loss_csv));
        ini.with_section(Some("logistic"))
            .set("lambda", self.lambda.to_string())
            .set("dim", self.dim.to_string())
            .set("regressors", self.regressors.to_string())
            .set("z_csv", opt(&self.z_csv))
            .set("z_prime_csv", opt(&self.z_prime_csv))
            .set("z_prime_scale", self.z_prime_scale.to_string());
        // recorded for reference; not read back
        ini.with_section(Some("tolerances"))
            .set("rng", RNG_ALGORITHM)
            .set("auto_exact_limit", AUTO_EXACT_LIMIT.to_string())
            .set("closed_form_agreement", CLOSED_FORM_AGREEMENT.to_string())
            .set("lambda_rel_tol", LAMBDA_REL_TOL.to_string());
        ini
    }

    pub fn to_ini_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.to_ini().write_to(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let experiment: ExperimentKind = ini
            .get_from(Some("run"), "experiment")
            .ok_or_else(|| Error::Parse("manifest lacks run.experiment".into()))?
            .parse()?;
        let mut cfg = Self::defaults(experiment);
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            if section == "tolerances" {
                continue;
            }
            for (key, value) in props.iter() {
                cfg.set(section, key, value)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_ini_str(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match (section, key) {
            ("run", "experiment") => {}
            ("run", "seed") => self.seed = num(key, value)?,
            ("run", "out_dir") => self.out_dir = PathBuf::from(value),
            ("run", "svg") => self.svg = num(key, value)?,
            ("params", "n_list") => self.n_list = usize_list(value)?,
            ("params", "priors") => self.priors = value.split(';').map(str::parse).collect::<Result<_>>()?,
            ("params", "route") => self.route = value.parse()?,
            ("params", "num_datasets") => self.num_datasets = num(key, value)?,
            ("params", "grid_points") => self.grid_points = num(key, value)?,
            ("zipf", "action_sizes") => self.action_sizes = usize_list(value)?,
            ("zipf", "support") => self.zipf_support = num(key, value)?,
            ("zipf", "num_thetas") => self.zipf_thetas = num(key, value)?,
            ("zipf", "max_exponent") => self.zipf_max_exponent = num(key, value)?,
            ("zipf", "prior_center") => self.zipf_prior_center = num(key, value)?,
            ("zipf", "loss_cap") => self.loss_cap = num(key, value)?,
            ("zipf", "loss_base") => self.loss_base = num(key, value)?,
            ("zipf", "loss_slope") => self.loss_slope = num(key, value)?,
            ("zipf", "loss_csv") => self.loss_csv = path(value),
            ("logistic", "lambda") => self.lambda = num(key, value)?,
            ("logistic", "dim") => self.dim = num(key, value)?,
            ("logistic", "regressors") => self.regressors = num(key, value)?,
            ("logistic", "z_csv") => self.z_csv = path(value),
            ("logistic", "z_prime_csv") => self.z_prime_csv = path(value),
            ("logistic", "z_prime_scale") => self.z_prime_scale = num(key, value)?,
            _ => return Err(Error::Parse(format!("unknown config key {section}.{key}"))),
        }
        Ok(())
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
}

pub fn usize_list(s: &str) -> Result<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| num("list", t)).collect()
}

/// Regressor CSV: one regressor per row, one coordinate per column, no
/// header.
pub fn load_design_csv(path: &Path) -> Result<Design> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(File::open(path)?);
    let rows = r
        .records()
        .map(|rec| rec?.iter().map(|v| num("regressor", v)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Design::from_rows(&rows)
}

/// Categorical family CSV: a header row, then `theta,p_1,...,p_M` rows.
pub fn load_family_csv(path: &Path) -> Result<Family> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(File::open(path)?);
    let mut thetas = Vec::new();
    let mut table = Vec::new();
    for rec in r.records() {
        let v = rec?.iter().map(|x| num("family", x)).collect::<Result<Vec<f64>>>()?;
        let (t, rest) = v.split_first().ok_or_else(|| Error::Parse("empty family row".into()))?;
        thetas.push(*t);
        table.push(rest.to_vec());
    }
    Family::categorical(thetas, table)
}

pub fn load_loss_csv(path: &Path) -> Result<LossMatrix> {
    LossMatrix::from_csv(File::open(path)?)
}

/// `bernoulli`, `zipf:M`, or a categorical table when `csv` is given.
pub fn parse_family(spec: &str, csv: Option<&Path>) -> Result<Family> {
    if let Some(p) = csv {
        return load_family_csv(p);
    }
    match spec.trim().split_once(':') {
        None if spec.trim() == "bernoulli" => Ok(Family::Bernoulli),
        Some(("zipf", m)) => Family::zipf(num("zipf support", m)?),
        _ => Err(Error::Parse(format!("unknown family {spec:?} (bernoulli, zipf:M)"))),
    }
}

/// Prior values at `points`: explicit values when given, else the prior
/// evaluated pointwise.
pub fn prior_values(points: &[f64], prior: &Prior, explicit: Option<&str>) -> Result<Vec<f64>> {
    match explicit {
        Some(s) => {
            let v = parse_list(s)?;
            if v.len() != points.len() {
                return Err(Error::LengthMismatch(v.len(), points.len()));
            }
            Ok(v)
        }
        None => Ok(points.iter().map(|&t| prior.eval(t)).collect()),
    }
}
