//! Command-line front end. Exit codes: 0 success, 2 input error, 3
//! invariant violation.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::estimation::{
    assouad_bound, fano_bound, lecam_bound, lecam_optimize, logistic_closed_form, PackingSearch,
};
use crate::bounds::gfano::{gfano_bayes_lower, gfano_prioritized_lower, GFanoInstance};
use crate::bounds::{BoundResult, InfoRoute, TvRoute};
use crate::config::{self, load_design_csv, load_loss_csv, parse_family, prior_values, ExperimentKind, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{bernoulli, logistic, upper, zipf};
use crate::model::{parse_list, Design, Family, ParamGrid, Prior};
use crate::packing::{max_delta, max_delta_two_point, HammingSeparation, Packing};
use crate::report::{emit_svg, write_curves_csv, AxesConfig, CurveSeries};
use crate::validation::{full_suite, inequality_chain_suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "prisk", version, about = "Lower and upper bounds on prioritized risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute one lower bound and print its value and witness.
    Bound {
        #[command(subcommand)]
        bound: BoundCmd,
    },
    /// Run an experiment, writing CSV, SVG and a manifest to the output
    /// directory.
    Experiment(ExperimentArgs),
    /// Exact brute-force checks on the built-in tiny instances.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Run every property suite.
    Selftest {
        /// Seed for the randomized suites.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// Check bound <= Bayes risk <= enumerated prioritized risk on every
    /// built-in instance.
    Check,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    /// Observation family: bernoulli or zipf:M.
    #[arg(long, default_value = "bernoulli")]
    family: String,
    /// Categorical family table (header row, then theta,p_1,...,p_M).
    #[arg(long)]
    family_csv: Option<PathBuf>,
    /// Number of observations.
    #[arg(long, default_value_t = 1)]
    n: usize,
}

#[derive(Args, Debug)]
struct PriorArgs {
    /// Prior: uniform, beta:A,B or bump:C.
    #[arg(long, default_value = "uniform")]
    prior: String,
    /// Explicit comma-separated prior values (override --prior).
    #[arg(long)]
    prior_values: Option<String>,
}

#[derive(Subcommand, Debug)]
enum BoundCmd {
    /// Two-point prior-weighted LeCam bound.
    Lecam {
        #[arg(long)]
        theta0: Option<f64>,
        #[arg(long)]
        theta1: Option<f64>,
        /// Packing delta (default: the largest feasible).
        #[arg(long)]
        delta: Option<f64>,
        /// TV route: auto, exact or pinsker.
        #[arg(long, default_value = "auto")]
        route: String,
        /// Search all two-point packings in [0, 1] instead.
        #[arg(long)]
        optimize: bool,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Prior-weighted Fano bound over a packing.
    Fano {
        /// Comma-separated packing members.
        #[arg(long)]
        points: String,
        #[arg(long)]
        delta: Option<f64>,
        /// Information bound: mixture or pairwise.
        #[arg(long, default_value = "mixture")]
        info: String,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Prior-weighted Assouad bound over a hypercube.
    Assouad {
        /// Comma-separated hypercube center (its length is the dimension).
        #[arg(long)]
        center: String,
        /// Members sit at center + (scale / pi_v) v.
        #[arg(long)]
        scale: f64,
        /// 2^d comma-separated prior values (default all 1).
        #[arg(long)]
        prior_values: Option<String>,
        /// Estimator outputs the separation is checked against (d = 1;
        /// default 101 points on [0, 1]).
        #[arg(long)]
        estimates: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
        /// Regressor CSV; selects the logistic label family.
        #[arg(long)]
        regressors: Option<PathBuf>,
        #[arg(long, default_value = "auto")]
        route: String,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Closed-form Assouad bound for logistic regression.
    AssouadLogistic {
        /// Parameter dimension.
        #[arg(long)]
        d: usize,
        /// Regressors listed one after another (length a multiple of d).
        #[arg(long)]
        z: Option<String>,
        /// Regressor CSV instead of --z.
        #[arg(long)]
        regressors: Option<PathBuf>,
        /// Common lambda (>= 1).
        #[arg(long)]
        lambda: Option<f64>,
        /// Per-coordinate lambdas.
        #[arg(long)]
        lambdas: Option<String>,
    },
    /// Generalized Fano bound for a loss matrix.
    Gfano {
        /// Loss matrix CSV: header of action labels, first column theta.
        #[arg(long)]
        loss_csv: PathBuf,
        /// Comma-separated weights p over the rows (default uniform).
        #[arg(long)]
        weights: Option<String>,
        /// Fixed lambda: bound on the Bayes risk at this lambda only.
        #[arg(long)]
        lambda: Option<f64>,
        /// With --lambda: use L instead of pi L.
        #[arg(long)]
        unweighted: bool,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        family: FamilyArgs,
    },
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// bernoulli, logistic, zipf or upper.
    kind: String,
    /// Start from a manifest written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = config::OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    n_list: Option<String>,
    /// Prior (repeat for several curves): uniform, beta:A,B, bump:C.
    #[arg(long)]
    prior: Vec<String>,
    /// TV route for LeCam: auto, exact or pinsker.
    #[arg(long)]
    route: Option<String>,
    /// Monte Carlo datasets per grid point (upper).
    #[arg(long)]
    num_datasets: Option<usize>,
    /// Parameter grid size on [0, 1] (upper).
    #[arg(long)]
    grid_points: Option<usize>,
    /// Comma-separated action-set sizes (zipf).
    #[arg(long)]
    action_sizes: Option<String>,
    /// Loss matrix CSV replacing the synthetic one (zipf).
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    #[arg(long)]
    loss_cap: Option<f64>,
    #[arg(long)]
    loss_base: Option<f64>,
    #[arg(long)]
    loss_slope: Option<f64>,
    /// Common lambda (logistic).
    #[arg(long)]
    lambda: Option<f64>,
    /// Regressor CSV for Z (logistic; default random from the seed).
    #[arg(long)]
    z_csv: Option<PathBuf>,
    /// Regressor CSV for Z' (logistic; default 2 Z).
    #[arg(long)]
    z_prime_csv: Option<PathBuf>,
    /// Skip the SVG.
    #[arg(long)]
    no_svg: bool,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) | Error::PackingViolation(..) | Error::SeparationViolation { .. } => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

/// Parses `argv` (including the program name) and runs the command,
/// printing to `out`. Returns the process exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Bound { bound } => {
            let r = bound_cmd(bound)?;
            write!(out, "{r}")?;
            Ok(EXIT_OK)
        }
        Command::Experiment(args) => {
            let cfg = resolve(args)?;
            experiment(&cfg, out)
        }
        Command::Oracle { cmd: OracleCmd::Check } => oracle_check(out),
        Command::Selftest { seed } => selftest(seed, out),
    }
}

fn parse_prior(s: &str) -> Result<Prior> {
    s.parse()
}

fn bound_cmd(cmd: BoundCmd) -> Result<BoundResult> {
    match cmd {
        BoundCmd::Lecam { theta0, theta1, delta, route, optimize, prior, family } => {
            let fam = parse_family(&family.family, family.family_csv.as_deref())?;
            let route: TvRoute = route.parse()?;
            let p = parse_prior(&prior.prior)?;
            if optimize {
                return lecam_optimize(&PackingSearch::default(), &fam, &p, family.n, route);
            }
            let (t0, t1) = match (theta0, theta1) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::InvalidParameter("lecam needs --theta0 and --theta1, or --optimize".into())),
            };
            let pv = prior_values(&[t0, t1], &p, prior.prior_values.as_deref())?;
            let delta = delta.unwrap_or_else(|| max_delta_two_point(t0, t1, pv[0], pv[1]));
            lecam_bound(&Packing::scalar(&[t0, t1], pv, delta)?, &fam, family.n, route)
        }
        BoundCmd::Fano { points, delta, info, prior, family } => {
            let fam = parse_family(&family.family, family.family_csv.as_deref())?;
            let pts = parse_list(&points)?;
            let pv = prior_values(&pts, &parse_prior(&prior.prior)?, prior.prior_values.as_deref())?;
            let delta = match delta {
                Some(d) => d,
                None => max_delta(&pts, &pv)?,
            };
            let info: InfoRoute = info.parse()?;
            fano_bound(&Packing::scalar(&pts, pv, delta)?, &fam, family.n, info)
        }
        BoundCmd::Assouad { center, scale, prior_values: pv, estimates, delta, regressors, route, family } => {
            let center = parse_list(&center)?;
            let d = center.len();
            let pv = match pv {
                Some(s) => parse_list(&s)?,
                None => vec![1.0; 1usize.checked_shl(d as u32).unwrap_or(0)],
            };
            let fam = match &regressors {
                Some(p) => Family::logistic(load_design_csv(p)?)?,
                None => parse_family(&family.family, family.family_csv.as_deref())?,
            };
            let mut sep = HammingSeparation::hypercube(center, scale, pv)?;
            if let Some(dl) = delta {
                sep = sep.with_delta(dl);
            }
            let grid = if d == 1 {
                match estimates {
                    Some(s) => {
                        let e = parse_list(&s)?;
                        ParamGrid::scalar(e.clone(), vec![1.0; e.len()])?
                    }
                    None => ParamGrid::unit_interval(101, &Prior::Uniform)?,
                }
            } else {
                ParamGrid::vector(sep.members().to_vec(), vec![1.0; sep.members().len()])?
            };
            assouad_bound(&sep, &grid, &fam, family.n, route.parse()?)
        }
        BoundCmd::AssouadLogistic { d, z, regressors, lambda, lambdas } => {
            let design = match (z, regressors) {
                (Some(z), None) => Design::from_flat(d, &parse_list(&z)?)?,
                (None, Some(p)) => load_design_csv(&p)?,
                _ => return Err(Error::InvalidParameter("give exactly one of --z and --regressors".into())),
            };
            if design.dim() != d {
                return Err(Error::LengthMismatch(design.dim(), d));
            }
            let lambdas = match (lambda, lambdas) {
                (_, Some(s)) => parse_list(&s)?,
                (l, None) => vec![l.unwrap_or(1.0); d],
            };
            logistic_closed_form(&design, &lambdas)
        }
        BoundCmd::Gfano { loss_csv, weights, lambda, unweighted, prior, family } => {
            let fam = parse_family(&family.family, family.family_csv.as_deref())?;
            let loss = load_loss_csv(&loss_csv)?;
            let thetas = loss.thetas().to_vec();
            let pv = prior_values(&thetas, &parse_prior(&prior.prior)?, prior.prior_values.as_deref())?;
            let grid = ParamGrid::scalar(thetas, pv)?;
            let k = grid.len();
            let w = match weights {
                Some(s) => parse_list(&s)?,
                None => vec![1.0 / k as f64; k],
            };
            let inst = GFanoInstance::new(grid, w, fam, loss, family.n)?;
            match lambda {
                Some(l) => gfano_bayes_lower(&inst, l, !unweighted),
                None => gfano_prioritized_lower(&inst),
            }
        }
    }
}

fn resolve(a: ExperimentArgs) -> Result<RunConfig> {
    let kind: ExperimentKind = a.kind.parse()?;
    let mut cfg = match &a.config {
        Some(p) => {
            let c = RunConfig::load(p)?;
            if c.experiment != kind {
                return Err(Error::InvalidParameter(format!("manifest is for {}, not {kind}", c.experiment)));
            }
            c
        }
        None => RunConfig::defaults(kind),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.out_dir {
        cfg.out_dir = v;
    }
    if let Some(v) = a.n_list {
        cfg.n_list = config::usize_list(&v)?;
    }
    if !a.prior.is_empty() {
        cfg.priors = a.prior.iter().map(|s| parse_prior(s)).collect::<Result<_>>()?;
    }
    if let Some(v) = a.route {
        cfg.route = v.parse()?;
    }
    if let Some(v) = a.num_datasets {
        cfg.num_datasets = v;
    }
    if let Some(v) = a.grid_points {
        cfg.grid_points = v;
    }
    if let Some(v) = a.action_sizes {
        cfg.action_sizes = config::usize_list(&v)?;
    }
    if a.loss_csv.is_some() {
        cfg.loss_csv = a.loss_csv;
    }
    if let Some(v) = a.loss_cap {
        cfg.loss_cap = v;
    }
    if let Some(v) = a.loss_base {
        cfg.loss_base = v;
    }
    if let Some(v) = a.loss_slope {
        cfg.loss_slope = v;
    }
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    if a.z_csv.is_some() {
        cfg.z_csv = a.z_csv;
    }
    if a.z_prime_csv.is_some() {
        cfg.z_prime_csv = a.z_prime_csv;
    }
    if a.no_svg {
        cfg.svg = false;
    }
    Ok(cfg)
}

/// Curves plus report lines and whether the experiment's own invariant
/// (where it has one) held.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub curves: Vec<CurveSeries>,
    pub report: Vec<String>,
    pub invariant_ok: bool,
    pub axes: AxesConfig,
}

pub fn compute_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let mut report = Vec::new();
    let mut invariant_ok = true;
    let mut axes = AxesConfig::default();
    let curves = match cfg.experiment {
        ExperimentKind::Bernoulli => {
            axes.title = "Prior-weighted LeCam bounds, Bernoulli mean".into();
            axes.y_label = "lower bound".into();
            let mut curves = Vec::new();
            for p in &cfg.priors {
                let (c, rs) = bernoulli::bernoulli_experiment(p, &cfg.n_list, cfg.route)?;
                for r in rs {
                    if let crate::bounds::Witness::LeCam { theta0, theta1, delta, .. } = r.witness {
                        report.push(format!("{} n={} value={:.12e} theta0={theta0:.6} theta1={theta1:.6} delta={delta:.6e}", c.label, r.n, r.value));
                    }
                }
                curves.push(c);
            }
            curves
        }
        ExperimentKind::Logistic => {
            axes.title = "Closed-form logistic bounds".into();
            axes.x_label = "number of regressors".into();
            axes.y_label = "lower bound".into();
            axes.log_x = false;
            let z = match &cfg.z_csv {
                Some(p) => load_design_csv(p)?,
                None => logistic::random_design(cfg.dim, cfg.regressors, cfg.seed)?,
            };
            let zp = match &cfg.z_prime_csv {
                Some(p) => load_design_csv(p)?,
                None => z.scaled(cfg.z_prime_scale),
            };
            let r = logistic::logistic_experiment(&z, &zp, cfg.lambda)?;
            report.extend(r.entries().into_iter().map(|(k, v)| format!("{k} = {v}")));
            invariant_ok = r.ordering_holds;
            r.curves
        }
        ExperimentKind::Zipf => {
            axes.title = "Generalized Fano bounds, Zipf environments".into();
            axes.y_label = "lower bound".into();
            axes.log_y = false;
            let loss = cfg.loss_csv.as_deref().map(load_loss_csv).transpose()?;
            let (curves, results) = zipf::zipf_experiment(&cfg.zipf_config(), loss)?;
            for (c, rs) in curves.iter().zip(&results) {
                for r in rs {
                    if let crate::bounds::Witness::GFano { lambda, rho_star, info_upper, info_route, .. } = r.witness {
                        report.push(format!(
                            "{} n={} value={:.12e} lambda={lambda:.6e} rho_star={rho_star:.6e} info_upper={info_upper:.6e} ({info_route})",
                            c.label, r.n, r.value
                        ));
                    }
                }
            }
            for w in curves.windows(2) {
                for (a, b) in w[0].points.iter().zip(&w[1].points) {
                    if a.value < b.value * (1.0 - 1e-9) - 1e-12 {
                        invariant_ok = false;
                        report.push(format!("ordering violated at n={}: {} < {}", a.n, w[0].label, w[1].label));
                    }
                }
            }
            curves
        }
        ExperimentKind::Upper => {
            axes.title = "Learner-specific prioritized risk (Monte Carlo)".into();
            axes.y_label = "upper bound".into();
            let r = upper::upper_bound_experiment(&cfg.upper_config())?;
            for s in &r.separations {
                report.push(format!(
                    "n={} {} vs {}: difference={:.6e} independent_se={:.3e} paired_lower={:.6e} paired_se={:.3e} significant={}",
                    s.n,
                    upper::LEARNERS[s.better].0,
                    upper::LEARNERS[s.worse].0,
                    s.difference,
                    s.independent_se,
                    s.paired_lower,
                    s.paired_se,
                    s.significant(4.0)
                ));
            }
            r.curves
        }
    };
    Ok(ExperimentOutput { curves, report, invariant_ok, axes })
}

fn experiment(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let res = compute_experiment(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_curves_csv(&res.curves, fs::File::create(cfg.csv_path())?)?;
    writeln!(out, "csv = {}", cfg.csv_path().display())?;
    if cfg.svg {
        fs::write(cfg.svg_path(), emit_svg(&res.curves, &res.axes)?)?;
        writeln!(out, "svg = {}", cfg.svg_path().display())?;
    }
    fs::write(cfg.manifest_path(), cfg.to_ini_string()?)?;
    writeln!(out, "manifest = {}", cfg.manifest_path().display())?;
    let report_path = cfg.out_dir.join(format!("{}.report.txt", cfg.experiment));
    let mut text = res.report.join("\n");
    text.push('\n');
    fs::write(&report_path, &text)?;
    writeln!(out, "report = {}", report_path.display())?;
    out.write_all(text.as_bytes())?;
    Ok(if res.invariant_ok { EXIT_OK } else { EXIT_INVARIANT })
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.6e}"))
}

fn oracle_check(out: &mut dyn Write) -> Result<i32> {
    let (report, rows) = inequality_chain_suite()?;
    writeln!(out, "instance,enumerated,bayes_weighted,gfano,lecam,fano,assouad")?;
    for r in &rows {
        writeln!(
            out,
            "{},{:.6e},{:.6e},{:.6e},{},{},{}",
            r.name,
            r.enumerated,
            r.bayes_weighted,
            r.gfano,
            opt(r.lecam),
            opt(r.fano),
            opt(r.assouad)
        )?;
    }
    writeln!(out, "instances = {}", rows.len())?;
    writeln!(out, "checks = {}", report.checks)?;
    writeln!(out, "violations = {}", report.violations.len())?;
    for v in &report.violations {
        writeln!(out, "violation: {v}")?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_INVARIANT })
}

fn selftest(seed: u64, out: &mut dyn Write) -> Result<i32> {
    let suites = full_suite(seed)?;
    let mut ok = true;
    for s in &suites {
        writeln!(out, "{}: {} checks, {} violations", s.name, s.checks, s.violations.len())?;
        for v in &s.violations {
            writeln!(out, "  {v}")?;
        }
        ok &= s.passed();
    }
    Ok(if ok { EXIT_OK } else { EXIT_INVARIANT })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run_with(std::iter::once("prisk").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn logistic_unit_case() {
        let (code, out) = run_capture(&["bound", "assouad-logistic", "--d", "1", "--z", "1", "--lambda", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("value = 0.0625\n"), "{out}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
        assert_eq!(run_capture(&["bound", "lecam", "--theta0", "0.4"]).0, EXIT_INPUT);
        // an explicit delta too large for the packing
        assert_eq!(
            run_capture(&["bound", "lecam", "--theta0", "0.4", "--theta1", "0.6", "--delta", "0.5"]).0,
            EXIT_INVARIANT
        );
    }

    #[test]
    fn lecam_and_fano_print_witness() {
        let (code, out) = run_capture(&["bound", "lecam", "--theta0", "0.4", "--theta1", "0.6", "--delta", "0.1", "--n", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("method = lecam") && out.contains("tv_exactness = exact"));
        let (code, out) = run_capture(&["bound", "fano", "--points", "0.1,0.5,0.9", "--n", "2", "--info", "pairwise"]);
        assert_eq!(code, 0);
        assert!(out.contains("info_route = pairwise"));
    }
}
