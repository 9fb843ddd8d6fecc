use approx::assert_relative_eq;
use prisk::bounds::estimation::{lecam_optimize, logistic_closed_form, PackingSearch};
use prisk::bounds::gfano::{gfano_prioritized_lower, GFanoInstance};
use prisk::bounds::TvRoute;
use prisk::experiments::upper::{upper_bound_experiment, UpperConfig};
use prisk::model::{Design, Family, LossSpec, Metric, ParamGrid, Prior};
use prisk::oracle::{bayes_risk_exact, prioritized_risk_enumerated, FiniteInstance};
use prisk::report::{curves_to_csv_string, read_curves_csv};
use prisk::risk::{learner_prioritized_risk, Evaluation};
use prisk::validation::builtin_instances;

#[test]
fn lower_bounds_sit_below_learner_risks() {
    let prior = Prior::Beta { alpha: 1.0, beta: 2.0 };
    let cfg = UpperConfig { n_list: vec![1, 10, 50], num_datasets: 4000, seed: 3, grid_points: 51, prior: prior.clone() };
    let upper = upper_bound_experiment(&cfg).unwrap();
    for (k, &n) in cfg.n_list.iter().enumerate() {
        let lower = lecam_optimize(&PackingSearch::default(), &Family::Bernoulli, &prior, n, TvRoute::Auto).unwrap().value;
        for risks in &upper.risks {
            let r = &risks[k];
            assert!(lower <= r.value + 4.0 * r.std_error, "n={n}: {lower} > {}", r.value);
        }
    }
}

#[test]
fn exact_and_mc_prioritized_risk_agree() {
    let grid = ParamGrid::unit_interval(11, &Prior::Beta { alpha: 1.0, beta: 2.0 }).unwrap();
    let learner = prisk::model::Learner::beta_posterior_mean(1.0, 2.0);
    let loss = LossSpec::Pseudometric(Metric::AbsDiff);
    let exact = learner_prioritized_risk(&grid, &Family::Bernoulli, &learner, &loss, 8, Evaluation::exact()).unwrap();
    let mc = learner_prioritized_risk(&grid, &Family::Bernoulli, &learner, &loss, 8, Evaluation::MonteCarlo { num_datasets: 50_000, seed: 9 }).unwrap();
    for (e, m) in exact.risks.iter().zip(&mc.risks) {
        assert!((e.value - m.value).abs() <= 4.0 * m.std_error + 1e-12);
    }
}

#[test]
fn gfano_sandwich_on_every_builtin() {
    for b in builtin_instances().unwrap() {
        let i = &b.instance;
        let g = GFanoInstance::new(i.grid().clone(), i.weights().to_vec(), i.family().clone(), i.loss().clone(), i.n()).unwrap();
        let lower = gfano_prioritized_lower(&g).unwrap().value;
        let bayes = bayes_risk_exact(i, true);
        let enumerated = prioritized_risk_enumerated(i).unwrap().value;
        assert!(lower <= bayes + 1e-9 && bayes <= enumerated + 1e-9, "{}", b.name);
    }
}

#[test]
fn estimation_instance_matches_learner_risk() {
    let grid = ParamGrid::from_prior(&[0.2, 0.5, 0.8], &Prior::Uniform).unwrap();
    let inst = FiniteInstance::estimation(grid.clone(), Family::Bernoulli, 2).unwrap();
    let best = prioritized_risk_enumerated(&inst).unwrap();
    let r = learner_prioritized_risk(&grid, &Family::Bernoulli, &best.learner(2), &LossSpec::Matrix(inst.loss().clone()), 2, Evaluation::exact()).unwrap();
    assert_relative_eq!(r.value, best.value, epsilon = 1e-15);
}

#[test]
fn logistic_design_scaling() {
    let z = Design::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let a = logistic_closed_form(&z, &[1.0, 1.0]).unwrap().value;
    let b = logistic_closed_form(&z.scaled(3.0), &[1.0, 1.0]).unwrap().value;
    assert_relative_eq!(a, 3.0 * b, max_relative = 1e-12);
}

#[test]
fn experiment_csv_round_trips() {
    let cfg = UpperConfig { n_list: vec![2, 4], num_datasets: 200, grid_points: 11, ..UpperConfig::default() };
    let r = upper_bound_experiment(&cfg).unwrap();
    let text = curves_to_csv_string(&r.curves).unwrap();
    assert_eq!(read_curves_csv(text.as_bytes()).unwrap(), r.curves);
}
