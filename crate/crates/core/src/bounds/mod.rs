//! Lower bounds on prioritized risk. Every bound comes back as a
//! [`BoundResult`] whose witness holds enough to recompute the value.

pub mod estimation;
pub mod gfano;

use std::fmt;
use std::str::FromStr;

use crate::divergence::{DivergenceValue, Exactness};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    LeCam,
    Fano,
    Assouad,
    AssouadLogisticClosed,
    GFano,
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMethod::LeCam => "lecam",
            BoundMethod::Fano => "fano",
            BoundMethod::Assouad => "assouad",
            BoundMethod::AssouadLogisticClosed => "assouad-logistic-closed",
            BoundMethod::GFano => "gfano",
        })
    }
}

/// Which upper bound stands in for the mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoRoute {
    /// `n * sum_t p_t KL(P_t || P_bar)`.
    Mixture,
    /// `n * max KL(P_t || P_t')`.
    Pairwise,
    /// Entropy of the weights, `H(p) >= I`.
    Entropy,
}

impl fmt::Display for InfoRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfoRoute::Mixture => "mixture",
            InfoRoute::Pairwise => "pairwise",
            InfoRoute::Entropy => "entropy",
        })
    }
}

impl FromStr for InfoRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "mixture" => Ok(InfoRoute::Mixture),
            "pairwise" => Ok(InfoRoute::Pairwise),
            "entropy" => Ok(InfoRoute::Entropy),
            other => Err(Error::Parse(format!("unknown information route {other:?}"))),
        }
    }
}

/// How total variations between product distributions are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvRoute {
    /// Exact when there are at most 10^6 type classes, else Pinsker.
    Auto,
    Exact,
    /// Pinsker with tensorization (for Assouad, the Cauchy-Schwarz weakening
    /// of the coordinate-wise sum).
    Pinsker,
}

impl fmt::Display for TvRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TvRoute::Auto => "auto",
            TvRoute::Exact => "exact",
            TvRoute::Pinsker => "pinsker",
        })
    }
}

impl FromStr for TvRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "auto" => Ok(TvRoute::Auto),
            "exact" => Ok(TvRoute::Exact),
            "pinsker" => Ok(TvRoute::Pinsker),
            other => Err(Error::Parse(format!("unknown tv route {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    LeCam {
        theta0: f64,
        theta1: f64,
        prior0: f64,
        prior1: f64,
        delta: f64,
        /// Divergences between the n-fold products.
        divergence: DivergenceValue,
    },
    Fano {
        members: Vec<Vec<f64>>,
        prior_values: Vec<f64>,
        delta: f64,
        info_upper: f64,
        route: InfoRoute,
    },
    Assouad {
        d: usize,
        delta: f64,
        /// Per-coordinate TV between the mixtures (or its common upper
        /// bound under the weakened route).
        tv: Vec<f64>,
        tv_exactness: Exactness,
    },
    LogisticClosed {
        d: usize,
        lambdas: Vec<f64>,
        /// `sum_i z_ij^2` per coordinate.
        coordinate_energy: Vec<f64>,
        frobenius_norm: f64,
        /// Closed form with a common lambda, when all lambdas agree.
        common_lambda_value: Option<f64>,
    },
    GFano {
        lambda: f64,
        rho_star: f64,
        info_upper: f64,
        info_route: InfoRoute,
        weighted: bool,
        num_actions: usize,
    },
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

impl Witness {
    /// Recomputes the bound from the recorded quantities alone.
    pub fn replay(&self) -> f64 {
        match self {
            Witness::LeCam { delta, divergence, .. } => delta / 2.0 * pos(1.0 - divergence.tv),
            Witness::Fano { members, delta, info_upper, .. } => {
                delta * pos(1.0 - (info_upper + std::f64::consts::LN_2) / (members.len() as f64).ln())
            }
            Witness::Assouad { delta, tv, .. } => delta * tv.iter().map(|t| pos(1.0 - t)).sum::<f64>(),
            Witness::LogisticClosed { d, lambdas, coordinate_energy, .. } => {
                let s: f64 = lambdas.iter().zip(coordinate_energy).map(|(l, e)| l * l * e).sum();
                logistic_value(*d, s)
            }
            Witness::GFano { lambda, rho_star, info_upper, .. } => pos((rho_star - info_upper) / lambda),
        }
    }

    /// Key/value pairs for structured text output.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let g = |x: f64| format!("{x:.12e}");
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(",");
        match self {
            Witness::LeCam { theta0, theta1, prior0, prior1, delta, divergence } => vec![
                ("theta0", g(*theta0)),
                ("theta1", g(*theta1)),
                ("prior0", g(*prior0)),
                ("prior1", g(*prior1)),
                ("delta", g(*delta)),
                ("kl_forward", g(divergence.kl_forward)),
                ("kl_reverse", g(divergence.kl_reverse)),
                ("tv", g(divergence.tv)),
                ("tv_exactness", divergence.tv_exactness.name().into()),
            ],
            Witness::Fano { members, prior_values, delta, info_upper, route } => vec![
                ("members", members.iter().map(|m| list(m)).collect::<Vec<_>>().join(";")),
                ("prior_values", list(prior_values)),
                ("delta", g(*delta)),
                ("info_upper", g(*info_upper)),
                ("info_route", route.to_string()),
            ],
            Witness::Assouad { d, delta, tv, tv_exactness } => vec![
                ("d", d.to_string()),
                ("delta", g(*delta)),
                ("tv", list(tv)),
                ("tv_exactness", tv_exactness.name().into()),
            ],
            Witness::LogisticClosed { d, lambdas, coordinate_energy, frobenius_norm, common_lambda_value } => {
                let mut e = vec![
                    ("d", d.to_string()),
                    ("lambdas", list(lambdas)),
                    ("coordinate_energy", list(coordinate_energy)),
                    ("frobenius_norm", g(*frobenius_norm)),
                ];
                if let Some(v) = common_lambda_value {
                    e.push(("common_lambda_value", g(*v)));
                }
                e
            }
            Witness::GFano { lambda, rho_star, info_upper, info_route, weighted, num_actions } => vec![
                ("lambda", g(*lambda)),
                ("rho_star", g(*rho_star)),
                ("info_upper", g(*info_upper)),
                ("info_route", info_route.to_string()),
                ("weighted", weighted.to_string()),
                ("num_actions", num_actions.to_string()),
            ],
        }
    }
}

/// `(1/16) d^{3/2} / sqrt(s)` with `s = sum_j lambda_j^2 sum_i z_ij^2`;
/// infinite when `s = 0`.
pub(crate) fn logistic_value(d: usize, s: f64) -> f64 {
    if s <= 0.0 {
        return f64::INFINITY;
    }
    (d as f64).powf(1.5) / (16.0 * s.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub method: BoundMethod,
    pub value: f64,
    pub n: usize,
    pub witness: Witness,
}

impl BoundResult {
    pub fn replay(&self) -> f64 {
        self.witness.replay()
    }
}

impl fmt::Display for BoundResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method = {}", self.method)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "value = {}", self.value)?;
        for (k, v) in self.witness.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
