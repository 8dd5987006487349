//! Learning rules that turn a [`PatternSet`](crate::patterns::PatternSet)
//! into a recallable model.

mod hebbian;
mod klr;
mod llr;

use std::fmt;
use std::str::FromStr;

pub use hebbian::train_hebbian;
pub use klr::{klr_gradient, klr_logits, klr_loss, train_klr, train_klr_with_trace, DualCoefficients};
pub use llr::{llr_gradient, llr_logit, llr_loss, train_llr};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Lower/upper clamp applied to probabilities inside log-likelihoods.
pub const PROB_EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(h: f64) -> f64 {
    1.0 / (1.0 + (-h).exp())
}

/// Bernoulli negative log-likelihood of target `t` under probability `y`.
#[inline]
pub(crate) fn nll(y: f64, t: f64) -> f64 {
    let y = y.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Hebbian,
    Llr,
    Klr,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::Hebbian, Rule::Llr, Rule::Klr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::Hebbian => "hebbian",
            Rule::Llr => "llr",
            Rule::Klr => "klr",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hebbian" | "heb" => Ok(Rule::Hebbian),
            "llr" => Ok(Rule::Llr),
            "klr" => Ok(Rule::Klr),
            other => Err(Error::domain(format!(
                "unknown rule '{other}' (expected hebbian, llr or klr)"
            ))),
        }
    }
}

/// Full-batch gradient-descent settings shared by LLR and KLR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub eta: f64,
    pub iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.01,
            eta: 0.1,
            iterations: 200,
        }
    }
}

impl TrainConfig {
    pub fn new(lambda: f64, eta: f64, iterations: usize) -> Result<Self> {
        let cfg = TrainConfig {
            lambda,
            eta,
            iterations,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `η = 0` is accepted so the null-step case can be exercised.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::domain(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.iterations == 0 {
            return Err(Error::domain("iterations must be >= 1"));
        }
        Ok(())
    }
}

/// N×N synaptic weights with zero diagonal, symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    weights: Matrix,
    rule: Rule,
}

impl WeightMatrix {
    /// Validates shape, zero diagonal and symmetry.
    pub fn new(weights: Matrix, rule: Rule) -> Result<Self> {
        let n = weights.rows();
        Error::check_dim(n, weights.cols())?;
        if rule == Rule::Klr {
            return Err(Error::domain("klr models are not weight matrices"));
        }
        for i in 0..n {
            if weights.get(i, i) != 0.0 {
                return Err(Error::domain(format!("weight ({i},{i}) must be zero")));
            }
            for j in 0..i {
                if weights.get(i, j) != weights.get(j, i) {
                    return Err(Error::domain(format!("weights not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(WeightMatrix { weights, rule })
    }

    pub fn dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn matrix(&self) -> &Matrix {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }
}
