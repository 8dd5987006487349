//! Linear logistic regression, one independent classifier per neuron.
//!
//! Neuron `i` predicts `t_i` from the other neurons through
//! `h_i = Σ_{j≠i} w_ij ξ_j` (no intercept) and minimises
//! `Σ_ν nll(σ(h_i^ν), t_i^ν) + (λ/2)‖w_i‖²` by full-batch gradient descent.
//! The self-weight is held at zero throughout, and the trained matrix is
//! symmetrised as `(W + Wᵀ)/2`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::patterns::{to_targets, Pattern, PatternSet};

use super::{nll, sigmoid, Rule, TrainConfig, WeightMatrix};

pub fn llr_logit(weights: &WeightMatrix, pattern: &Pattern, neuron: usize) -> Result<f64> {
    let n = weights.dim();
    Error::check_dim(n, pattern.dim())?;
    if neuron >= n {
        return Err(Error::domain(format!("neuron index {neuron} out of range for N={n}")));
    }
    Ok(row_logit(weights.matrix().row(neuron), &pattern.to_f64(), neuron))
}

#[inline]
fn row_logit(w_row: &[f64], xi: &[f64], neuron: usize) -> f64 {
    let mut acc = 0.0;
    for (j, (w, x)) in w_row.iter().zip(xi).enumerate() {
        if j != neuron {
            acc += w * x;
        }
    }
    acc
}

fn check_row(set: &PatternSet, neuron: usize, w_row: &[f64]) -> Result<()> {
    Error::check_dim(set.dim(), w_row.len())?;
    if neuron >= set.dim() {
        return Err(Error::domain(format!(
            "neuron index {neuron} out of range for N={}",
            set.dim()
        )));
    }
    Ok(())
}

/// Regularised negative log-likelihood of neuron `neuron` with incoming
/// weights `w_row`. The entry `w_row[neuron]` is ignored.
pub fn llr_loss(set: &PatternSet, neuron: usize, w_row: &[f64], lambda: f64) -> Result<f64> {
    check_row(set, neuron, w_row)?;
    let mut loss = 0.0;
    for xi in set.patterns() {
        let x = xi.to_f64();
        let t = (x[neuron] + 1.0) / 2.0;
        loss += nll(sigmoid(row_logit(w_row, &x, neuron)), t);
    }
    let reg: f64 = w_row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != neuron)
        .map(|(_, w)| w * w)
        .sum();
    Ok(loss + 0.5 * lambda * reg)
}

/// `∂L/∂w_ij = Σ_ν (y_i^ν − t_i^ν) ξ_j^ν + λ w_ij`, with the `j = i`
/// component reported as zero.
pub fn llr_gradient(
    set: &PatternSet,
    neuron: usize,
    w_row: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_row(set, neuron, w_row)?;
    let n = set.dim();
    let mut grad = vec![0.0; n];
    for xi in set.patterns() {
        let x = xi.to_f64();
        let t = (x[neuron] + 1.0) / 2.0;
        let r = sigmoid(row_logit(w_row, &x, neuron)) - t;
        for (g, xj) in grad.iter_mut().zip(&x) {
            *g += r * xj;
        }
    }
    for (j, g) in grad.iter_mut().enumerate() {
        *g = if j == neuron { 0.0 } else { *g + lambda * w_row[j] };
    }
    Ok(grad)
}

pub fn train_llr(set: &PatternSet, config: &TrainConfig) -> Result<WeightMatrix> {
    config.validate()?;
    let n = set.dim();
    let x = set.to_matrix();
    let targets = to_targets(set);
    let t = targets.matrix();
    let mut w = Matrix::zeros(n, n);

    for iteration in 1..=config.iterations {
        // H[ν,i] = Σ_j ξ_j^ν W_ij; the pinned zero diagonal drops j = i.
        let h = x.matmul(&w.transpose())?;
        let mut resid = h;
        for (r, &tv) in resid.as_mut_slice().iter_mut().zip(t.as_slice()) {
            *r = sigmoid(*r) - tv;
        }
        // G[i,j] = Σ_ν R[ν,i] ξ_j^ν
        let grad = resid.t_matmul(&x)?;
        for i in 0..n {
            let g_row = grad.row(i);
            let w_row = w.row_mut(i);
            for (j, (wv, &gv)) in w_row.iter_mut().zip(g_row).enumerate() {
                if j == i {
                    *wv = 0.0;
                } else {
                    *wv -= config.eta * (gv + config.lambda * *wv);
                }
            }
            if !w_row.iter().all(|v| v.is_finite()) {
                return Err(Error::Divergence {
                    rule: "llr",
                    neuron: Some(i),
                    iteration,
                });
            }
        }
    }

    let mut sym = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sym.set(i, j, 0.5 * (w.get(i, j) + w.get(j, i)));
            }
        }
    }
    Ok(WeightMatrix {
        weights: sym,
        rule: Rule::Llr,
    })
}

/// Unsymmetrised single-neuron descent; mirrors what `train_llr` does for
/// one row and is used to check it.
#[cfg(test)]
fn train_llr_neuron(set: &PatternSet, neuron: usize, config: &TrainConfig) -> Vec<f64> {
    let mut w = vec![0.0; set.dim()];
    for _ in 0..config.iterations {
        let g = llr_gradient(set, neuron, &w, 0.0).unwrap();
        for (j, wv) in w.iter_mut().enumerate() {
            if j != neuron {
                *wv -= config.eta * (g[j] + config.lambda * *wv);
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::patterns::generate_patterns;

    fn weights(rows: &[[f64; 3]; 3]) -> WeightMatrix {
        let m = Matrix::from_fn(3, 3, |i, j| rows[i][j]);
        WeightMatrix { weights: m, rule: Rule::Llr }
    }

    #[test]
    fn logit_hand_sums() {
        let zero = weights(&[[0.0; 3]; 3]);
        let p = Pattern::new(vec![1, -1, 1]).unwrap();
        assert_eq!(llr_logit(&zero, &p, 1).unwrap(), 0.0);

        let w = weights(&[[0.0, 0.5, -0.5], [0.5, 0.0, 0.0], [-0.5, 0.0, 0.0]]);
        let ones = Pattern::new(vec![1, 1, 1]).unwrap();
        assert_eq!(llr_logit(&w, &ones, 0).unwrap(), 0.0);
        let last_neg = Pattern::new(vec![1, 1, -1]).unwrap();
        assert_eq!(llr_logit(&w, &last_neg, 0).unwrap(), 1.0);

        assert!(matches!(llr_logit(&w, &ones, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_step_keeps_zero_weights() {
        let set = generate_patterns(6, 3, 1).unwrap();
        let w = train_llr(&set, &TrainConfig { lambda: 0.01, eta: 0.0, iterations: 5 }).unwrap();
        assert!(w.matrix().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_at_zero() {
        let set = generate_patterns(5, 4, 8).unwrap();
        let x = set.to_matrix();
        for i in 0..5 {
            let g = llr_gradient(&set, i, &[0.0; 5], 0.3).unwrap();
            for j in 0..5 {
                let expect = if j == i {
                    0.0
                } else {
                    (0..4).map(|nu| (0.5 - (x.get(nu, i) + 1.0) / 2.0) * x.get(nu, j)).sum()
                };
                assert_eq!(g[j], expect);
            }
        }
    }

    #[test]
    fn descent_reduces_gradient_and_loss() {
        let set = generate_patterns(4, 2, 21).unwrap();
        let cfg = TrainConfig::default();
        for i in 0..4 {
            let w = train_llr_neuron(&set, i, &cfg);
            let g0 = llr_gradient(&set, i, &[0.0; 4], cfg.lambda).unwrap();
            let g1 = llr_gradient(&set, i, &w, cfg.lambda).unwrap();
            let norm = |g: &[f64]| dot(g, g).sqrt();
            assert!(norm(&g1) < norm(&g0), "neuron {i}");
            assert!(llr_loss(&set, i, &w, cfg.lambda).unwrap() < llr_loss(&set, i, &[0.0; 4], cfg.lambda).unwrap());
        }
    }

    #[test]
    fn batched_matches_per_neuron_before_symmetrising() {
        let set = generate_patterns(9, 5, 3).unwrap();
        let cfg = TrainConfig { lambda: 0.01, eta: 0.1, iterations: 30 };
        let w = train_llr(&set, &cfg).unwrap();
        let rows: Vec<Vec<f64>> = (0..9).map(|i| train_llr_neuron(&set, i, &cfg)).collect();
        for i in 0..9 {
            for j in 0..9 {
                let expect = if i == j { 0.0 } else { 0.5 * (rows[i][j] + rows[j][i]) };
                assert!((w.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trained_matrix_is_symmetric_and_deterministic() {
        let set = generate_patterns(12, 6, 77).unwrap();
        let w = train_llr(&set, &TrainConfig::default()).unwrap();
        assert_eq!(w, train_llr(&set, &TrainConfig::default()).unwrap());
        assert!(WeightMatrix::new(w.matrix().clone(), Rule::Llr).is_ok());
    }

    #[test]
    fn huge_step_reports_divergence() {
        let set = generate_patterns(8, 6, 2).unwrap();
        let cfg = TrainConfig { lambda: 1e300, eta: 1e300, iterations: 10 };
        let err = train_llr(&set, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { rule: "llr", neuron: Some(_), .. }), "{err}");
    }
}
