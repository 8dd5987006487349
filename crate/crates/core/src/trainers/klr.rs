//! Kernel logistic regression in the dual.
//!
//! Each neuron `i` owns a column `α_i` of the P×N coefficient matrix. Its
//! logit on stored pattern `ν` is `h_i^ν = Σ_μ K_νμ α_μi`, and training
//! minimises `Σ_ν nll(σ(h_i^ν), t_i^ν) + (λ/2) α_iᵀ K α_i` by full-batch
//! descent along `K(y_i − t_i + λα_i)`. All columns are updated together as
//! `A ← A − η K (σ(KA) − T + λA)`, which is column-wise identical to running
//! the N descents separately.

use crate::error::{Error, Result};
use crate::kernel::{gram, GramMatrix, KernelParams};
use crate::linalg::{dot, Matrix};
use crate::patterns::{to_targets, PatternSet};

use super::{nll, sigmoid, TrainConfig};

/// Learned dual variables plus the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCoefficients {
    alpha: Matrix,
    kernel: KernelParams,
    config: TrainConfig,
}

impl DualCoefficients {
    pub fn new(alpha: Matrix, kernel: KernelParams, config: TrainConfig) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::domain("dual coefficients must be finite"));
        }
        Ok(DualCoefficients { alpha, kernel, config })
    }

    pub fn alpha(&self) -> &Matrix {
        &self.alpha
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Number of stored patterns P.
    pub fn patterns(&self) -> usize {
        self.alpha.rows()
    }

    /// Number of neurons N.
    pub fn neurons(&self) -> usize {
        self.alpha.cols()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.alpha.column(i)
    }
}

/// `K·α`; entry `(ν, i)` is neuron `i`'s logit on stored pattern `ν`.
pub fn klr_logits(gram: &GramMatrix, alpha: &DualCoefficients) -> Result<Matrix> {
    gram.matrix().matmul(&alpha.alpha)
}

fn check_column(gram: &GramMatrix, alpha_i: &[f64], targets_i: &[f64]) -> Result<()> {
    Error::check_dim(gram.len(), alpha_i.len())?;
    Error::check_dim(gram.len(), targets_i.len())
}

pub fn klr_loss(gram: &GramMatrix, alpha_i: &[f64], targets_i: &[f64], lambda: f64) -> Result<f64> {
    check_column(gram, alpha_i, targets_i)?;
    let h = gram.matrix().matvec(alpha_i)?;
    Ok(column_loss(&h, alpha_i, targets_i, lambda))
}

/// Loss from precomputed logits `h = Kα`, so that `αᵀKα = α·h`.
fn column_loss(h: &[f64], alpha_i: &[f64], targets_i: &[f64], lambda: f64) -> f64 {
    let data: f64 = h
        .iter()
        .zip(targets_i)
        .map(|(&hv, &t)| nll(sigmoid(hv), t))
        .sum();
    if lambda == 0.0 {
        data
    } else {
        data + 0.5 * lambda * dot(alpha_i, h)
    }
}

/// `K (σ(Kα) − t + λα)`.
pub fn klr_gradient(
    gram: &GramMatrix,
    alpha_i: &[f64],
    targets_i: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_column(gram, alpha_i, targets_i)?;
    let h = gram.matrix().matvec(alpha_i)?;
    let r: Vec<f64> = h
        .iter()
        .zip(targets_i)
        .zip(alpha_i)
        .map(|((&hv, &t), &a)| (sigmoid(hv) - t) + lambda * a)
        .collect();
    gram.matrix().matvec(&r)
}

pub fn train_klr(
    set: &PatternSet,
    kernel: KernelParams,
    config: &TrainConfig,
) -> Result<DualCoefficients> {
    descend(set, kernel, config, None)
}

/// Like [`train_klr`], also returning the loss of every neuron before each
/// update and after the last one (`iterations + 1` rows of N values).
pub fn train_klr_with_trace(
    set: &PatternSet,
    kernel: KernelParams,
    config: &TrainConfig,
) -> Result<(DualCoefficients, Vec<Vec<f64>>)> {
    let mut trace = Vec::with_capacity(config.iterations + 1);
    let model = descend(set, kernel, config, Some(&mut trace))?;
    Ok((model, trace))
}

fn descend(
    set: &PatternSet,
    kernel: KernelParams,
    config: &TrainConfig,
    mut trace: Option<&mut Vec<Vec<f64>>>,
) -> Result<DualCoefficients> {
    config.validate()?;
    let (p, n) = (set.len(), set.dim());
    let k = gram(set, kernel);
    let targets = to_targets(set);
    let t = targets.matrix();
    let mut alpha = Matrix::zeros(p, n);

    for iteration in 1..=config.iterations {
        let h = k.matrix().matmul(&alpha)?;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(losses(&h, &alpha, t, config.lambda));
        }
        let mut resid = h;
        for ((r, &tv), &a) in resid
            .as_mut_slice()
            .iter_mut()
            .zip(t.as_slice())
            .zip(alpha.as_slice())
        {
            *r = (sigmoid(*r) - tv) + config.lambda * a;
        }
        let grad = k.matrix().matmul(&resid)?;
        for (a, &g) in alpha.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *a -= config.eta * g;
        }
        if !alpha.is_finite() {
            return Err(Error::Divergence {
                rule: "klr",
                neuron: None,
                iteration,
            });
        }
    }
    if let Some(tr) = trace {
        let h = k.matrix().matmul(&alpha)?;
        tr.push(losses(&h, &alpha, t, config.lambda));
    }

    Ok(DualCoefficients {
        alpha,
        kernel,
        config: *config,
    })
}

fn losses(h: &Matrix, alpha: &Matrix, t: &Matrix, lambda: f64) -> Vec<f64> {
    (0..alpha.cols())
        .map(|i| column_loss(&h.column(i), &alpha.column(i), &t.column(i), lambda))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{generate_patterns, Pattern};
    use proptest::prelude::*;

    fn pat(v: &[i8]) -> Pattern {
        Pattern::new(v.to_vec()).unwrap()
    }

    fn small_set() -> PatternSet {
        PatternSet::new(
            vec![pat(&[1, 1, -1, -1]), pat(&[1, -1, 1, -1]), pat(&[-1, -1, -1, 1])],
            0,
        )
        .unwrap()
    }

    /// Independent single-column descent, same arithmetic per element.
    fn per_neuron(set: &PatternSet, kernel: KernelParams, cfg: &TrainConfig) -> Vec<Vec<f64>> {
        let k = gram(set, kernel);
        let km = k.matrix();
        let x = set.to_matrix();
        let p = set.len();
        (0..set.dim())
            .map(|i| {
                let t: Vec<f64> = (0..p).map(|nu| (x.get(nu, i) + 1.0) / 2.0).collect();
                let mut a = vec![0.0; p];
                for _ in 0..cfg.iterations {
                    let h: Vec<f64> = (0..p).map(|nu| dot(km.row(nu), &a)).collect();
                    let r: Vec<f64> = (0..p)
                        .map(|nu| (sigmoid(h[nu]) - t[nu]) + cfg.lambda * a[nu])
                        .collect();
                    let g: Vec<f64> = (0..p).map(|nu| dot(km.row(nu), &r)).collect();
                    for nu in 0..p {
                        a[nu] -= cfg.eta * g[nu];
                    }
                }
                a
            })
            .collect()
    }

    #[test]
    fn logits_zero_and_single() {
        let set = small_set();
        let kp = KernelParams::new(0.25).unwrap();
        let k = gram(&set, kp);
        let zero = DualCoefficients::new(Matrix::zeros(3, 4), kp, TrainConfig::default()).unwrap();
        assert!(klr_logits(&k, &zero).unwrap().as_slice().iter().all(|&v| v == 0.0));

        let one = PatternSet::new(vec![pat(&[1, -1])], 0).unwrap();
        let k1 = gram(&one, kp);
        let a = DualCoefficients::new(Matrix::from_vec(1, 2, vec![0.7, -1.3]).unwrap(), kp, TrainConfig::default()).unwrap();
        assert_eq!(klr_logits(&k1, &a).unwrap().as_slice(), &[0.7, -1.3]);

        let bad = DualCoefficients::new(Matrix::zeros(2, 4), kp, TrainConfig::default()).unwrap();
        assert!(klr_logits(&k, &bad).is_err());
    }

    #[test]
    fn logits_match_triple_loop() {
        let set = small_set();
        let kp = KernelParams::new(0.25).unwrap();
        let k = gram(&set, kp);
        let alpha = Matrix::from_fn(3, 4, |r, c| (r as f64 + 1.0) * 0.3 - c as f64 * 0.45);
        let a = DualCoefficients::new(alpha.clone(), kp, TrainConfig::default()).unwrap();
        let h = klr_logits(&k, &a).unwrap();
        for nu in 0..3 {
            for i in 0..4 {
                let mut acc = 0.0;
                for mu in 0..3 {
                    acc += k.get(nu, mu) * alpha.get(mu, i);
                }
                assert_eq!(h.get(nu, i), acc);
            }
        }
    }

    #[test]
    fn loss_cases() {
        let set = small_set();
        let k = gram(&set, KernelParams::new(0.25).unwrap());
        let t = [1.0, 0.0, 1.0];
        let l0 = klr_loss(&k, &[0.0; 3], &t, 0.7).unwrap();
        assert!((l0 - 3.0 * std::f64::consts::LN_2).abs() < 1e-14);

        // P = 2 by hand: K = [[1, e], [e, 1]] with e = exp(−4·0.25·2) for d = 2.
        let two = PatternSet::new(vec![pat(&[1, 1, 1]), pat(&[1, -1, -1])], 0).unwrap();
        let k2 = gram(&two, KernelParams::new(0.25).unwrap());
        let e = (-2.0f64).exp();
        let (a1, a2) = (0.4, -0.9);
        let (h1, h2) = (a1 + e * a2, e * a1 + a2);
        let s = |h: f64| 1.0 / (1.0 + (-h).exp());
        let data = -(s(h1).ln()) - (1.0 - s(h2)).ln();
        let lambda = 0.2;
        let reg = 0.5 * lambda * (a1 * a1 + 2.0 * e * a1 * a2 + a2 * a2);
        let got = klr_loss(&k2, &[a1, a2], &[1.0, 0.0], lambda).unwrap();
        assert!((got - (data + reg)).abs() < 1e-14, "{got} vs {}", data + reg);
        let unreg = klr_loss(&k2, &[a1, a2], &[1.0, 0.0], 0.0).unwrap();
        assert!((unreg - data).abs() < 1e-14);
    }

    #[test]
    fn gradient_cases() {
        let set = small_set();
        let k = gram(&set, KernelParams::new(0.25).unwrap());
        let t = [1.0, 0.0, 1.0];
        let g = klr_gradient(&k, &[0.0; 3], &t, 5.0).unwrap();
        let expect = k.matrix().matvec(&[-0.5, 0.5, -0.5]).unwrap();
        assert_eq!(g, expect);

        // Targets equal to the model's own probabilities, no regulariser.
        let a = [0.3, -0.2, 0.8];
        let y: Vec<f64> = k.matrix().matvec(&a).unwrap().into_iter().map(sigmoid).collect();
        let g = klr_gradient(&k, &a, &y, 0.0).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_step_keeps_zero_alpha() {
        let set = generate_patterns(6, 4, 1).unwrap();
        let cfg = TrainConfig { lambda: 0.01, eta: 0.0, iterations: 7 };
        let m = train_klr(&set, KernelParams::for_network(6), &cfg).unwrap();
        assert!(m.alpha().as_slice().iter().all(|&v| v == 0.0));
        assert_eq!((m.patterns(), m.neurons()), (4, 6));
    }

    #[test]
    fn batched_equals_per_neuron_bitwise() {
        let set = PatternSet::new(vec![pat(&[1, -1, -1, 1]), pat(&[-1, -1, 1, 1])], 0).unwrap();
        let kp = KernelParams::for_network(4);
        let cfg = TrainConfig::default();
        let m = train_klr(&set, kp, &cfg).unwrap();
        let cols = per_neuron(&set, kp, &cfg);
        for (i, col) in cols.iter().enumerate() {
            let got = m.column(i);
            for (a, b) in got.iter().zip(col) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn defaults_give_monotone_loss() {
        let set = generate_patterns(10, 6, 5).unwrap();
        let (_, trace) = train_klr_with_trace(&set, KernelParams::for_network(10), &TrainConfig::default()).unwrap();
        assert_eq!(trace.len(), 201);
        for w in trace.windows(2) {
            for (i, (before, after)) in w[0].iter().zip(&w[1]).enumerate() {
                assert!(after <= before, "neuron {i}: {before} -> {after}");
            }
        }
    }

    #[test]
    fn huge_step_reports_divergence() {
        let set = generate_patterns(8, 6, 2).unwrap();
        let cfg = TrainConfig { lambda: 1e300, eta: 1e300, iterations: 10 };
        let err = train_klr(&set, KernelParams::for_network(8), &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { rule: "klr", .. }), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn batched_equals_per_neuron_random(n in 1usize..8, p in 1usize..8, seed: u64, iters in 1usize..40) {
            let set = generate_patterns(n, p, seed).unwrap();
            let kp = KernelParams::for_network(n);
            let cfg = TrainConfig { iterations: iters, ..TrainConfig::default() };
            let m = train_klr(&set, kp, &cfg).unwrap();
            for (i, col) in per_neuron(&set, kp, &cfg).iter().enumerate() {
                prop_assert_eq!(&m.column(i), col);
            }
            prop_assert_eq!(&m, &train_klr(&set, kp, &cfg).unwrap());
        }
    }
}
