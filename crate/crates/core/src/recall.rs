//! Synchronous recall dynamics and trajectory recording.

use crate::error::{Error, Result};
use crate::kernel::kernel_row;
use crate::patterns::{overlap, Pattern, PatternSet};
use crate::trainers::{DualCoefficients, Rule, WeightMatrix};

/// A trained network ready for recall.
#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Weights(WeightMatrix),
    Kernel {
        coefficients: DualCoefficients,
        stored: PatternSet,
    },
}

impl Network {
    pub fn kernel(coefficients: DualCoefficients, stored: PatternSet) -> Result<Self> {
        Error::check_dim(coefficients.patterns(), stored.len())?;
        Error::check_dim(coefficients.neurons(), stored.dim())?;
        Ok(Network::Kernel { coefficients, stored })
    }

    pub fn dim(&self) -> usize {
        match self {
            Network::Weights(w) => w.dim(),
            Network::Kernel { stored, .. } => stored.dim(),
        }
    }

    pub fn rule(&self) -> Rule {
        match self {
            Network::Weights(w) => w.rule(),
            Network::Kernel { .. } => Rule::Klr,
        }
    }

    /// One synchronous update. `threshold` only enters the kernel rule.
    pub fn step(&self, state: &Pattern, threshold: Option<&[f64]>) -> Result<Pattern> {
        match self {
            Network::Weights(w) => step_weights(w, state),
            Network::Kernel { coefficients, stored } => {
                let zeros;
                let theta = match threshold {
                    Some(t) => t,
                    None => {
                        zeros = vec![0.0; stored.dim()];
                        &zeros
                    }
                };
                step_kernel(coefficients, stored, state, theta)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallConfig {
    pub steps: usize,
    /// θ for kernel recall; `None` means all zeros.
    pub threshold: Option<Vec<f64>>,
}

impl Default for RecallConfig {
    fn default() -> Self {
        RecallConfig {
            steps: 25,
            threshold: None,
        }
    }
}

impl RecallConfig {
    pub fn with_steps(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::domain("recall steps must be >= 1"));
        }
        Ok(RecallConfig { steps, threshold: None })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// `s(0) … s(T)`.
    pub states: Vec<Pattern>,
    /// `m(0) … m(T)` against the recall target.
    pub overlaps: Vec<f64>,
    /// First `t` with `s(t+1) = s(t)`.
    pub converged_at: Option<usize>,
}

impl TrajectoryRecord {
    pub fn final_overlap(&self) -> f64 {
        *self.overlaps.last().expect("trajectory holds s(0)")
    }

    pub fn final_state(&self) -> &Pattern {
        self.states.last().expect("trajectory holds s(0)")
    }
}

/// `s_i' = sign(Σ_{j≠i} W_ij s_j)`.
pub fn step_weights(weights: &WeightMatrix, state: &Pattern) -> Result<Pattern> {
    Error::check_dim(weights.dim(), state.dim())?;
    let s = state.to_f64();
    let w = weights.matrix();
    Ok(Pattern::from_signs((0..weights.dim()).map(|i| {
        let mut acc = 0.0;
        for (j, (wij, sj)) in w.row(i).iter().zip(&s).enumerate() {
            if j != i {
                acc += wij * sj;
            }
        }
        acc
    })))
}

/// `s' = sign(k(s)·α − θ)` with `k(s)` the kernel row against the stored set.
pub fn step_kernel(
    model: &DualCoefficients,
    stored: &PatternSet,
    state: &Pattern,
    threshold: &[f64],
) -> Result<Pattern> {
    Error::check_dim(model.patterns(), stored.len())?;
    Error::check_dim(model.neurons(), state.dim())?;
    Error::check_dim(model.neurons(), threshold.len())?;
    let k = kernel_row(state, stored, model.kernel())?;
    let alpha = model.alpha();
    let mut h = vec![0.0; model.neurons()];
    for (mu, &kv) in k.iter().enumerate() {
        for (hi, &a) in h.iter_mut().zip(alpha.row(mu)) {
            *hi += kv * a;
        }
    }
    Ok(Pattern::from_signs(
        h.iter().zip(threshold).map(|(&hi, &th)| hi - th),
    ))
}

/// Runs `config.steps` synchronous updates from `initial`, stopping early at
/// an exact fixed point and padding the trajectory with that state.
pub fn run_recall(
    network: &Network,
    initial: &Pattern,
    target: &Pattern,
    config: &RecallConfig,
) -> Result<TrajectoryRecord> {
    let n = network.dim();
    Error::check_dim(n, initial.dim())?;
    Error::check_dim(n, target.dim())?;
    if config.steps == 0 {
        return Err(Error::domain("recall steps must be >= 1"));
    }
    let threshold = config.threshold.as_deref();
    if let Some(th) = threshold {
        Error::check_dim(n, th.len())?;
    }

    let mut states = Vec::with_capacity(config.steps + 1);
    let mut overlaps = Vec::with_capacity(config.steps + 1);
    let mut converged_at = None;
    states.push(initial.clone());
    overlaps.push(overlap(initial, target)?);

    for t in 0..config.steps {
        let current = &states[t];
        let next = network.step(current, threshold)?;
        if next == *current {
            converged_at = Some(t);
            let m = overlaps[t];
            let fixed = next;
            while states.len() <= config.steps {
                states.push(fixed.clone());
                overlaps.push(m);
            }
            break;
        }
        overlaps.push(overlap(&next, target)?);
        states.push(next);
    }

    Ok(TrajectoryRecord {
        states,
        overlaps,
        converged_at,
    })
}

/// `(step, overlap)` pairs of a trajectory, for CSV export.
pub fn overlap_series(record: &TrajectoryRecord) -> impl Iterator<Item = (usize, f64)> + '_ {
    record.overlaps.iter().copied().enumerate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{rbf, KernelParams};
    use crate::linalg::Matrix;
    use crate::patterns::generate_patterns;
    use crate::trainers::{train_hebbian, train_klr, TrainConfig};
    use proptest::prelude::*;

    fn pat(v: &[i8]) -> Pattern {
        Pattern::new(v.to_vec()).unwrap()
    }

    fn zero_weights(n: usize) -> WeightMatrix {
        WeightMatrix::new(Matrix::zeros(n, n), Rule::Hebbian).unwrap()
    }

    #[test]
    fn hebbian_single_pattern_is_fixed() {
        let set = generate_patterns(9, 1, 4).unwrap();
        let w = train_hebbian(&set);
        let xi = &set.patterns()[0];
        assert_eq!(&step_weights(&w, xi).unwrap(), xi);
    }

    #[test]
    fn zero_weights_tie_to_plus_one() {
        let s = pat(&[-1, 1, -1, -1]);
        assert_eq!(step_weights(&zero_weights(4), &s).unwrap(), pat(&[1, 1, 1, 1]));
    }

    #[test]
    fn weights_hand_example() {
        let w = Matrix::from_vec(3, 3, vec![0.0, 1.0, -2.0, 1.0, 0.0, 0.5, -2.0, 0.5, 0.0]).unwrap();
        let w = WeightMatrix::new(w, Rule::Llr).unwrap();
        assert_eq!(step_weights(&w, &pat(&[1, -1, 1])).unwrap(), pat(&[-1, 1, -1]));
        assert!(step_weights(&w, &pat(&[1, 1])).is_err());
    }

    #[test]
    fn kernel_step_zero_alpha() {
        let set = generate_patterns(5, 3, 1).unwrap();
        let dc = DualCoefficients::new(Matrix::zeros(3, 5), KernelParams::for_network(5), TrainConfig::default()).unwrap();
        let s = pat(&[-1, -1, 1, -1, 1]);
        assert_eq!(step_kernel(&dc, &set, &s, &[0.0; 5]).unwrap(), pat(&[1; 5]));
    }

    #[test]
    fn kernel_step_single_pattern_ignores_state() {
        let set = generate_patterns(4, 1, 8).unwrap();
        let alpha = Matrix::from_vec(1, 4, vec![0.3, -0.1, 0.0, -2.0]).unwrap();
        let dc = DualCoefficients::new(alpha, KernelParams::new(0.1).unwrap(), TrainConfig::default()).unwrap();
        for s in [pat(&[1, 1, 1, 1]), pat(&[-1, 1, -1, 1]), pat(&[-1, -1, -1, -1])] {
            assert_eq!(step_kernel(&dc, &set, &s, &[0.0; 4]).unwrap(), pat(&[1, -1, 1, -1]));
        }
    }

    #[test]
    fn kernel_step_matches_double_loop() {
        let set = PatternSet::new(
            vec![pat(&[1, 1, -1, -1]), pat(&[1, -1, 1, -1]), pat(&[-1, -1, -1, 1])],
            0,
        )
        .unwrap();
        let kp = KernelParams::new(0.25).unwrap();
        let alpha = Matrix::from_fn(3, 4, |r, c| ((r * 5 + c * 3) % 7) as f64 * 0.4 - 1.1);
        let dc = DualCoefficients::new(alpha.clone(), kp, TrainConfig::default()).unwrap();
        let theta = [0.1, -0.2, 0.0, 0.3];
        let s = pat(&[1, -1, -1, -1]);
        let got = step_kernel(&dc, &set, &s, &theta).unwrap();
        for i in 0..4 {
            let mut h = 0.0;
            for mu in 0..3 {
                h += rbf(&s, &set.patterns()[mu], kp).unwrap() * alpha.get(mu, i);
            }
            let expect = if h - theta[i] >= 0.0 { 1 } else { -1 };
            assert_eq!(got.values()[i], expect, "neuron {i}");
        }
    }

    #[test]
    fn recall_from_fixed_point_converges_immediately() {
        let set = generate_patterns(20, 1, 3).unwrap();
        let net = Network::Weights(train_hebbian(&set));
        let xi = &set.patterns()[0];
        let rec = run_recall(&net, xi, xi, &RecallConfig::default()).unwrap();
        assert_eq!(rec.converged_at, Some(0));
        assert_eq!(rec.states.len(), 26);
        assert_eq!(rec.overlaps.len(), 26);
        assert_eq!(rec.final_overlap(), 1.0);
    }

    #[test]
    fn hebbian_low_load_recalls() {
        let set = generate_patterns(100, 5, 17).unwrap();
        let net = Network::Weights(train_hebbian(&set));
        for xi in set.patterns() {
            let rec = run_recall(&net, xi, xi, &RecallConfig::default()).unwrap();
            assert_eq!(rec.final_overlap(), 1.0);
        }
    }

    #[test]
    fn klr_defaults_recall_stored_patterns() {
        let set = generate_patterns(100, 20, 23).unwrap();
        let dc = train_klr(&set, KernelParams::for_network(100), &TrainConfig::default()).unwrap();
        let net = Network::kernel(dc, set.clone()).unwrap();
        for xi in set.patterns() {
            let rec = run_recall(&net, xi, xi, &RecallConfig::default()).unwrap();
            assert_eq!(rec.final_overlap(), 1.0);
            assert_eq!(rec.converged_at, Some(0));
        }
    }

    #[test]
    fn threshold_dimension_checked() {
        let set = generate_patterns(6, 2, 1).unwrap();
        let net = Network::Weights(train_hebbian(&set));
        let cfg = RecallConfig { steps: 3, threshold: Some(vec![0.0; 5]) };
        let xi = &set.patterns()[0];
        assert!(run_recall(&net, xi, xi, &cfg).is_err());
        assert!(RecallConfig::with_steps(0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn trajectory_invariants(n in 2usize..40, p in 1usize..12, seed: u64, start_seed: u64, klr: bool) {
            let set = generate_patterns(n, p, seed).unwrap();
            let net = if klr {
                let dc = train_klr(&set, KernelParams::for_network(n), &TrainConfig { iterations: 20, ..TrainConfig::default() }).unwrap();
                Network::kernel(dc, set.clone()).unwrap()
            } else {
                Network::Weights(train_hebbian(&set))
            };
            let start = generate_patterns(n, 1, start_seed).unwrap().patterns()[0].clone();
            let target = &set.patterns()[0];
            let cfg = RecallConfig { steps: 10, threshold: None };
            let rec = run_recall(&net, &start, target, &cfg).unwrap();
            prop_assert_eq!(&rec, &run_recall(&net, &start, target, &cfg).unwrap());
            prop_assert_eq!(rec.states.len(), 11);
            for (s, &m) in rec.states.iter().zip(&rec.overlaps) {
                prop_assert!(s.values().iter().all(|&v| v == 1 || v == -1));
                prop_assert_eq!(m, overlap(s, target).unwrap());
                prop_assert!((-1.0..=1.0).contains(&m));
            }
            if let Some(k) = rec.converged_at {
                for s in &rec.states[k..] {
                    prop_assert_eq!(s, &rec.states[k]);
                }
            }
        }
    }
}
