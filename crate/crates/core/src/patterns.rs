//! Bipolar patterns, target encoding, corruption and the overlap metric.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Generator used for every stochastic step in the crate.
pub type SeededRng = ChaCha8Rng;

/// Name recorded in experiment metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3)";

/// Final overlap a recall must strictly exceed to count as a success.
pub const SUCCESS_OVERLAP: f64 = 0.95;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A vector of ±1 neuron states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<i8>);

impl Pattern {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("pattern must have at least one entry"));
        }
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::domain(format!(
                "pattern entry {pos} is {}, expected -1 or +1",
                values[pos]
            )));
        }
        Ok(Pattern(values))
    }

    /// Builds a pattern from arbitrary reals using `sign(x)` with `sign(0) = +1`.
    pub fn from_signs(values: impl IntoIterator<Item = f64>) -> Self {
        Pattern(values.into_iter().map(sign).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn negated(&self) -> Pattern {
        Pattern(self.0.iter().map(|&v| -v).collect())
    }

    /// Number of positions where `self` and `other` disagree.
    pub fn hamming(&self, other: &Pattern) -> Result<usize> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(hamming_unchecked(&self.0, &other.0))
    }
}

#[inline]
pub(crate) fn hamming_unchecked(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Sign with the tie rule `sign(0) = +1`.
#[inline]
pub fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// The stored patterns together with the seed that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    patterns: Vec<Pattern>,
    seed: u64,
}

impl PatternSet {
    pub fn new(patterns: Vec<Pattern>, seed: u64) -> Result<Self> {
        let first = patterns
            .first()
            .ok_or_else(|| Error::domain("pattern set must contain at least one pattern"))?;
        let n = first.dim();
        for p in &patterns {
            Error::check_dim(n, p.dim())?;
        }
        Ok(PatternSet { patterns, seed })
    }

    pub fn dim(&self) -> usize {
        self.patterns[0].dim()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn get(&self, mu: usize) -> Option<&Pattern> {
        self.patterns.get(mu)
    }

    /// The P×N pattern matrix `X` as reals.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.len(), self.dim(), |mu, i| {
            f64::from(self.patterns[mu].0[i])
        })
    }

    pub fn negated(&self) -> PatternSet {
        PatternSet {
            patterns: self.patterns.iter().map(Pattern::negated).collect(),
            seed: self.seed,
        }
    }
}

/// Draws `p` patterns of `n` independent fair ±1 entries.
pub fn generate_patterns(n: usize, p: usize, seed: u64) -> Result<PatternSet> {
    if n == 0 || p == 0 {
        return Err(Error::domain(format!(
            "need n >= 1 and p >= 1, got n={n}, p={p}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let patterns = (0..p)
        .map(|_| {
            Pattern(
                (0..n)
                    .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
                    .collect(),
            )
        })
        .collect();
    Ok(PatternSet { patterns, seed })
}

/// P×N matrix with `t = (ξ + 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrix(Matrix);

impl TargetMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, mu: usize, i: usize) -> f64 {
        self.0.get(mu, i)
    }

    /// Targets of neuron `i` across all patterns.
    pub fn neuron(&self, i: usize) -> Vec<f64> {
        self.0.column(i)
    }

    /// Inverse map `ξ = 2t − 1`.
    pub fn to_patterns(&self, seed: u64) -> Result<PatternSet> {
        let patterns = (0..self.0.rows())
            .map(|mu| Pattern::new(self.0.row(mu).iter().map(|&t| (2.0 * t - 1.0) as i8).collect()))
            .collect::<Result<Vec<_>>>()?;
        PatternSet::new(patterns, seed)
    }
}

pub fn to_targets(set: &PatternSet) -> TargetMatrix {
    TargetMatrix(Matrix::from_fn(set.len(), set.dim(), |mu, i| {
        (f64::from(set.patterns[mu].0[i]) + 1.0) / 2.0
    }))
}

/// Overlap `m = (1/N) s·ξ`.
pub fn overlap(state: &Pattern, target: &Pattern) -> Result<f64> {
    Error::check_dim(target.dim(), state.dim())?;
    let dot: i64 = state
        .0
        .iter()
        .zip(&target.0)
        .map(|(&a, &b)| i64::from(a) * i64::from(b))
        .sum();
    Ok(dot as f64 / state.dim() as f64)
}

/// Number of flips needed to move from overlap 1 to `initial_overlap`.
pub fn flip_count(n: usize, initial_overlap: f64) -> Result<usize> {
    if !(-1.0..=1.0).contains(&initial_overlap) {
        return Err(Error::domain(format!(
            "initial overlap {initial_overlap} outside [-1, 1]"
        )));
    }
    let k = (n as f64 * (1.0 - initial_overlap) / 2.0).round() as usize;
    Ok(k.min(n))
}

/// Copy of `target` with exactly `round(N(1−m0)/2)` distinct positions flipped.
///
/// The achieved overlap is `1 − 2k/N`, which can differ from the requested
/// one when `N(1−m0)/2` is not an integer.
pub fn corrupt(target: &Pattern, initial_overlap: f64, seed: u64) -> Result<Pattern> {
    let n = target.dim();
    let k = flip_count(n, initial_overlap)?;
    let mut rng = rng_from_seed(seed);
    let mut values = target.0.clone();
    for pos in index::sample(&mut rng, n, k) {
        values[pos] = -values[pos];
    }
    Ok(Pattern(values))
}

pub fn is_success(final_overlap: f64) -> bool {
    final_overlap > SUCCESS_OVERLAP
}
