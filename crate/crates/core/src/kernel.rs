//! RBF kernel on bipolar vectors and Gram-matrix construction.
//!
//! For ±1 vectors differing in `d` positions, `‖x − y‖² = 4d`, so the kernel
//! is evaluated as `exp(−4γd)` from an exact integer Hamming distance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::patterns::{hamming_unchecked, Pattern, PatternSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    gamma: f64,
}

impl KernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(KernelParams { gamma })
        } else {
            Err(Error::domain(format!("gamma must be positive, got {gamma}")))
        }
    }

    /// `γ = 1/N`.
    pub fn for_network(n: usize) -> Self {
        KernelParams {
            gamma: 1.0 / n as f64,
        }
    }

    /// `γ = scaled/N`, the parameterisation used by the γ sweep.
    pub fn scaled(scaled: f64, n: usize) -> Result<Self> {
        Self::new(scaled / n as f64)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    fn from_hamming(&self, d: usize) -> f64 {
        (-self.gamma * (4 * d) as f64).exp()
    }
}

/// `exp(−γ‖x − y‖²)`.
pub fn rbf(x: &Pattern, y: &Pattern, params: KernelParams) -> Result<f64> {
    Ok(params.from_hamming(x.hamming(y)?))
}

/// Dense, symmetric P×P kernel matrix over the stored patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(Matrix);

impl GramMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }

    pub fn get(&self, nu: usize, mu: usize) -> f64 {
        self.0.get(nu, mu)
    }

    /// Wraps an arbitrary square matrix; used by tests and oracles.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        Error::check_dim(m.rows(), m.cols())?;
        Ok(GramMatrix(m))
    }
}

pub fn gram(set: &PatternSet, params: KernelParams) -> GramMatrix {
    let p = set.len();
    let pats = set.patterns();
    let mut m = Matrix::zeros(p, p);
    m.as_mut_slice()
        .par_chunks_mut(p)
        .enumerate()
        .for_each(|(nu, row)| {
            for (mu, out) in row.iter_mut().enumerate() {
                let d = hamming_unchecked(pats[nu].values(), pats[mu].values());
                *out = params.from_hamming(d);
            }
        });
    GramMatrix(m)
}

/// `[K(s, ξ¹), …, K(s, ξᴾ)]`.
pub fn kernel_row(state: &Pattern, set: &PatternSet, params: KernelParams) -> Result<Vec<f64>> {
    Error::check_dim(set.dim(), state.dim())?;
    Ok(set
        .patterns()
        .iter()
        .map(|xi| params.from_hamming(hamming_unchecked(state.values(), xi.values())))
        .collect())
}
