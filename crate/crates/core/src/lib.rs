//! Hopfield-network associative memory with three learning rules:
//! Hebbian outer products, per-neuron linear logistic regression (LLR) and
//! kernel logistic regression (KLR) in the dual with an RBF kernel.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`patterns`] | bipolar patterns, targets, corruption, overlap |
//! | [`kernel`] | RBF kernel, Gram matrix, kernel rows |
//! | [`trainers`] | Hebbian, LLR and KLR learning |
//! | [`recall`] | synchronous recall dynamics and trajectories |
//! | [`experiments`] | seeded capacity / noise / γ / λ experiments |
//! | [`io`] | text formats for patterns, models, trajectories and results |
//! | [`cli`] | the `hopkernel` command-line front end |
//!
//! ```
//! use hopkernel::{generate_patterns, train_klr, run_recall, KernelParams, Network, RecallConfig, TrainConfig};
//!
//! let set = generate_patterns(50, 10, 7).unwrap();
//! let model = train_klr(&set, KernelParams::for_network(50), &TrainConfig::default()).unwrap();
//! let net = Network::kernel(model, set.clone()).unwrap();
//! let xi = &set.patterns()[3];
//! let rec = run_recall(&net, xi, xi, &RecallConfig::default()).unwrap();
//! assert_eq!(rec.final_overlap(), 1.0);
//! ```

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod patterns;
pub mod recall;
pub mod trainers;

pub use error::{Error, Result};
pub use kernel::{gram, kernel_row, rbf, GramMatrix, KernelParams};
pub use patterns::{
    corrupt, generate_patterns, is_success, overlap, to_targets, Pattern, PatternSet, TargetMatrix,
};
pub use recall::{run_recall, step_kernel, step_weights, Network, RecallConfig, TrajectoryRecord};
pub use trainers::{
    klr_gradient, klr_logits, klr_loss, llr_gradient, llr_logit, llr_loss, train_hebbian,
    train_klr, train_llr, DualCoefficients, Rule, TrainConfig, WeightMatrix,
};
