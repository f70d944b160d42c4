//! Distance-distributed experimental designs for Gaussian process
//! surrogates.
//!
//! The crate builds designs in the unit hypercube whose pairwise-distance
//! distribution is matched to a parametric target (Beta or Uniform scaled
//! to [0, sqrt(d)]), plus the usual comparators (random, Latin hypercube,
//! maximin, phi_p) and a hybrid that keeps Latin-hypercube marginals while
//! optimizing the distance match. On top of that sit an isotropic Gaussian
//! GP (prediction + lengthscale MLE), sequential-design loops (variance
//! maximization and expected improvement), a Beta-shape tuner, and a
//! benchmark harness for lengthscale-accuracy, active-learning, and
//! Bayesian-optimization studies.

pub mod bench;
pub mod design;
pub mod dist;
pub mod error;
pub mod gp;
pub mod optim;
pub mod rng;
pub mod seq;
pub mod special;
pub mod testfns;
pub mod tuner;
pub mod util;

pub use error::{Error, Result};
