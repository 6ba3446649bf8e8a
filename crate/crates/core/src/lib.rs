//! Quantum hidden Markov models over transition operation matrices (TOMs).
//!
//! A model has `N` classical states, each carrying a `d`-dimensional
//! quantum register. Emitting a symbol applies one sub-TOM: an `N x N` grid
//! of completely positive maps, entry `(i, j)` moving state `j` to state
//! `i`. Classical hidden Markov models embed as the `d = 1` case.
//!
//! ```
//! use qhmm::builtin;
//! use qhmm::inference::{forward, viterbi};
//!
//! let m = builtin::quantum("lambda1q")?;
//! let r = forward(&m, &["a", "b", "a"])?;
//! assert!((r.prob - 0.5).abs() < 1e-12);
//!
//! let best = viterbi(&m, &["a", "c", "a"])?;
//! assert_eq!(best.path, ["s2", "s1", "s2", "s1"]);
//! # Ok::<(), qhmm::Error>(())
//! ```

pub mod builtin;
pub mod densemath;
pub mod error;
pub mod inference;
pub mod io;
pub mod models;
pub mod monras;
pub mod quantum;
pub mod random;
pub mod spectral;
pub mod tom;

pub use densemath::ComplexMatrix;
pub use error::{Error, Result, Violation};
pub use inference::{forward, viterbi, ForwardResult, ViterbiResult};
pub use models::{embed_classical, ClassicalMealyHMM, MealyQHMM, Model};
pub use quantum::{DensityOperator, KrausOperation, Measurement};
pub use tom::{SubTOM, SubVectorState, Tom, VectorState};
