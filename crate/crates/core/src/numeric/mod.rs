//! Dense linear algebra, tape-based reverse-mode differentiation,
//! deterministic randomness and optimizers. Everything is `f64`.

pub mod gradcheck;
pub mod matrix;
pub mod ops;
pub mod optim;
pub mod rng;
pub mod tape;

pub use gradcheck::{finite_difference_check, max_rel_error};
pub use matrix::Matrix;
pub use ops::HingeSkips;
pub use optim::{OptimSpec, OptimizerState};
pub use rng::SeededRng;
pub use tape::{Gradients, Tape, ValueId};
