//! Differentiation machinery: a scalar reverse tape for losses, forward
//! spatial jets for field derivatives, and finite-difference oracles.

pub mod fd;
pub mod jet;
pub mod real;
pub mod reduce;
pub mod tape;
pub mod view;

pub use fd::{fd_gradient_oracle, relative_error};
pub use jet::{JetBatch, JetOrder, SpatialJet};
pub use real::{sigmoid, Real};
pub use reduce::{deterministic_reduce, deterministic_reduce_par, pairwise_sum};
pub use tape::{Gradient, Tape, Var};
pub use view::{FieldView, JetVars};
