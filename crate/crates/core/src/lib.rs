//! Certified upper bounds on Lipschitz constants of feedforward ReLU networks.
//!
//! The crate builds the polynomial optimization problem whose optimum is the
//! Lipschitz constant of a ReLU network with respect to the `L∞` norm, using an
//! exact semialgebraic description of ReLU and of its generalized derivative,
//! and bounds that optimum from above with semidefinite moment relaxations:
//!
//! - **Shor**: the first-order dense relaxation;
//! - **HR-1 / HR-2**: heuristic sparse relaxations where the affine layer
//!   equations (the only constraints that break the variable-subset pattern)
//!   are handled by a dense first-order moment matrix plus scalar moment
//!   equalities.
//!
//! Lower bounds come from gradient sampling and, for small one-hidden-layer
//! networks, from exact activation-pattern enumeration. Robustness of inputs
//! is certified from any of these bounds.
//!
//! ```text
//! network ──> pop ──> moments ──> relaxation ──> conic (IPM / SDPA) ──> bound
//!    │                                                                   │
//!    └──────────> sampler (LBS, exact oracle)          certify <─────────┘
//! ```
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod certify;
pub mod cli;
pub mod conic;
pub mod error;
pub mod moments;
pub mod network;
pub mod pop;
pub mod relaxation;
pub mod sampler;

pub use error::{Error, Result};
pub use network::{InputRegion, Network, RegionKind};
pub use relaxation::{CubicMode, Method, RelaxationSpec};
