//! Gas pipeline networks in Riemann invariants, with a nodal observer that
//! synchronises a second copy of the network to measurements of the first.
//!
//! The crate is organised bottom up:
//!
//! - [`network`]: graph, pipe data and the linear node conditions
//! - [`physics`]: pressure laws and the invariant transformation
//! - [`kernel`]: upwind transport with implicit friction on every pipe
//! - [`observer`]: the coupled original/observer pair and the error system
//! - [`diagnostics`]: Lyapunov functionals and decay fits
//! - [`theory`]: closed-form constants of the decay estimates
//! - [`io`]: file formats, boundary schedules, drivers and the command line

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kernel;
pub mod network;
pub mod observer;
pub mod physics;
pub mod theory;

pub use error::{Error, Result};
pub use kernel::{step_system, BoundaryControl, EdgeGrid, Exec, GridMode, SimState};
pub use network::{NetworkGraph, PipeSpec};
pub use observer::{CoupledState, ObserverConfig};
pub use physics::PressureLaw;
