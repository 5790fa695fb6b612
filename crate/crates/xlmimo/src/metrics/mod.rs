//! Link-level performance metrics.

mod dof;
mod multiuser;
mod pattern;
mod snr;

pub use dof::*;
pub use multiuser::*;
pub use pattern::*;
pub use snr::*;
