//! Element patterns, source distances, array-response models and the
//! distances that separate the near-field regimes.

mod boundary;
mod pattern;
mod response;

pub use boundary::*;
pub use pattern::*;
pub use response::*;
