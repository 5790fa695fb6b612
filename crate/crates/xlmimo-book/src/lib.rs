//! Compiles the guide's code listings as doctests; mdbook itself cannot
//! resolve workspace dependencies.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/arrays.md")]
pub mod arrays {}
#[doc = include_str!("../../../book/src/near-field.md")]
pub mod near_field {}
#[doc = include_str!("../../../book/src/channels.md")]
pub mod channels {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}
#[doc = include_str!("../../../book/src/delay-alignment.md")]
pub mod delay_alignment {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
#[doc = include_str!("../../../book/src/acceptance.md")]
pub mod acceptance {}
