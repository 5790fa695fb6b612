//! Near-field channel modelling and link analysis for extremely large
//! antenna arrays.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`] builds element positions for collocated, sparse and
//!   modular linear and planar arrays.
//! - [`nearfield`] holds element gain patterns, source-to-element distances,
//!   the five array-response models and the field-boundary distances.
//! - [`channel`] synthesises LoS, bistatic NLoS, multipath, visibility-masked
//!   and correlation-based channels.
//! - [`metrics`] evaluates SNR scaling, beam focusing patterns, multi-user
//!   SINR and degrees of freedom.
//! - [`codebook`] and [`training`] cover DFT and polar-domain codebooks and the
//!   beam-training procedures built on them.
//! - [`dam`] implements single-carrier delay alignment modulation.
//! - [`experiments`] drives named parameter sweeps from a TOML scenario file.
//!
//! ```
//! use xlmimo::geometry::{ArrayGeometry, ArrayLayout};
//! use xlmimo::nearfield::{array_response, GainPattern, ResponseModel, SourcePoint};
//!
//! let lambda = 0.125;
//! let layout = ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: 8 }, lambda).unwrap();
//! let user = SourcePoint::polar(&layout, 15.0, std::f64::consts::FRAC_PI_2);
//! let a = array_response(ResponseModel::Nusw, &layout, &user, &GainPattern::Isotropic).unwrap();
//! assert_eq!(a.len(), 8);
//! ```

// Negated comparisons deliberately reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod dam;
mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod nearfield;
pub mod quad;
pub mod training;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;
/// Column vector of complex samples.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix, receive dimension first.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Point or direction in metres.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength in metres for a frequency in hertz.
pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

/// Linear power ratio to decibels.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
