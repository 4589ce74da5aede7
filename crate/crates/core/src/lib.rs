//! Channel simulator for integrated sensing and communication (ISAC).
//!
//! The crate is organised around the pieces of a sensing channel:
//!
//! - [`rcs`]: radar cross section of primitive shapes, segmentation of
//!   electrically large objects, and slow/fast fading decomposition.
//! - [`scenario`]: nodes, sensing modes, targets, environment objects,
//!   LOS/NLOS draws and single-bounce specular paths.
//! - [`microdoppler`]: fine-motion profiles, micro-Doppler phase series,
//!   arm-swing kinematics and spectrograms.
//! - [`channel`]: background clusters, target-link concatenation with the
//!   bistatic radar equation, and the frequency response over slow time.
//! - [`sensing`]: the OFDM link-level pipeline from pilots to detections.
//! - [`config`] and [`export`]: scenario files and CSV / graymap output.
//!
//! A narrative guide lives in the `book/` directory of the repository; its
//! code listings are compiled as doc-tests of this crate.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
mod error;
pub mod export;
pub mod geometry;
pub mod microdoppler;
pub mod rcs;
pub mod scenario;
pub mod sensing;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wavelength for a carrier frequency in Hz.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/rcs.md")]
    mod rcs {}
    #[doc = include_str!("../../../book/src/scenario.md")]
    mod scenario {}
    #[doc = include_str!("../../../book/src/microdoppler.md")]
    mod microdoppler {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/sensing.md")]
    mod sensing {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
}
