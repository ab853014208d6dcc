//! Simulation of passive Wi-Fi CSI motion sensing through a wall opening and
//! of a reflecting surface that obfuscates the channel.
//!
//! The pieces, in signal order: [`channel`] turns a [`channel::Scenario`]
//! into CSI frames, [`irs`] generates surface configurations, [`motion`]
//! moves people and reflectors, [`sensing`] is the eavesdropper, and
//! [`experiments`] wires them into the protocols. [`io`] reads and writes
//! every file format.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod irs;
pub mod motion;
pub mod seed;
pub mod sensing;

pub use error::{Error, Result};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/surface.md")]
    mod surface {}
    #[doc = include_str!("../../../book/src/sensing.md")]
    mod sensing {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/files.md")]
    mod files {}
}
