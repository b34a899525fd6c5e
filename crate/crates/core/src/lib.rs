//! Simulation of resonance-fluorescence interference between atoms and their
//! mirror images: emitter coherence, polarization bookkeeping, single-atom and
//! cloud fringe patterns, and contrast extraction.

// `!(x > y)` is used on purpose so that NaN inputs fall into the rejection branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cloud;
pub mod emitter;
pub mod error;
pub mod model;
pub mod polarization;
pub mod quadrature;
pub mod scatterer;

pub use error::{MbsError, Result};
pub use model::{CloudSpec, DelayModel, DriveSpec, Geometry};
