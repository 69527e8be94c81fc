//! Link capacity, data shower bulk, multi-vehicle slot scheduling and
//! chunk/cumulative-ACK protocol simulation for vehicles that switch between
//! mmWave and THz links as they pass a roadside tower.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] evaluates THz and mmWave capacities and link-state
//!   probabilities, and combines them into the distance-switched capacity.
//! * [`trajectory`] turns analytic motion or imported traces into
//!   distance-versus-time and extracts contact windows.
//! * [`bulk`] integrates capacity along a trajectory.
//! * [`scheduler`] shares one tower among several vehicles on a slot grid.
//! * [`macsim`] steps the chunk/ACK protocol through a contact.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bulk;
pub mod channel;
mod error;
pub mod macsim;
pub mod quadrature;
pub mod scheduler;
pub mod trajectory;

pub use error::{Error, Result};
