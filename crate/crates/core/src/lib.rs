//! Constructive universal approximators whose weights are read straight off
//! the fitting data.
//!
//! * [`tnn`]: a one-hidden-layer sigmoid network for scalar inputs whose
//!   neurons switch on in a staircase over the sorted fitting inputs.
//! * [`sqann`]: a layered network that stores each fitting sample as a
//!   fingerprint and retrieves its output through a strongly activated
//!   neuron, falling back to two-neuron interpolation elsewhere.
//! * [`absorption`]: extends the fitting set with samples a model gets wrong
//!   and rebuilds, without losing accuracy on earlier samples.

pub mod absorption;
pub mod activations;
pub mod data;
pub mod io;
pub mod sqann;
pub mod tnn;

pub use data::{Dataset, Sample};
