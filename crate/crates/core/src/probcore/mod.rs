//! Exact finite-alphabet probability kernel.
//!
//! All logarithms are base 2, so every information measure is in bits.
//! Variational distance follows the unnormalized convention
//! `V(p, q) = sum |p - q|`, with range `[0, 2]`; halve it for total variation.

mod channel;
mod dist;
mod measures;

pub use channel::{channels, ChannelSpec, MacChannel};
pub use dist::{Alphabet, Dist, JointDist, NORMALIZATION_TOL};
pub(crate) use measures::l1;
pub use measures::{
    binary_entropy, conditional_entropy, entropy, min_entropy_conditional, mutual_information,
    target_output_dist, transmit, variational_distance, Pmf,
};
