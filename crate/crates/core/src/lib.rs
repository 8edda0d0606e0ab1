//! Belief tracking of a hidden mobile agent on a tile map.
//!
//! * [`hmm`]: scaled forward/backward inference and multi-sequence
//!   Baum-Welch over a transition matrix with fixed observation weights.
//! * [`grid`]: maps, movement, vision and negative-information observations.
//! * [`pursuit`]: the live tracker, cross-game learning and path planning.
//! * [`experiments`]: the turn loop, scripted opponents, experiment
//!   protocols, statistics and exports.

pub mod experiments;
pub mod grid;
pub mod hmm;
pub mod pursuit;
