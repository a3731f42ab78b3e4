//! Spatial population protocols for the distributed localisation problem.
//!
//! Anonymous agents interact in uniformly random ordered pairs. Besides
//! exchanging states, an interacting pair learns either the distance between
//! the two agents or the vector from initiator to responder. The crate holds
//! a deterministic simulator for such protocols, the localisation protocols
//! themselves, and an experiment harness that measures stabilisation times.

pub mod engine;
pub mod epidemics;
pub mod geometry;
pub mod harness;
pub mod leader_loc;
pub mod rng;
pub mod selfstab;
pub mod vector_loc;
