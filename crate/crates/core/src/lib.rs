//! Device-independent certification of bipartite entanglement in a
//! four-party network.
//!
//! Charlie and Daisy feed Pauli eigenstates into auxiliary Bell pairs
//! shared with Alice and Bob. The chained Bell value of each wing
//! self-tests the auxiliaries, after which a linear functional of the
//! observed statistics reproduces the expectation of an entanglement
//! witness on the target state.

pub mod certify;
pub mod cli;
pub mod error;
pub mod io;
pub mod network;
pub mod qmath;
pub mod selftest;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
