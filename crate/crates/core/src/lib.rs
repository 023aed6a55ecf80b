//! Heegner divisors, vector-valued harmonic Maass forms for the Weil
//! representation, meromorphic modular forms with poles at Heegner points and
//! their cycle integrals along closed geodesics.

pub mod acceptance;
pub mod algrec;
pub mod arith;
pub mod cycles;
pub mod error;
pub mod maass;
pub mod merom;
pub mod qf;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
