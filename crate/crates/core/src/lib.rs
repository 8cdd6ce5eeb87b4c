//! Weak and strong computationally relaxed locally correctable codes.

pub mod bits;
pub mod channel;
pub mod codeword;
pub mod error;
pub mod expander_graph;
pub mod gf;
pub mod hashing;
pub mod inner_ecc;
pub mod oracles;
pub mod query;
pub mod rs;
pub mod strong_crlcc;
pub mod weak_crlcc;

pub use error::{Error, Result};
