//! Telegraph English toolkit.

pub mod grammar;
pub mod lint;
pub mod index;
pub mod assemble;
pub mod store;
pub mod compress;
pub mod bench;
