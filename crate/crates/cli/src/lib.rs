//! Document formats shared between the `cbd` binary and its tests.

pub mod doc;
