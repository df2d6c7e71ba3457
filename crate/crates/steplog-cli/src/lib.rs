//! Library surface of the `steplog` command-line tool: manifest parsing
//! and artifact serialization, shared by the binary and its tests.

pub mod emit;
pub mod manifest;
