pub mod codec;
pub mod generators;
pub mod harness;
pub mod protocol;
pub mod radio;
pub mod scheme;
pub mod tree;
