pub mod general;
pub mod line;
pub mod round_robin;
pub mod small;
