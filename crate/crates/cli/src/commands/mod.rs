pub mod augment;
pub mod balance;
pub mod distill;
pub mod evalrpe;
pub mod extract;
pub mod integrate;
pub mod masks;
pub mod simulate;
pub mod stats;
