pub mod expr;
pub mod synth;
pub mod simulate;
pub mod system;
