//! Concrete counterexample constructions, each with an exact oracle on the test side.

pub mod blocks;
pub mod generic;
pub mod hypersimple;
pub mod injection_orders;
pub mod pi01;
pub mod subbase;
