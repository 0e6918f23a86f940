pub mod cli;
pub mod covers;
pub mod foundations;
pub mod orders;
pub mod pathologies;
pub mod registry;
pub mod separation;
pub mod spaces;
