//! Applications instrumented as averaging systems.

pub mod kuramoto;
pub mod opinion;
