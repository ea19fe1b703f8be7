pub mod model;
pub mod rules;
pub mod conventions;
pub mod linalg;
pub mod compat;
pub mod tasks;
pub mod assign;
pub mod experiment;
pub mod solver;
pub mod scenario;
