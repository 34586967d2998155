pub mod analysis;
pub mod codegen;
pub mod compile;
pub mod diagnostic;
pub mod functions;
pub mod runtime;
pub mod solver;
pub mod syntax;
pub mod value;
