//! Semantic analysis: import flattening, binding, checking and lowering.

mod analyze;
mod imports;
mod model;
mod scc;

pub use analyze::analyze;
pub use imports::{resolve_imports, FlatModule, FlatView, MapLoader, ModuleLoader};
pub use model::*;
pub use scc::build_scc_order;
