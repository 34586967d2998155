//! Headless reference runtime: instances, scene layout, pointer input, SVG
//! output and conformance scripts.

mod instance;
mod scene;
pub mod script;
mod svg;

pub use instance::{GuiInstance, InstanceError, PointerEvent, PointerKind};
pub use scene::{layout_scene, Scene, SceneNode};
pub use svg::render_svg;
