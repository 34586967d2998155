use crate::analysis::{CompiledModule, Property};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneNode {
    pub view: usize,
    pub name: String,
    pub abs_x: f64,
    pub abs_y: f64,
    pub width: f64,
    pub height: f64,
    /// Degrees clockwise about the node's own center.
    pub rot: f64,
    pub z: f64,
    pub fill: String,
    pub text: String,
    pub text_size: f64,
}

impl SceneNode {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.abs_x && x < self.abs_x + self.width && y >= self.abs_y && y < self.abs_y + self.height
    }
}

/// Visible views, back to front.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub nodes: Vec<SceneNode>,
}

impl Scene {
    /// The frontmost node containing the point (rotation ignored).
    pub fn hit_test(&self, x: f64, y: f64) -> Option<&SceneNode> {
        self.nodes.iter().rev().find(|n| n.contains(x, y))
    }
}

fn num(values: &[Value], module: &CompiledModule, view: usize, p: Property) -> f64 {
    values[module.views[view].prop(p).index()]
        .as_number()
        .unwrap_or(f64::NAN)
}

fn text(values: &[Value], module: &CompiledModule, view: usize, p: Property) -> String {
    values[module.views[view].prop(p).index()]
        .as_text()
        .unwrap_or("")
        .to_string()
}

/// Sum of X and Y over `view` and all its ancestors.
pub(crate) fn absolute_origin(values: &[Value], module: &CompiledModule, view: usize) -> (f64, f64) {
    let (mut x, mut y) = (0.0, 0.0);
    let mut cur = Some(view);
    while let Some(v) = cur {
        x += num(values, module, v, Property::X);
        y += num(values, module, v, Property::Y);
        cur = module.views[v].parent;
    }
    (x, y)
}

/// Lays out the given store. A hidden view is omitted but still positions
/// its children, which stay visible unless hidden themselves.
pub fn layout_scene(module: &CompiledModule, values: &[Value]) -> Scene {
    let mut nodes: Vec<SceneNode> = module
        .views
        .iter()
        .filter(|v| num(values, module, v.id, Property::Visible) != 0.0)
        .map(|v| {
            let (abs_x, abs_y) = absolute_origin(values, module, v.id);
            SceneNode {
                view: v.id,
                name: v.name.clone(),
                abs_x,
                abs_y,
                width: num(values, module, v.id, Property::W),
                height: num(values, module, v.id, Property::H),
                rot: num(values, module, v.id, Property::Rot),
                z: num(values, module, v.id, Property::Z),
                fill: text(values, module, v.id, Property::Fill),
                text: text(values, module, v.id, Property::Text),
                text_size: num(values, module, v.id, Property::TextSize),
            }
        })
        .collect();
    // Views are in document order already; the sort is stable.
    nodes.sort_by(|a, b| a.z.total_cmp(&b.z));
    Scene { nodes }
}
