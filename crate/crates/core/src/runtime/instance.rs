use std::sync::Arc;

use thiserror::Error;

use super::scene::{absolute_origin, layout_scene, Scene};
use crate::analysis::{CompiledModule, Property, VariableId};
use crate::solver::{Solver, SolverError, UpdateResult};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointerKind {
    Down,
    Move,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerEvent {
    pub kind: PointerKind,
    pub x: f64,
    pub y: f64,
}

impl PointerEvent {
    pub fn new(kind: PointerKind, x: f64, y: f64) -> Self {
        PointerEvent { kind, x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("viewport {width}x{height} violates guard(s) {violated:?}")]
    ViewportRejected {
        width: f64,
        height: f64,
        violated: Vec<i64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Focus {
    view: usize,
    /// Pointer position inside the view at the time of the press.
    grab_x: f64,
    grab_y: f64,
}

/// A running module bound to a viewport.
#[derive(Debug)]
pub struct GuiInstance {
    solver: Solver,
    focus: Option<Focus>,
}

impl GuiInstance {
    /// The viewport is applied before the first evaluation, so guards on
    /// base.W and base.H are checked against it rather than against zero.
    pub fn instantiate(module: Arc<CompiledModule>, width: f64, height: f64) -> Result<Self, InstanceError> {
        let viewport = [
            (module.base(Property::W), Value::Number(width)),
            (module.base(Property::H), Value::Number(height)),
        ];
        let solver = Solver::with_initial(module, &viewport).map_err(|e| match e {
            SolverError::InitGuardViolated(violated) => InstanceError::ViewportRejected {
                width,
                height,
                violated,
            },
            other => InstanceError::Solver(other),
        })?;
        Ok(GuiInstance { solver, focus: None })
    }

    pub fn module(&self) -> &Arc<CompiledModule> {
        self.solver.module()
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn solver_mut(&mut self) -> &mut Solver {
        &mut self.solver
    }

    pub fn resize(&mut self, width: f64, height: f64) -> Result<UpdateResult, SolverError> {
        let m = Arc::clone(self.module());
        self.solver.set_many(&[
            (m.base(Property::W), Value::Number(width)),
            (m.base(Property::H), Value::Number(height)),
        ])
    }

    /// Mirrors the committed base.W and base.H.
    pub fn viewport(&self) -> (f64, f64) {
        let m = self.module();
        let get = |p| self.solver.values()[m.base(p).index()].as_number().unwrap_or(0.0);
        (get(Property::W), get(Property::H))
    }

    pub fn set_by_name(&mut self, name: &str, value: Value) -> Result<UpdateResult, SolverError> {
        let id = self.solver.lookup(name)?;
        self.solver.set(id, value)
    }

    pub fn layout_scene(&self) -> Scene {
        layout_scene(self.module(), self.solver.values())
    }

    pub fn render_svg(&self) -> String {
        let (w, h) = self.viewport();
        super::render_svg(&self.layout_scene(), w, h)
    }

    /// The view currently grabbed by the pointer, if any.
    pub fn focus(&self) -> Option<usize> {
        self.focus.map(|f| f.view)
    }

    fn prop(&self, view: usize, p: Property) -> VariableId {
        self.module().views[view].prop(p)
    }

    /// One transaction per event. Misses and focus-less moves change nothing.
    pub fn inject_pointer(&mut self, event: PointerEvent) -> UpdateResult {
        let PointerEvent { kind, x, y } = event;
        let module = Arc::clone(self.module());
        let mut sets: Vec<(VariableId, Value)> = Vec::new();
        match kind {
            PointerKind::Down => {
                let scene = self.layout_scene();
                let Some(hit) = scene.hit_test(x, y) else {
                    return self.commit(&[]);
                };
                if let Some(prev) = self.focus {
                    sets.push((self.prop(prev.view, Property::Pressed), Value::Number(0.0)));
                }
                let (lx, ly) = (x - hit.abs_x, y - hit.abs_y);
                let view = hit.view;
                sets.push((self.prop(view, Property::Pressed), Value::Number(1.0)));
                sets.push((self.prop(view, Property::PointerX), Value::Number(lx)));
                sets.push((self.prop(view, Property::PointerY), Value::Number(ly)));
                let r = self.commit(&sets);
                if r.accepted() {
                    self.focus = Some(Focus {
                        view,
                        grab_x: lx,
                        grab_y: ly,
                    });
                }
                r
            }
            PointerKind::Move => {
                let Some(f) = self.focus else {
                    return self.commit(&[]);
                };
                let values = self.solver.values();
                let (px, py) = match module.views[f.view].parent {
                    Some(parent) => absolute_origin(values, &module, parent),
                    None => (0.0, 0.0),
                };
                let (ax, ay) = absolute_origin(values, &module, f.view);
                sets.push((self.prop(f.view, Property::DragX), Value::Number(x - f.grab_x - px)));
                sets.push((self.prop(f.view, Property::DragY), Value::Number(y - f.grab_y - py)));
                sets.push((self.prop(f.view, Property::PointerX), Value::Number(x - ax)));
                sets.push((self.prop(f.view, Property::PointerY), Value::Number(y - ay)));
                self.commit(&sets)
            }
            PointerKind::Up => {
                let Some(f) = self.focus.take() else {
                    return self.commit(&[]);
                };
                sets.push((self.prop(f.view, Property::Pressed), Value::Number(0.0)));
                self.commit(&sets)
            }
        }
    }

    fn commit(&mut self, sets: &[(VariableId, Value)]) -> UpdateResult {
        self.solver
            .set_many(sets)
            .expect("pointer inputs are number-typed sources")
    }
}
