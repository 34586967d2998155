//! The compiled, import-flattened form of a module.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::functions::FunctionEntry;
use crate::syntax::RelOp;
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableId(pub u32);

impl VariableId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    #[serde(rename = "view")]
    ViewProperty,
    #[serde(rename = "free")]
    FreeVariable,
    #[serde(rename = "input")]
    BuiltinInput,
    #[serde(rename = "base")]
    BaseProperty,
}

/// The fixed property set of a box view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    X,
    Y,
    W,
    H,
    Rot,
    Z,
    Fill,
    Text,
    TextSize,
    Visible,
    PointerX,
    PointerY,
    Pressed,
    DragX,
    DragY,
}

impl Property {
    pub const ALL: [Property; 15] = [
        Property::X,
        Property::Y,
        Property::W,
        Property::H,
        Property::Rot,
        Property::Z,
        Property::Fill,
        Property::Text,
        Property::TextSize,
        Property::Visible,
        Property::PointerX,
        Property::PointerY,
        Property::Pressed,
        Property::DragX,
        Property::DragY,
    ];

    /// The subset exposed by the implicit `base` view.
    pub const BASE: [Property; 4] = [Property::X, Property::Y, Property::W, Property::H];

    pub fn name(self) -> &'static str {
        match self {
            Property::X => "X",
            Property::Y => "Y",
            Property::W => "W",
            Property::H => "H",
            Property::Rot => "Rot",
            Property::Z => "Z",
            Property::Fill => "Fill",
            Property::Text => "Text",
            Property::TextSize => "TextSize",
            Property::Visible => "Visible",
            Property::PointerX => "PointerX",
            Property::PointerY => "PointerY",
            Property::Pressed => "Pressed",
            Property::DragX => "DragX",
            Property::DragY => "DragY",
        }
    }

    pub fn from_name(name: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn value_type(self) -> ValueType {
        match self {
            Property::Fill | Property::Text => ValueType::Text,
            _ => ValueType::Number,
        }
    }

    /// Pointer-driven properties, written only by the runtime.
    pub fn is_input(self) -> bool {
        matches!(
            self,
            Property::PointerX | Property::PointerY | Property::Pressed | Property::DragX | Property::DragY
        )
    }

    /// Properties that must never commit NaN.
    pub fn is_geometry(self) -> bool {
        matches!(
            self,
            Property::X | Property::Y | Property::W | Property::H | Property::Rot | Property::Z
        )
    }

    pub fn default_value(self) -> Value {
        match self {
            Property::Fill => Value::Text("#000000".into()),
            Property::Text => Value::Text(String::new()),
            Property::TextSize => Value::Number(12.0),
            Property::Visible => Value::Number(1.0),
            _ => Value::Number(0.0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableInfo {
    pub id: VariableId,
    pub name: String,
    pub kind: VariableKind,
    pub value_type: ValueType,
    /// Index of the unique constraint targeting this variable.
    pub writer: Option<usize>,
    pub exported: bool,
    pub default: Value,
    /// For view properties, which view and property.
    pub property: Option<(usize, Property)>,
}

impl VariableInfo {
    /// Settable from outside: no writer and not derived.
    pub fn is_source(&self) -> bool {
        self.writer.is_none() && self.kind != VariableKind::ViewProperty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewInfo {
    pub id: usize,
    pub name: String,
    pub parent: Option<usize>,
    pub doc_order: usize,
    pub properties: [VariableId; 15],
}

impl ViewInfo {
    pub fn prop(&self, p: Property) -> VariableId {
        self.properties[p.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    PushNum(f64),
    PushText(String),
    Load(VariableId),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Call { function: usize, arity: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprIR {
    pub postfix: Vec<Instr>,
    pub result_type: ValueType,
}

impl ExprIR {
    pub fn loads(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.postfix.iter().filter_map(|i| match i {
            Instr::Load(v) => Some(*v),
            _ => None,
        })
    }

    /// Stack depth after simulating the program, or `None` on underflow.
    pub fn stack_effect(&self) -> Option<usize> {
        let mut depth: usize = 0;
        for i in &self.postfix {
            depth = match i {
                Instr::PushNum(_) | Instr::PushText(_) | Instr::Load(_) => depth + 1,
                Instr::Neg => depth.checked_sub(1)? + 1,
                Instr::Add | Instr::Sub | Instr::Mul | Instr::Div => depth.checked_sub(2)? + 1,
                Instr::Call { arity, .. } => depth.checked_sub(*arity)? + 1,
            };
        }
        Some(depth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub target: VariableId,
    pub expr: ExprIR,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub lhs: ExprIR,
    pub op: RelOp,
    pub rhs: ExprIR,
}

impl Inequality {
    pub fn loads(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.lhs.loads().chain(self.rhs.loads())
    }
}

/// Functions referenced by a module, indexed by `Instr::Call::function`.
/// Compared by qualified name.
#[derive(Clone, Default)]
pub struct FunctionTable(pub Vec<Arc<FunctionEntry>>);

impl FunctionTable {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|f| f.signature.qualified_name.as_str())
    }

    pub fn get(&self, index: usize) -> Option<&Arc<FunctionEntry>> {
        self.0.get(index)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl PartialEq for FunctionTable {
    fn eq(&self, other: &Self) -> bool {
        self.names().eq(other.names())
    }
}

impl fmt::Debug for FunctionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledModule {
    pub name: String,
    pub variables: Vec<VariableInfo>,
    pub views: Vec<ViewInfo>,
    pub constraints: Vec<Constraint>,
    pub inequalities: Vec<Inequality>,
    pub exports: Vec<VariableId>,
    /// `(from, to)`: the expression writing `to` reads `from`. Sorted, unique.
    pub edges: Vec<(VariableId, VariableId)>,
    /// Strongly connected components in topological order.
    pub scc_order: Vec<Vec<VariableId>>,
    pub functions: FunctionTable,
}

impl CompiledModule {
    pub fn variable(&self, id: VariableId) -> &VariableInfo {
        &self.variables[id.index()]
    }

    pub fn variable_by_name(&self, name: &str) -> Option<VariableId> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.id)
    }

    pub fn view_by_name(&self, name: &str) -> Option<&ViewInfo> {
        self.views.iter().find(|v| v.name == name)
    }

    pub fn base(&self, p: Property) -> VariableId {
        let i = Property::BASE
            .iter()
            .position(|b| *b == p)
            .expect("base exposes X, Y, W, H only");
        VariableId(i as u32)
    }

    /// True when some component has more than one member or a self-edge.
    pub fn has_cycles(&self) -> bool {
        self.scc_order.iter().any(|c| c.len() > 1) || self.edges.iter().any(|(a, b)| a == b)
    }
}

/// Recomputes the dependency edges from constraint load sets.
pub fn derive_edges(constraints: &[Constraint]) -> Vec<(VariableId, VariableId)> {
    let mut edges: Vec<_> = constraints
        .iter()
        .flat_map(|c| c.expr.loads().map(move |v| (v, c.target)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}
