//! The portable IR document: canonical JSON for a compiled module.
//!
//! Emission goes through the `Ir*` mirror structs below so that key order is
//! fixed by field order. Loading deserializes the same structs, then rebuilds
//! and cross-checks everything the solver relies on (writers, view property
//! slots, expression types, the dependency graph).

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::analysis::{
    build_scc_order, derive_edges, CompiledModule, Constraint, ExprIR, FunctionTable, Inequality, Instr, Property,
    VariableId, VariableInfo, VariableKind, ViewInfo,
};
use crate::functions::FunctionRegistry;
use crate::syntax::RelOp;
use crate::value::{Value, ValueType};

pub const IR_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("unsupported IR version {0} (expected {IR_VERSION})")]
    BadVersion(String),
    #[error("schema error at {path}: {message}")]
    SchemaError { path: String, message: String },
    #[error("dependency graph mismatch: {0}")]
    GraphMismatch(String),
    #[error("IR calls unknown function '{0}'")]
    UnknownFunction(String),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::SchemaError {
        path: path.into(),
        message: message.into(),
    }
}

/// IEEE doubles as JSON. Non-finite values, which JSON cannot represent as
/// numbers, are written as the strings `NaN`, `Infinity` and `-Infinity`.
#[derive(Debug, Clone, Copy)]
pub struct IrNumber(pub f64);

impl Serialize for IrNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_nan() {
            s.serialize_str("NaN")
        } else if x.is_infinite() {
            s.serialize_str(if x > 0.0 { "Infinity" } else { "-Infinity" })
        } else {
            s.serialize_f64(x)
        }
    }
}

impl<'de> Deserialize<'de> for IrNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(IrNumber(n)),
            Raw::Str(s) => match s.as_str() {
                "NaN" => Ok(IrNumber(f64::NAN)),
                "Infinity" => Ok(IrNumber(f64::INFINITY)),
                "-Infinity" => Ok(IrNumber(f64::NEG_INFINITY)),
                _ => Err(D::Error::custom(format!("expected a number, found \"{s}\""))),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrDocument {
    pub version: u64,
    pub module: String,
    pub views: Vec<IrView>,
    pub variables: Vec<IrVariable>,
    pub constraints: Vec<IrConstraint>,
    pub inequalities: Vec<IrInequality>,
    pub exports: Vec<u32>,
    pub edges: Vec<(u32, u32)>,
    pub scc: Vec<Vec<u32>>,
    pub functions: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct IrView {
    pub id: usize,
    pub name: String,
    pub parent: Option<usize>,
    pub doc_order: usize,
    pub props: IrProps,
}

/// Property name → variable id, always written in declaration order.
#[derive(Debug, Clone, Default)]
pub struct IrProps(pub BTreeMap<String, u32>);

impl Serialize for IrProps {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for p in Property::ALL {
            if let Some(v) = self.0.get(p.name()) {
                map.serialize_entry(p.name(), v)?;
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for IrProps {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        BTreeMap::deserialize(d).map(IrProps)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrVariable {
    pub id: u32,
    pub name: String,
    pub kind: VariableKind,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    pub exported: bool,
    pub default: IrValue,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum IrValue {
    Number(IrNumber),
    Text(String),
}

/// Strings stay strings here: whether `"NaN"` is text or a number depends on
/// the variable's declared type.
impl<'de> Deserialize<'de> for IrValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Num(n) => IrValue::Number(IrNumber(n)),
            Raw::Str(s) => IrValue::Text(s),
        })
    }
}

impl IrValue {
    pub fn from_value(v: &Value) -> IrValue {
        match v {
            Value::Number(n) => IrValue::Number(IrNumber(*n)),
            Value::Text(t) => IrValue::Text(t.clone()),
        }
    }

    fn to_value(&self, ty: ValueType) -> Option<Value> {
        match (self, ty) {
            (IrValue::Number(n), ValueType::Number) => Some(Value::Number(n.0)),
            (IrValue::Text(t), ValueType::Text) => Some(Value::Text(t.clone())),
            (IrValue::Text(t), ValueType::Number) => match t.as_str() {
                "NaN" => Some(Value::Number(f64::NAN)),
                "Infinity" => Some(Value::Number(f64::INFINITY)),
                "-Infinity" => Some(Value::Number(f64::NEG_INFINITY)),
                _ => None,
            },
            (IrValue::Number(_), ValueType::Text) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrConstraint {
    pub target: u32,
    pub expr: Vec<IrInstr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrInequality {
    pub lhs: Vec<IrInstr>,
    pub op: String,
    pub rhs: Vec<IrInstr>,
}

/// One postfix instruction. Exactly one of `num`, `text`, `load`, `op`,
/// `call` is present; `arity` accompanies `call`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrInstr {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num: Option<IrNumber>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub call: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
}

impl IrInstr {
    fn from_instr(i: &Instr) -> IrInstr {
        let mut out = IrInstr::default();
        match i {
            Instr::PushNum(n) => out.num = Some(IrNumber(*n)),
            Instr::PushText(t) => out.text = Some(t.clone()),
            Instr::Load(v) => out.load = Some(v.0),
            Instr::Neg => out.op = Some("neg".into()),
            Instr::Add => out.op = Some("+".into()),
            Instr::Sub => out.op = Some("-".into()),
            Instr::Mul => out.op = Some("*".into()),
            Instr::Div => out.op = Some("/".into()),
            Instr::Call { function, arity } => {
                out.call = Some(*function);
                out.arity = Some(*arity);
            }
        }
        out
    }

    fn to_instr(&self, path: &str) -> Result<Instr, LoadError> {
        let present = [
            self.num.is_some(),
            self.text.is_some(),
            self.load.is_some(),
            self.op.is_some(),
            self.call.is_some(),
        ];
        if present.iter().filter(|p| **p).count() != 1 {
            return Err(schema(
                path,
                "instruction must have exactly one of num, text, load, op, call",
            ));
        }
        if self.arity.is_some() != self.call.is_some() {
            return Err(schema(path, "'arity' goes with 'call' and only with it"));
        }
        Ok(if let Some(n) = self.num {
            Instr::PushNum(n.0)
        } else if let Some(t) = &self.text {
            Instr::PushText(t.clone())
        } else if let Some(v) = self.load {
            Instr::Load(VariableId(v))
        } else if let Some(op) = &self.op {
            match op.as_str() {
                "neg" => Instr::Neg,
                "+" => Instr::Add,
                "-" => Instr::Sub,
                "*" => Instr::Mul,
                "/" => Instr::Div,
                other => return Err(schema(format!("{path}.op"), format!("unknown operator '{other}'"))),
            }
        } else {
            Instr::Call {
                function: self.call.unwrap_or_default(),
                arity: self.arity.unwrap_or_default(),
            }
        })
    }
}

fn ids(v: &[VariableId]) -> Vec<u32> {
    v.iter().map(|id| id.0).collect()
}

impl IrDocument {
    pub fn from_module(m: &CompiledModule) -> IrDocument {
        let postfix = |e: &ExprIR| e.postfix.iter().map(IrInstr::from_instr).collect();
        IrDocument {
            version: IR_VERSION,
            module: m.name.clone(),
            views: m
                .views
                .iter()
                .map(|v| IrView {
                    id: v.id,
                    name: v.name.clone(),
                    parent: v.parent,
                    doc_order: v.doc_order,
                    props: IrProps(
                        Property::ALL
                            .iter()
                            .map(|p| (p.name().to_string(), v.prop(*p).0))
                            .collect(),
                    ),
                })
                .collect(),
            variables: m
                .variables
                .iter()
                .map(|v| IrVariable {
                    id: v.id.0,
                    name: v.name.clone(),
                    kind: v.kind,
                    value_type: v.value_type,
                    exported: v.exported,
                    default: IrValue::from_value(&v.default),
                })
                .collect(),
            constraints: m
                .constraints
                .iter()
                .map(|c| IrConstraint {
                    target: c.target.0,
                    expr: postfix(&c.expr),
                })
                .collect(),
            inequalities: m
                .inequalities
                .iter()
                .map(|g| IrInequality {
                    lhs: postfix(&g.lhs),
                    op: g.op.symbol().to_string(),
                    rhs: postfix(&g.rhs),
                })
                .collect(),
            exports: ids(&m.exports),
            edges: m.edges.iter().map(|(a, b)| (a.0, b.0)).collect(),
            scc: m.scc_order.iter().map(|c| ids(c)).collect(),
            functions: m.functions.names().map(str::to_string).collect(),
        }
    }

    /// Pretty-printed canonical bytes with a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("IR documents always serialize");
        out.push(b'\n');
        out
    }
}

pub fn emit_ir(module: &CompiledModule) -> Vec<u8> {
    IrDocument::from_module(module).to_bytes()
}

/// Parses and validates an IR document. Functions are resolved against
/// `registry`.
pub fn load_ir(bytes: &[u8], registry: &FunctionRegistry) -> Result<CompiledModule, LoadError> {
    #[derive(Deserialize)]
    struct Probe {
        version: Option<serde_json::Value>,
    }
    let probe: Probe = serde_json::from_slice(bytes).map_err(|e| schema("$", e.to_string()))?;
    match probe.version {
        None => return Err(schema("version", "missing field")),
        Some(v) if v.as_u64() == Some(IR_VERSION) => {}
        Some(v) => return Err(LoadError::BadVersion(v.to_string())),
    }
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: IrDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    Rebuild::new(&doc, registry)?.finish()
}

struct Rebuild<'a> {
    doc: &'a IrDocument,
    functions: FunctionTable,
    variables: Vec<VariableInfo>,
}

impl<'a> Rebuild<'a> {
    fn new(doc: &'a IrDocument, registry: &FunctionRegistry) -> Result<Self, LoadError> {
        let mut table = Vec::with_capacity(doc.functions.len());
        for name in &doc.functions {
            let entry = registry
                .get(name)
                .ok_or_else(|| LoadError::UnknownFunction(name.clone()))?;
            table.push(Arc::clone(entry));
        }
        let mut variables = Vec::with_capacity(doc.variables.len());
        for (i, v) in doc.variables.iter().enumerate() {
            let path = format!("variables[{i}]");
            if v.id as usize != i {
                return Err(schema(format!("{path}.id"), format!("expected {i}, found {}", v.id)));
            }
            let default = v
                .default
                .to_value(v.value_type)
                .ok_or_else(|| schema(format!("{path}.default"), format!("not a {} value", v.value_type)))?;
            variables.push(VariableInfo {
                id: VariableId(v.id),
                name: v.name.clone(),
                kind: v.kind,
                value_type: v.value_type,
                writer: None,
                exported: v.exported,
                default,
                property: None,
            });
        }
        for (i, p) in Property::BASE.iter().enumerate() {
            let ok = variables
                .get(i)
                .is_some_and(|v| v.kind == VariableKind::BaseProperty && v.name == format!("base.{}", p.name()));
            if !ok {
                return Err(schema(format!("variables[{i}]"), format!("expected base.{}", p.name())));
            }
        }
        if let Some(i) = variables
            .iter()
            .skip(4)
            .position(|v| v.kind == VariableKind::BaseProperty)
        {
            return Err(schema(
                format!("variables[{}].kind", i + 4),
                "only the first four variables are base",
            ));
        }
        Ok(Rebuild {
            doc,
            functions: FunctionTable(table),
            variables,
        })
    }

    fn var(&self, id: u32, path: &str) -> Result<VariableId, LoadError> {
        if (id as usize) < self.variables.len() {
            Ok(VariableId(id))
        } else {
            Err(schema(path, format!("variable {id} does not exist")))
        }
    }

    fn views(&mut self) -> Result<Vec<ViewInfo>, LoadError> {
        let mut views = Vec::with_capacity(self.doc.views.len());
        for (i, v) in self.doc.views.iter().enumerate() {
            let path = format!("views[{i}]");
            if v.id != i {
                return Err(schema(format!("{path}.id"), format!("expected {i}, found {}", v.id)));
            }
            if v.parent.is_some_and(|p| p >= i) {
                return Err(schema(format!("{path}.parent"), "a parent must precede its children"));
            }
            if let Some(extra) = v.props.0.keys().find(|k| Property::from_name(k).is_none()) {
                return Err(schema(format!("{path}.props.{extra}"), "unknown property"));
            }
            let mut properties = [VariableId(0); 15];
            for p in Property::ALL {
                let pp = format!("{path}.props.{}", p.name());
                let id = *v.props.0.get(p.name()).ok_or_else(|| schema(&pp, "missing property"))?;
                let id = self.var(id, &pp)?;
                let info = &mut self.variables[id.index()];
                let kind = if p.is_input() {
                    VariableKind::BuiltinInput
                } else {
                    VariableKind::ViewProperty
                };
                if info.kind != kind || info.value_type != p.value_type() || info.property.is_some() {
                    return Err(schema(&pp, format!("variable {} cannot hold {}", id.0, p.name())));
                }
                info.property = Some((i, p));
                properties[p.index()] = id;
            }
            views.push(ViewInfo {
                id: i,
                name: v.name.clone(),
                parent: v.parent,
                doc_order: v.doc_order,
                properties,
            });
        }
        if let Some(v) = self
            .variables
            .iter()
            .find(|v| matches!(v.kind, VariableKind::ViewProperty | VariableKind::BuiltinInput) && v.property.is_none())
        {
            return Err(schema(
                format!("variables[{}]", v.id.0),
                "view property not owned by any view",
            ));
        }
        Ok(views)
    }

    /// Converts and type-checks a postfix program; it must leave exactly
    /// one value on the stack.
    fn expr(&self, code: &[IrInstr], path: &str) -> Result<ExprIR, LoadError> {
        let mut postfix = Vec::with_capacity(code.len());
        let mut stack: Vec<ValueType> = Vec::new();
        for (k, raw) in code.iter().enumerate() {
            let ip = format!("{path}[{k}]");
            let instr = raw.to_instr(&ip)?;
            let underflow = || schema(&ip, "stack underflow");
            let number = |t: ValueType| {
                if t == ValueType::Number {
                    Ok(())
                } else {
                    Err(schema(&ip, "operand must be a Number"))
                }
            };
            match &instr {
                Instr::PushNum(_) => stack.push(ValueType::Number),
                Instr::PushText(_) => stack.push(ValueType::Text),
                Instr::Load(v) => {
                    let v = self.var(v.0, &format!("{ip}.load"))?;
                    stack.push(self.variables[v.index()].value_type);
                }
                Instr::Neg => {
                    number(*stack.last().ok_or_else(underflow)?)?;
                }
                Instr::Add | Instr::Sub | Instr::Mul | Instr::Div => {
                    let b = stack.pop().ok_or_else(underflow)?;
                    let a = *stack.last().ok_or_else(underflow)?;
                    number(a)?;
                    number(b)?;
                }
                Instr::Call { function, arity } => {
                    let entry = self
                        .functions
                        .get(*function)
                        .ok_or_else(|| schema(format!("{ip}.call"), format!("no function at index {function}")))?;
                    let at = stack.len().checked_sub(*arity).ok_or_else(underflow)?;
                    let args = stack.split_off(at);
                    entry
                        .signature
                        .check_call(&args)
                        .map_err(|e| schema(&ip, format!("{}: {e}", entry.signature.qualified_name)))?;
                    stack.push(entry.signature.return_type);
                }
            }
            postfix.push(instr);
        }
        match stack[..] {
            [ty] => Ok(ExprIR {
                postfix,
                result_type: ty,
            }),
            _ => Err(schema(
                path,
                format!("expression leaves {} values on the stack", stack.len()),
            )),
        }
    }

    fn finish(mut self) -> Result<CompiledModule, LoadError> {
        let doc = self.doc;
        let views = self.views()?;

        let mut constraints = Vec::with_capacity(doc.constraints.len());
        for (ci, c) in doc.constraints.iter().enumerate() {
            let path = format!("constraints[{ci}]");
            let target = self.var(c.target, &format!("{path}.target"))?;
            let expr = self.expr(&c.expr, &format!("{path}.expr"))?;
            let info = &mut self.variables[target.index()];
            if !matches!(info.kind, VariableKind::ViewProperty | VariableKind::FreeVariable) {
                return Err(schema(
                    format!("{path}.target"),
                    format!("'{}' is read-only", info.name),
                ));
            }
            if info.writer.is_some() {
                return Err(schema(
                    format!("{path}.target"),
                    format!("'{}' has two writers", info.name),
                ));
            }
            if info.value_type != expr.result_type {
                return Err(schema(
                    format!("{path}.expr"),
                    format!(
                        "'{}' is {} but the expression is {}",
                        info.name, info.value_type, expr.result_type
                    ),
                ));
            }
            info.writer = Some(ci);
            constraints.push(Constraint { target, expr });
        }

        let mut inequalities = Vec::with_capacity(doc.inequalities.len());
        for (gi, g) in doc.inequalities.iter().enumerate() {
            let path = format!("inequalities[{gi}]");
            let op = RelOp::from_symbol(&g.op)
                .ok_or_else(|| schema(format!("{path}.op"), format!("unknown relation '{}'", g.op)))?;
            let lhs = self.expr(&g.lhs, &format!("{path}.lhs"))?;
            let rhs = self.expr(&g.rhs, &format!("{path}.rhs"))?;
            for (side, e) in [("lhs", &lhs), ("rhs", &rhs)] {
                if e.result_type != ValueType::Number {
                    return Err(schema(format!("{path}.{side}"), "guards compare Numbers"));
                }
            }
            inequalities.push(Inequality { lhs, op, rhs });
        }

        let mut exports = Vec::with_capacity(doc.exports.len());
        let mut seen = HashSet::new();
        for (k, &e) in doc.exports.iter().enumerate() {
            let path = format!("exports[{k}]");
            let id = self.var(e, &path)?;
            if self.variables[id.index()].kind != VariableKind::FreeVariable || !seen.insert(id) {
                return Err(schema(path, format!("variable {e} cannot be exported here")));
            }
            exports.push(id);
        }
        if let Some(v) = self.variables.iter().find(|v| v.exported != seen.contains(&v.id)) {
            return Err(schema(
                format!("variables[{}].exported", v.id.0),
                "disagrees with the export list",
            ));
        }

        let edges = derive_edges(&constraints);
        let stored: Vec<_> = doc.edges.iter().map(|&(a, b)| (VariableId(a), VariableId(b))).collect();
        if stored != edges {
            return Err(LoadError::GraphMismatch(format!(
                "stored edges {:?} differ from the constraint load sets {:?}",
                doc.edges,
                edges.iter().map(|(a, b)| (a.0, b.0)).collect::<Vec<_>>()
            )));
        }
        let variables = self.variables;
        let scc_order = build_scc_order(&edges, variables.len(), |v| variables[v.index()].writer);
        let stored: Vec<Vec<VariableId>> = doc
            .scc
            .iter()
            .map(|c| c.iter().map(|&v| VariableId(v)).collect())
            .collect();
        if stored != scc_order {
            return Err(LoadError::GraphMismatch(
                "stored component order differs from the recomputed one".into(),
            ));
        }

        Ok(CompiledModule {
            name: doc.module.clone(),
            variables,
            views,
            constraints,
            inequalities,
            exports,
            edges,
            scc_order,
            functions: self.functions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile_str;

    fn compile(src: &str) -> CompiledModule {
        let c = compile_str(src, "t.cgui", &FunctionRegistry::with_builtins());
        assert!(!c.has_errors(), "{:?}", c.diagnostics);
        c.module.unwrap()
    }

    fn json(m: &CompiledModule) -> serde_json::Value {
        serde_json::from_slice(&emit_ir(m)).unwrap()
    }

    const DIALOG: &str = "@gui\n  dialog{ ok cancel }\n@constraints\n  dialog.W << base.W\n  dialog.H << base.H\n";
    const MIXED: &str = "@gui\n a{ b }\n@constraints\n b.X << Math.min(Math.max(lo, 0), a.W) - -1.5\n \
        b.Text << Str.concat(\"v=\", Str.num(lo, 2))\n a.W << base.W / 2\n lo <= a.W\n@export lo\n";

    #[test]
    fn dialog_constraints_load_base_properties() {
        let m = compile(DIALOG);
        let doc = json(&m);
        let cs = doc["constraints"].as_array().unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0]["expr"], serde_json::json!([{ "load": 2 }]));
        assert_eq!(cs[1]["expr"], serde_json::json!([{ "load": 3 }]));
        assert_eq!(cs[0]["target"], m.variable_by_name("dialog.W").unwrap().0);
    }

    #[test]
    fn top_level_key_order() {
        let text = String::from_utf8(emit_ir(&compile(DIALOG))).unwrap();
        let keys = [
            "version",
            "module",
            "views",
            "variables",
            "constraints",
            "inequalities",
            "exports",
            "edges",
            "scc",
            "functions",
        ];
        let positions: Vec<_> = keys
            .iter()
            .map(|k| text.find(&format!("\n  \"{k}\"")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
        assert!(text.starts_with("{\n  \"version\": 1,"));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn view_props_follow_property_order() {
        let text = String::from_utf8(emit_ir(&compile("@gui\n v\n"))).unwrap();
        let names: Vec<_> = Property::ALL
            .iter()
            .map(|p| text.find(&format!("\"{}\":", p.name())).unwrap())
            .collect();
        assert!(names.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn minimal_module() {
        let m = compile("@gui\n v\n");
        let doc = json(&m);
        assert_eq!(doc["version"], 1);
        assert_eq!(doc["views"].as_array().unwrap().len(), 1);
        assert_eq!(doc["variables"].as_array().unwrap().len(), 19);
        assert_eq!(load_ir(&emit_ir(&m), &FunctionRegistry::with_builtins()).unwrap(), m);
    }

    #[test]
    fn round_trip_is_structural_and_byte_identical() {
        let reg = FunctionRegistry::with_builtins();
        for src in [
            DIALOG,
            MIXED,
            "@gui\n v\n@constraints\n a << b + 1\n b << a * 2 + u\n@export u\n",
        ] {
            let m = compile(src);
            let bytes = emit_ir(&m);
            let loaded = load_ir(&bytes, &reg).unwrap();
            assert_eq!(loaded, m);
            assert_eq!(emit_ir(&loaded), bytes);
        }
    }

    #[test]
    fn non_finite_and_signed_zero_literals_survive() {
        let reg = FunctionRegistry::with_builtins();
        let mut m = compile("@gui\n v\n@constraints\n v.X << 1 + x\n@export x\n");
        m.constraints[0].expr.postfix[0] = Instr::PushNum(f64::INFINITY);
        m.variables[m.exports[0].index()].default = Value::Number(-0.0);
        m.variables[m.views[0].prop(Property::Text).index()].default = Value::Text("NaN".into());
        let loaded = load_ir(&emit_ir(&m), &reg).unwrap();
        assert_eq!(loaded.constraints[0].expr.postfix[0], Instr::PushNum(f64::INFINITY));
        assert!(loaded.variables[m.exports[0].index()]
            .default
            .same(&Value::Number(-0.0)));
        assert_eq!(
            loaded.variables[m.views[0].prop(Property::Text).index()].default,
            Value::Text("NaN".into())
        );
        m.constraints[0].expr.postfix[0] = Instr::PushNum(f64::NAN);
        let text = String::from_utf8(emit_ir(&m)).unwrap();
        assert!(text.contains("\"num\": \"NaN\""));
        let loaded = load_ir(text.as_bytes(), &reg).unwrap();
        assert!(matches!(loaded.constraints[0].expr.postfix[0], Instr::PushNum(n) if n.is_nan()));
    }

    fn tampered(src: &str, edit: impl FnOnce(&mut serde_json::Value)) -> LoadError {
        let mut doc = json(&compile(src));
        edit(&mut doc);
        load_ir(doc.to_string().as_bytes(), &FunctionRegistry::with_builtins()).unwrap_err()
    }

    #[test]
    fn removed_edge_is_graph_mismatch() {
        let err = tampered(DIALOG, |d| {
            d["edges"].as_array_mut().unwrap().pop();
        });
        assert!(matches!(err, LoadError::GraphMismatch(_)), "{err}");
        let err = tampered(MIXED, |d| {
            d["scc"].as_array_mut().unwrap().reverse();
        });
        assert!(matches!(err, LoadError::GraphMismatch(_)), "{err}");
    }

    #[test]
    fn version_checks() {
        let err = tampered(DIALOG, |d| d["version"] = 99.into());
        assert_eq!(err, LoadError::BadVersion("99".into()));
        let err = tampered(DIALOG, |d| {
            d.as_object_mut().unwrap().remove("version");
        });
        assert!(matches!(err, LoadError::SchemaError { ref path, .. } if path == "version"));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let path_of = |e: LoadError| match e {
            LoadError::SchemaError { path, .. } => path,
            other => panic!("{other}"),
        };
        let e = tampered(DIALOG, |d| d["variables"][5]["type"] = "Colour".into());
        assert_eq!(path_of(e), "variables[5].type");
        let e = tampered(DIALOG, |d| d["constraints"][0]["expr"][0]["op"] = "+".into());
        assert_eq!(path_of(e), "constraints[0].expr[0]");
        let e = tampered(DIALOG, |d| {
            d["constraints"][0]["expr"] = serde_json::json!([{ "op": "+" }])
        });
        assert_eq!(path_of(e), "constraints[0].expr[0]");
        let e = tampered(DIALOG, |d| d["constraints"][0]["target"] = 1.into());
        assert_eq!(path_of(e), "constraints[0].target");
        let e = tampered(MIXED, |d| {
            d["views"][0]["props"].as_object_mut().unwrap().remove("Rot");
        });
        assert_eq!(path_of(e), "views[0].props.Rot");
        let e = tampered(MIXED, |d| d["exports"] = serde_json::json!([]));
        assert!(path_of(e).ends_with(".exported"));
        let e = tampered(DIALOG, |d| d["extra"] = 1.into());
        assert!(matches!(e, LoadError::SchemaError { .. }));
        assert!(matches!(
            load_ir(b"not json", &FunctionRegistry::with_builtins()),
            Err(LoadError::SchemaError { .. })
        ));
    }

    #[test]
    fn ill_typed_code_is_rejected() {
        // Str.concat result stored into a Number target
        let e = tampered(MIXED, |d| {
            let (a, b) = (
                d["constraints"][0]["target"].clone(),
                d["constraints"][1]["target"].clone(),
            );
            d["constraints"][0]["target"] = b;
            d["constraints"][1]["target"] = a;
        });
        assert!(
            matches!(e, LoadError::SchemaError { ref message, .. } if message.contains("expression is")),
            "{e}"
        );
        let e = tampered(DIALOG, |d| {
            d["constraints"][0]["expr"] = serde_json::json!([{ "text": "a" }, { "op": "neg" }]);
        });
        assert!(
            matches!(e, LoadError::SchemaError { ref message, .. } if message.contains("Number")),
            "{e}"
        );
    }

    #[test]
    fn functions_must_exist() {
        let bytes = emit_ir(&compile(MIXED));
        let err = load_ir(&bytes, &FunctionRegistry::empty()).unwrap_err();
        assert!(matches!(err, LoadError::UnknownFunction(_)), "{err}");
    }
}
