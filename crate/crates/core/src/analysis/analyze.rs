//! Name binding, type checking, conflict detection and lowering of a
//! flattened module.

use std::collections::HashMap;
use std::sync::Arc;

use crate::diagnostic::{has_errors, Diagnostic, DiagnosticCode, SourceSpan};
use crate::functions::{CallError, FunctionRegistry};
use crate::syntax::{BinOp, Expr, ExprKind, PropertyPath, RESERVED_NAMESPACES};
use crate::value::{Value, ValueType};

use super::imports::FlatModule;
use super::model::*;
use super::scc::build_scc_order;

const RESERVED_VIEW_NAMES: [&str; 3] = ["base", RESERVED_NAMESPACES[0], RESERVED_NAMESPACES[1]];

/// Analyzes a flattened module. The module is `None` iff an error was
/// reported; warnings may accompany a successful result.
pub fn analyze(flat: &FlatModule, registry: &FunctionRegistry) -> (Option<CompiledModule>, Vec<Diagnostic>) {
    let mut a = Analyzer {
        registry,
        diags: Vec::new(),
        variables: Vec::new(),
        by_name: HashMap::new(),
        view_names: HashMap::new(),
        free_types: HashMap::new(),
        functions: Vec::new(),
        function_index: HashMap::new(),
    };
    let views = a.declare_views(flat);
    a.declare_free(flat);

    // Bind constraint targets and detect conflicting writers.
    let mut targets: Vec<Option<VariableId>> = Vec::with_capacity(flat.constraints.len());
    let mut first_writer: HashMap<VariableId, usize> = HashMap::new();
    for (ci, c) in flat.constraints.iter().enumerate() {
        let target = a.resolve(&c.target);
        if let Some(t) = target {
            let info = &a.variables[t.index()];
            if matches!(info.kind, VariableKind::BaseProperty | VariableKind::BuiltinInput) {
                a.diags.push(Diagnostic::error(
                    DiagnosticCode::WriteToReadOnly,
                    c.target.span.clone(),
                    format!("'{}' is read-only and cannot be a '<<' target", info.name),
                ));
            } else if let Some(&first) = first_writer.get(&t) {
                let name = info.name.clone();
                a.diags.push(
                    Diagnostic::error(
                        DiagnosticCode::ConflictingWriters,
                        c.span.clone(),
                        format!("variable '{name}' has multiple '<<' writers"),
                    )
                    .with_note(flat.constraints[first].span.clone(), "first written here"),
                );
            } else {
                first_writer.insert(t, ci);
                a.variables[t.index()].writer = Some(ci);
            }
        }
        targets.push(target);
    }

    a.infer_free_types(flat);

    // Type-check and lower.
    let mut constraints = Vec::new();
    for (c, target) in flat.constraints.iter().zip(&targets) {
        let expr = a.lower(&c.expr);
        if let (Some(t), Some(expr)) = (target, expr) {
            let info = &a.variables[t.index()];
            if info.value_type != expr.result_type {
                a.diags.push(Diagnostic::error(
                    DiagnosticCode::TypeMismatch,
                    c.expr.span.clone(),
                    format!(
                        "cannot assign {} to {} variable '{}'",
                        expr.result_type, info.value_type, info.name
                    ),
                ));
            }
            constraints.push(Constraint { target: *t, expr });
        }
    }
    let mut inequalities = Vec::new();
    for i in &flat.inequalities {
        let lhs = a.lower(&i.lhs);
        let rhs = a.lower(&i.rhs);
        for (side, e) in [(&lhs, &i.lhs), (&rhs, &i.rhs)] {
            if let Some(ir) = side {
                if ir.result_type != ValueType::Number {
                    a.diags.push(Diagnostic::error(
                        DiagnosticCode::TypeMismatch,
                        e.span.clone(),
                        format!(
                            "operands of '{}' must be Number, found {}",
                            i.op.symbol(),
                            ir.result_type
                        ),
                    ));
                }
            }
        }
        if let (Some(lhs), Some(rhs)) = (lhs, rhs) {
            inequalities.push(Inequality { lhs, op: i.op, rhs });
        }
    }

    let exports = a.bind_exports(flat);
    a.warn_unused(flat, &constraints, &inequalities);

    if has_errors(&a.diags) {
        return (None, a.diags);
    }

    let edges = derive_edges(&constraints);
    let n = a.variables.len();
    let scc_order = build_scc_order(&edges, n, |v| a.variables[v.index()].writer);
    for comp in &scc_order {
        let self_loop = comp.len() == 1 && edges.binary_search(&(comp[0], comp[0])).is_ok();
        if comp.len() > 1 || self_loop {
            let names: Vec<_> = comp.iter().map(|v| a.variables[v.index()].name.as_str()).collect();
            let first = comp.iter().filter_map(|v| a.variables[v.index()].writer).min();
            let span = first.map_or_else(|| flat_span(flat), |ci| flat.constraints[ci].span.clone());
            a.diags.push(Diagnostic::warning(
                DiagnosticCode::ConstraintCycle,
                span,
                format!("constraint cycle among {}", names.join(", ")),
            ));
        }
    }

    let module = CompiledModule {
        name: flat.name.clone(),
        variables: a.variables,
        views,
        constraints,
        inequalities,
        exports,
        edges,
        scc_order,
        functions: FunctionTable(a.functions),
    };
    (Some(module), a.diags)
}

fn flat_span(flat: &FlatModule) -> SourceSpan {
    flat.views
        .first()
        .map(|v| v.span.clone())
        .unwrap_or_else(|| SourceSpan::new(format!("{}.cgui", flat.name), (1, 1), (1, 1)))
}

struct Analyzer<'r> {
    registry: &'r FunctionRegistry,
    diags: Vec<Diagnostic>,
    variables: Vec<VariableInfo>,
    by_name: HashMap<String, VariableId>,
    view_names: HashMap<String, usize>,
    /// Free variables whose type is not yet inferred map to `None`.
    free_types: HashMap<VariableId, Option<ValueType>>,
    functions: Vec<Arc<crate::functions::FunctionEntry>>,
    function_index: HashMap<String, usize>,
}

impl Analyzer<'_> {
    fn push_var(
        &mut self,
        name: String,
        kind: VariableKind,
        value_type: ValueType,
        default: Value,
        property: Option<(usize, Property)>,
    ) -> VariableId {
        let id = VariableId(self.variables.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.variables.push(VariableInfo {
            id,
            name,
            kind,
            value_type,
            writer: None,
            exported: false,
            default,
            property,
        });
        id
    }

    fn declare_views(&mut self, flat: &FlatModule) -> Vec<ViewInfo> {
        for p in Property::BASE {
            self.push_var(
                format!("base.{}", p.name()),
                VariableKind::BaseProperty,
                ValueType::Number,
                Value::Number(0.0),
                None,
            );
        }
        let mut views = Vec::with_capacity(flat.views.len());
        for (i, v) in flat.views.iter().enumerate() {
            let local = v.name.rsplit('.').next().unwrap_or(&v.name);
            if RESERVED_VIEW_NAMES.contains(&local) {
                self.diags.push(Diagnostic::error(
                    DiagnosticCode::NameClash,
                    v.span.clone(),
                    format!("'{local}' is reserved and cannot name a view"),
                ));
            }
            if let Some(&prev) = self.view_names.get(&v.name) {
                self.diags.push(
                    Diagnostic::error(
                        DiagnosticCode::DuplicateView,
                        v.span.clone(),
                        format!("view '{}' is declared more than once", v.name),
                    )
                    .with_note(flat.views[prev].span.clone(), "previous declaration"),
                );
            } else {
                self.view_names.insert(v.name.clone(), i);
            }
            let properties = Property::ALL.map(|p| {
                let kind = if p.is_input() {
                    VariableKind::BuiltinInput
                } else {
                    VariableKind::ViewProperty
                };
                self.push_var(
                    format!("{}.{}", v.name, p.name()),
                    kind,
                    p.value_type(),
                    p.default_value(),
                    Some((i, p)),
                )
            });
            views.push(ViewInfo {
                id: i,
                name: v.name.clone(),
                parent: v.parent,
                doc_order: i,
                properties,
            });
        }
        views
    }

    fn declare_free(&mut self, flat: &FlatModule) {
        for (name, span) in &flat.free_variables {
            if self.view_names.contains_key(name) || self.by_name.contains_key(name) {
                self.diags.push(Diagnostic::error(
                    DiagnosticCode::NameClash,
                    span.clone(),
                    format!("variable '{name}' clashes with a view or property of the same name"),
                ));
                continue;
            }
            let id = self.push_var(
                name.clone(),
                VariableKind::FreeVariable,
                ValueType::Number,
                Value::Number(0.0),
                None,
            );
            self.free_types.insert(id, None);
        }
    }

    fn resolve(&mut self, path: &PropertyPath) -> Option<VariableId> {
        let dotted = path.dotted();
        if let Some(&id) = self.by_name.get(&dotted) {
            return Some(id);
        }
        // Free variables of the right name were pre-declared; a miss here on
        // a 1-segment path means it clashed and was already reported.
        if path.segments.len() == 1 {
            return None;
        }
        let (prop, owner) = path.segments.split_last().expect("paths are non-empty");
        let owner = owner.join(".");
        let diag = if owner == "base" {
            Diagnostic::error(
                DiagnosticCode::UnknownProperty,
                path.span.clone(),
                format!("'base' has no property '{prop}' (only X, Y, W, H)"),
            )
        } else if self.view_names.contains_key(&owner) {
            Diagnostic::error(
                DiagnosticCode::UnknownProperty,
                path.span.clone(),
                format!("view '{owner}' has no property '{prop}'"),
            )
        } else {
            Diagnostic::error(
                DiagnosticCode::UnknownView,
                path.span.clone(),
                format!("unknown view '{owner}' in '{dotted}'"),
            )
        };
        self.diags.push(diag);
        None
    }

    /// Looks a path up without reporting; used during inference.
    fn peek(&self, path: &PropertyPath) -> Option<VariableId> {
        self.by_name.get(&path.dotted()).copied()
    }

    /// Best-effort type of an expression with free-variable types so far.
    fn guess(&self, e: &Expr) -> Option<ValueType> {
        match &e.kind {
            ExprKind::Number(_) | ExprKind::Neg(_) | ExprKind::Binary(..) => Some(ValueType::Number),
            ExprKind::Text(_) => Some(ValueType::Text),
            ExprKind::Ref(p) => {
                let id = self.peek(p)?;
                match self.free_types.get(&id) {
                    Some(t) => *t,
                    None => Some(self.variables[id.index()].value_type),
                }
            }
            ExprKind::Call { namespace, name, .. } => self
                .registry
                .get(&format!("{namespace}.{name}"))
                .map(|f| f.signature.return_type),
        }
    }

    /// Propagates types from writer expressions to free variables until
    /// nothing changes; variables left undetermined are Number.
    fn infer_free_types(&mut self, flat: &FlatModule) {
        loop {
            let mut progress = false;
            let pending: Vec<VariableId> = self
                .free_types
                .iter()
                .filter(|(_, t)| t.is_none())
                .map(|(id, _)| *id)
                .collect();
            for id in pending {
                let Some(ci) = self.variables[id.index()].writer else {
                    continue;
                };
                if let Some(ty) = self.guess(&flat.constraints[ci].expr) {
                    self.free_types.insert(id, Some(ty));
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        for (id, ty) in &self.free_types {
            let ty = ty.unwrap_or(ValueType::Number);
            let v = &mut self.variables[id.index()];
            v.value_type = ty;
            v.default = Value::default_for(ty);
        }
    }

    fn function_id(&mut self, name: &str) -> usize {
        if let Some(&i) = self.function_index.get(name) {
            return i;
        }
        let i = self.functions.len();
        self.functions
            .push(self.registry.get(name).expect("checked by caller").clone());
        self.function_index.insert(name.to_string(), i);
        i
    }

    fn lower(&mut self, e: &Expr) -> Option<ExprIR> {
        let mut postfix = Vec::new();
        let result_type = self.emit(e, &mut postfix)?;
        Some(ExprIR { postfix, result_type })
    }

    fn expect_number(&mut self, ty: ValueType, e: &Expr, what: &str) -> Option<()> {
        if ty == ValueType::Number {
            Some(())
        } else {
            self.diags.push(Diagnostic::error(
                DiagnosticCode::TypeMismatch,
                e.span.clone(),
                format!("operand of {what} must be Number, found {ty}"),
            ));
            None
        }
    }

    /// Emits postfix code; returns the type, or `None` after reporting.
    fn emit(&mut self, e: &Expr, out: &mut Vec<Instr>) -> Option<ValueType> {
        match &e.kind {
            ExprKind::Number(n) => {
                out.push(Instr::PushNum(*n));
                Some(ValueType::Number)
            }
            ExprKind::Text(t) => {
                out.push(Instr::PushText(t.clone()));
                Some(ValueType::Text)
            }
            ExprKind::Ref(p) => {
                let id = self.resolve(p)?;
                out.push(Instr::Load(id));
                Some(self.variables[id.index()].value_type)
            }
            ExprKind::Neg(inner) => {
                let ty = self.emit(inner, out)?;
                self.expect_number(ty, inner, "unary '-'")?;
                out.push(Instr::Neg);
                Some(ValueType::Number)
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.emit(l, out);
                let rt = self.emit(r, out);
                let what = format!("'{}'", op.symbol());
                let lok = lt.and_then(|t| self.expect_number(t, l, &what));
                let rok = rt.and_then(|t| self.expect_number(t, r, &what));
                lok?;
                rok?;
                out.push(match op {
                    BinOp::Add => Instr::Add,
                    BinOp::Sub => Instr::Sub,
                    BinOp::Mul => Instr::Mul,
                    BinOp::Div => Instr::Div,
                });
                Some(ValueType::Number)
            }
            ExprKind::Call { namespace, name, args } => {
                let qualified = format!("{namespace}.{name}");
                let mut types = Vec::with_capacity(args.len());
                let mut ok = true;
                for a in args {
                    match self.emit(a, out) {
                        Some(t) => types.push(t),
                        None => ok = false,
                    }
                }
                let Some(entry) = self.registry.get(&qualified) else {
                    self.diags.push(Diagnostic::error(
                        DiagnosticCode::UnknownFunction,
                        e.span.clone(),
                        format!("unknown function '{qualified}'"),
                    ));
                    return None;
                };
                let ret = entry.signature.return_type;
                if !ok {
                    return None;
                }
                match entry.signature.check_call(&types) {
                    Ok(()) => {}
                    Err(err @ CallError::Arity { .. }) => {
                        self.diags.push(Diagnostic::error(
                            DiagnosticCode::ArityMismatch,
                            e.span.clone(),
                            format!("{qualified}: {err}"),
                        ));
                        return None;
                    }
                    Err(err @ CallError::Type { index, .. }) => {
                        self.diags.push(Diagnostic::error(
                            DiagnosticCode::TypeMismatch,
                            args[index].span.clone(),
                            format!("{qualified}: {err}"),
                        ));
                        return None;
                    }
                }
                let function = self.function_id(&qualified);
                out.push(Instr::Call {
                    function,
                    arity: args.len(),
                });
                Some(ret)
            }
        }
    }

    fn bind_exports(&mut self, flat: &FlatModule) -> Vec<VariableId> {
        let mut exports = Vec::new();
        for e in &flat.exports {
            if self.view_names.contains_key(&e.name) {
                self.diags.push(Diagnostic::error(
                    DiagnosticCode::ExportOfViewProperty,
                    e.span.clone(),
                    format!("'{}' is a view; only variables can be exported", e.name),
                ));
                continue;
            }
            match self.by_name.get(&e.name) {
                Some(&id) if self.variables[id.index()].kind == VariableKind::FreeVariable => {
                    if !self.variables[id.index()].exported {
                        self.variables[id.index()].exported = true;
                        exports.push(id);
                    }
                }
                _ => self.diags.push(Diagnostic::error(
                    DiagnosticCode::ExportUnknownVariable,
                    e.span.clone(),
                    format!("exported variable '{}' is not used by any constraint", e.name),
                )),
            }
        }
        exports
    }

    fn warn_unused(&mut self, flat: &FlatModule, constraints: &[Constraint], inequalities: &[Inequality]) {
        let mut read = vec![false; self.variables.len()];
        for v in constraints
            .iter()
            .flat_map(|c| c.expr.loads())
            .chain(inequalities.iter().flat_map(Inequality::loads))
        {
            read[v.index()] = true;
        }
        for (name, span) in &flat.free_variables {
            let Some(&id) = self.by_name.get(name) else { continue };
            let v = &self.variables[id.index()];
            if v.kind == VariableKind::FreeVariable
                && read[id.index()]
                && v.writer.is_none()
                && !v.exported
                && !flat.nested_exports.contains(name)
            {
                self.diags.push(Diagnostic::warning(
                    DiagnosticCode::UnusedVariable,
                    span.clone(),
                    format!("variable '{name}' is read but never written or exported (typo?)"),
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::imports::{resolve_imports, MapLoader};
    use crate::syntax::parse_source;

    fn compile(src: &str) -> (Option<CompiledModule>, Vec<Diagnostic>) {
        let (ast, d) = parse_source(src, "a.cgui");
        assert!(d.is_empty(), "{d:?}");
        let flat = resolve_imports(&ast, &mut MapLoader::default()).unwrap();
        analyze(&flat, &FunctionRegistry::with_builtins())
    }

    fn ok(src: &str) -> CompiledModule {
        let (m, d) = compile(src);
        assert!(!has_errors(&d), "{d:#?}");
        m.unwrap()
    }

    fn codes(src: &str) -> Vec<DiagnosticCode> {
        compile(src).1.iter().map(|d| d.code).collect()
    }

    const DIALOG: &str = "@gui\n  // GUI structure\n  dialog{ ok cancel }\n@constraints\n  // Property relationships\n  dialog.W << base.W\n  dialog.H << base.H\n";

    #[test]
    fn dialog_analyzes_cleanly() {
        let (m, d) = compile(DIALOG);
        assert!(d.is_empty(), "{d:?}");
        let m = m.unwrap();
        let names: Vec<_> = m.views.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["dialog", "ok", "cancel"]);
        assert_eq!(m.views[1].parent, Some(0));
        assert_eq!(m.constraints.len(), 2);
        let edge_names: Vec<_> = m
            .edges
            .iter()
            .map(|(a, b)| (m.variable(*a).name.as_str(), m.variable(*b).name.as_str()))
            .collect();
        assert_eq!(edge_names, [("base.W", "dialog.W"), ("base.H", "dialog.H")]);
        assert_eq!(m.variables.len(), 4 + 3 * 15);
    }

    #[test]
    fn two_writers_conflict() {
        let (m, d) = compile("@gui\n v\n@constraints\n x << 1\n x << 2\n");
        assert!(m.is_none());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::ConflictingWriters);
        assert_eq!(d[0].message, "variable 'x' has multiple '<<' writers");
        assert_eq!(d[0].span.start_line, 5);
        assert_eq!(d[0].notes[0].0.start_line, 4);
    }

    #[test]
    fn conflict_location_matches_format() {
        let src = "@gui\n  dialog{ ok cancel }\n@constraints\n  dialog.W << base.W\n  dialog.W << 100\n";
        let (_, d) = compile(src);
        assert_eq!(d.len(), 1);
        assert_eq!(
            d[0].to_string(),
            "a.cgui:5:3: error: variable 'dialog.W' has multiple '<<' writers"
        );
    }

    #[test]
    fn three_writers_two_diagnostics() {
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << 1\n v.X << 2\n v.X << 3\n"),
            [DiagnosticCode::ConflictingWriters, DiagnosticCode::ConflictingWriters]
        );
    }

    #[test]
    fn two_cycle_is_one_component() {
        let (m, d) = compile("@gui\n v\n@constraints\n a << b + 1\n b << a * 2\n v.X << a\n");
        let m = m.unwrap();
        assert_eq!(
            d.iter().map(|d| d.code).collect::<Vec<_>>(),
            [DiagnosticCode::ConstraintCycle]
        );
        let a = m.variable_by_name("a").unwrap();
        let b = m.variable_by_name("b").unwrap();
        assert!(m.scc_order.contains(&vec![a, b]));
        assert!(m.has_cycles());
    }

    #[test]
    fn read_only_targets() {
        assert_eq!(
            codes("@gui\n v\n@constraints\n base.W << 3\n"),
            [DiagnosticCode::WriteToReadOnly]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.DragX << 3\n"),
            [DiagnosticCode::WriteToReadOnly]
        );
    }

    #[test]
    fn unknown_names() {
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.Q << 3\n"),
            [DiagnosticCode::UnknownProperty]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n w.X << 3\n"),
            [DiagnosticCode::UnknownView]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << base.Rot\n"),
            [DiagnosticCode::UnknownProperty]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << Math.nope(1)\n"),
            [DiagnosticCode::UnknownFunction]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << Math.min(1)\n"),
            [DiagnosticCode::ArityMismatch]
        );
    }

    #[test]
    fn types() {
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << \"a\"\n"),
            [DiagnosticCode::TypeMismatch]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << v.Fill + 1\n"),
            [DiagnosticCode::TypeMismatch]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.Fill < 3\n"),
            [DiagnosticCode::TypeMismatch]
        );
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << Math.abs(v.Text)\n"),
            [DiagnosticCode::TypeMismatch]
        );
        let m = ok("@gui\n v\n@constraints\n v.Text << label\n label << Str.concat(\"n=\", n)\n n << v.W\n");
        let label = m.variable_by_name("label").unwrap();
        assert_eq!(m.variable(label).value_type, ValueType::Text);
        assert_eq!(m.variable(label).default, Value::from(""));
        // inferred through a chain of free variables declared out of order
        let m = ok("@gui\n v\n@constraints\n v.Text << b\n b << a\n a << \"x\"\n");
        let b = m.variable_by_name("b").unwrap();
        assert_eq!(m.variable(b).value_type, ValueType::Text);
    }

    #[test]
    fn exports() {
        let m = ok("@gui\n v\n@constraints\n v.X << lo\n@export lo, lo\n");
        assert_eq!(m.exports.len(), 1);
        assert!(m.variable(m.exports[0]).exported);
        assert_eq!(codes("@gui\n v\n@export v\n"), [DiagnosticCode::ExportOfViewProperty]);
        assert_eq!(
            codes("@gui\n v\n@export nope\n"),
            [DiagnosticCode::ExportUnknownVariable]
        );
    }

    #[test]
    fn unused_warning_and_name_clash() {
        let (m, d) = compile("@gui\n v\n@constraints\n v.X << typo\n");
        assert!(m.is_some());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::UnusedVariable);
        assert!(!d[0].is_error());
        assert_eq!(
            codes("@gui\n v\n@constraints\n v.X << 1\n v << 2\n"),
            [DiagnosticCode::NameClash]
        );
        assert_eq!(codes("@gui\n base\n"), [DiagnosticCode::NameClash]);
        assert_eq!(codes("@gui\n a { v }\n b { v }\n"), [DiagnosticCode::DuplicateView]);
    }

    #[test]
    fn lowering_is_postfix() {
        let m = ok("@gui\n v\n@constraints\n v.X << -(v.W - 2) * Math.max(1, v.H)\n");
        let w = m.variable_by_name("v.W").unwrap();
        let h = m.variable_by_name("v.H").unwrap();
        assert_eq!(
            m.constraints[0].expr.postfix,
            vec![
                Instr::Load(w),
                Instr::PushNum(2.0),
                Instr::Sub,
                Instr::Neg,
                Instr::PushNum(1.0),
                Instr::Load(h),
                Instr::Call { function: 0, arity: 2 },
                Instr::Mul,
            ]
        );
        assert_eq!(m.constraints[0].expr.stack_effect(), Some(1));
        assert_eq!(m.functions.names().collect::<Vec<_>>(), ["Math.max"]);
    }

    #[test]
    fn registered_function_is_callable() {
        use crate::functions::{FunctionSignature, ParamType};
        let mut reg = FunctionRegistry::with_builtins();
        reg.register(
            FunctionSignature::fixed("Math.clamp", &[ParamType::Number; 3], ValueType::Number),
            Arc::new(|a: &[Value]| {
                let (x, lo, hi) = (
                    a[0].as_number().unwrap(),
                    a[1].as_number().unwrap(),
                    a[2].as_number().unwrap(),
                );
                Value::Number(x.max(lo).min(hi))
            }),
        )
        .unwrap();
        let (ast, _) = parse_source("@gui\n v\n@constraints\n v.X << Math.clamp(v.W, 0, 10)\n", "a.cgui");
        let flat = resolve_imports(&ast, &mut MapLoader::default()).unwrap();
        let (m, d) = analyze(&flat, &reg);
        assert!(d.is_empty());
        assert_eq!(m.unwrap().functions.names().collect::<Vec<_>>(), ["Math.clamp"]);
        let (m, d) = analyze(&flat, &FunctionRegistry::with_builtins());
        assert!(m.is_none());
        assert_eq!(d[0].code, DiagnosticCode::UnknownFunction);
    }
}
