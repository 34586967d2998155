//! Import resolution: expands every `name:Module` instance into a prefixed
//! copy of that module's views and statements.

use std::collections::{HashMap, HashSet};

use crate::diagnostic::{has_errors, Diagnostic, DiagnosticCode, SourceSpan};
use crate::syntax::{AstModule, ConstraintStmt, Export, InequalityStmt, PropertyPath, ViewDecl};

/// Supplies parsed modules by name.
pub trait ModuleLoader {
    /// Returns the parse of `name` and its diagnostics, or `None` if no such
    /// module can be found.
    fn load(&mut self, name: &str) -> Option<(AstModule, Vec<Diagnostic>)>;
}

/// An in-memory loader, mostly for tests.
#[derive(Debug, Default, Clone)]
pub struct MapLoader(pub HashMap<String, AstModule>);

impl ModuleLoader for MapLoader {
    fn load(&mut self, name: &str) -> Option<(AstModule, Vec<Diagnostic>)> {
        self.0.get(name).cloned().map(|m| (m, Vec::new()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatView {
    /// Canonical dotted name (`s.node1`).
    pub name: String,
    pub parent: Option<usize>,
    pub imported_module: Option<String>,
    pub span: SourceSpan,
}

/// The whole import tree flattened into one module. Views are in document
/// order (pre-order, instances expanded in place); all paths are canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatModule {
    pub name: String,
    pub views: Vec<FlatView>,
    pub constraints: Vec<ConstraintStmt>,
    pub inequalities: Vec<InequalityStmt>,
    /// Exports of the root module.
    pub exports: Vec<Export>,
    /// Free variables (plain identifiers in their own module), canonical
    /// names in order of first appearance.
    pub free_variables: Vec<(String, SourceSpan)>,
    /// Free variables exported by imported modules.
    pub nested_exports: HashSet<String>,
}

pub fn resolve_imports(root: &AstModule, loader: &mut dyn ModuleLoader) -> Result<FlatModule, Vec<Diagnostic>> {
    let mut ex = Expander {
        loader,
        cache: HashMap::new(),
        diags: Vec::new(),
        out: FlatModule {
            name: root.name.clone(),
            views: Vec::new(),
            constraints: Vec::new(),
            inequalities: Vec::new(),
            exports: root.exports.clone(),
            free_variables: Vec::new(),
            nested_exports: HashSet::new(),
        },
        seen_free: HashSet::new(),
    };
    let mut stack = vec![root.name.clone()];
    ex.expand(root, None, None, &mut stack);
    if has_errors(&ex.diags) {
        Err(ex.diags)
    } else {
        Ok(ex.out)
    }
}

struct Expander<'l> {
    loader: &'l mut dyn ModuleLoader,
    cache: HashMap<String, Option<AstModule>>,
    diags: Vec<Diagnostic>,
    out: FlatModule,
    seen_free: HashSet<String>,
}

impl Expander<'_> {
    fn expand(&mut self, module: &AstModule, prefix: Option<&str>, parent: Option<usize>, stack: &mut Vec<String>) {
        for view in &module.views {
            self.expand_view(view, prefix, parent, stack);
        }

        let rewrite = |p: &PropertyPath| rewrite_path(p, prefix);
        let mut free = Vec::new();
        for c in &module.constraints {
            if prefix.is_some() && c.target.segments[0] == "base" {
                self.diags.push(Diagnostic::error(
                    DiagnosticCode::WriteToReadOnly,
                    c.target.span.clone(),
                    format!("'{}' is read-only", c.target),
                ));
            }
            free.push(&c.target);
            free.extend(c.expr.refs());
        }
        for i in &module.inequalities {
            free.extend(i.lhs.refs());
            free.extend(i.rhs.refs());
        }
        if prefix.is_some() {
            for p in &free {
                if p.segments[0] == "base"
                    && p.segments.len() == 2
                    && !matches!(p.segments[1].as_str(), "X" | "Y" | "W" | "H")
                {
                    self.diags.push(Diagnostic::error(
                        DiagnosticCode::UnknownProperty,
                        p.span.clone(),
                        format!("'base' has no property '{}' (only X, Y, W, H)", p.segments[1]),
                    ));
                }
            }
        }
        for p in free.into_iter().filter(|p| p.segments.len() == 1) {
            let name = rewrite(p).dotted();
            if self.seen_free.insert(name.clone()) {
                self.out.free_variables.push((name, p.span.clone()));
            }
        }

        for c in &module.constraints {
            let mut c = c.clone();
            c.target = rewrite(&c.target);
            c.expr.visit_refs_mut(&mut |p| *p = rewrite(p));
            self.out.constraints.push(c);
        }
        for i in &module.inequalities {
            let mut i = i.clone();
            i.lhs.visit_refs_mut(&mut |p| *p = rewrite(p));
            i.rhs.visit_refs_mut(&mut |p| *p = rewrite(p));
            self.out.inequalities.push(i);
        }
        if let Some(prefix) = prefix {
            for e in &module.exports {
                self.out.nested_exports.insert(format!("{prefix}.{}", e.name));
            }
        }
    }

    fn expand_view(&mut self, view: &ViewDecl, prefix: Option<&str>, parent: Option<usize>, stack: &mut Vec<String>) {
        let name = match prefix {
            Some(p) => format!("{p}.{}", view.name),
            None => view.name.clone(),
        };
        let idx = self.out.views.len();
        self.out.views.push(FlatView {
            name: name.clone(),
            parent,
            imported_module: view.imported_module.clone(),
            span: view.span.clone(),
        });

        if let Some(module_name) = &view.imported_module {
            if let Some(pos) = stack.iter().position(|m| m == module_name) {
                let mut cycle: Vec<String> = stack[pos..].to_vec();
                cycle.push(module_name.clone());
                self.diags.push(Diagnostic::error(
                    DiagnosticCode::ImportCycle,
                    view.span.clone(),
                    format!("import cycle: {}", cycle.join(" -> ")),
                ));
            } else if let Some(imported) = self.load(module_name, &view.span) {
                stack.push(module_name.clone());
                self.expand(&imported, Some(&name), Some(idx), stack);
                stack.pop();
            }
        }

        for child in &view.children {
            self.expand_view(child, prefix, Some(idx), stack);
        }
    }

    fn load(&mut self, name: &str, span: &SourceSpan) -> Option<AstModule> {
        if !self.cache.contains_key(name) {
            let loaded = self.loader.load(name);
            let module = match loaded {
                Some((m, diags)) => {
                    let failed = has_errors(&diags);
                    self.diags.extend(diags);
                    (!failed).then_some(m)
                }
                None => {
                    self.diags.push(Diagnostic::error(
                        DiagnosticCode::ModuleNotFound,
                        span.clone(),
                        format!("module '{name}' not found (looked for {name}.cgui)"),
                    ));
                    None
                }
            };
            self.cache.insert(name.to_string(), module);
        }
        self.cache[name].clone()
    }
}

/// Canonicalizes a path written inside an instance at `prefix`; `base` there
/// means the instance view itself.
fn rewrite_path(path: &PropertyPath, prefix: Option<&str>) -> PropertyPath {
    let Some(prefix) = prefix else {
        return path.clone();
    };
    let mut segments: Vec<String> = prefix.split('.').map(String::from).collect();
    let rest = if path.segments.len() > 1 && path.segments[0] == "base" {
        &path.segments[1..]
    } else {
        &path.segments[..]
    };
    segments.extend(rest.iter().cloned());
    PropertyPath {
        segments,
        span: path.span.clone(),
    }
}
