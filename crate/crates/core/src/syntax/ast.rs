use std::fmt;

use crate::diagnostic::SourceSpan;

#[derive(Debug, Clone, PartialEq)]
pub struct AstModule {
    pub name: String,
    pub views: Vec<ViewDecl>,
    pub constraints: Vec<ConstraintStmt>,
    pub inequalities: Vec<InequalityStmt>,
    pub exports: Vec<Export>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewDecl {
    pub name: String,
    /// Set for the `name:ModuleName` form.
    pub imported_module: Option<String>,
    pub children: Vec<ViewDecl>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Export {
    pub name: String,
    pub span: SourceSpan,
}

/// A dotted reference such as `dialog.W` or `lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyPath {
    pub segments: Vec<String>,
    pub span: SourceSpan,
}

impl PropertyPath {
    pub fn dotted(&self) -> String {
        self.segments.join(".")
    }
}

impl fmt::Display for PropertyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dotted())
    }
}

/// `target << expr`
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintStmt {
    pub target: PropertyPath,
    pub expr: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Le,
    Ge,
    Lt,
    Gt,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Le => "<=",
            RelOp::Ge => ">=",
            RelOp::Lt => "<",
            RelOp::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<RelOp> {
        Some(match s {
            "<=" => RelOp::Le,
            ">=" => RelOp::Ge,
            "<" => RelOp::Lt,
            ">" => RelOp::Gt,
            _ => return None,
        })
    }

    /// IEEE comparison; any NaN operand makes the relation false.
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            RelOp::Le => lhs <= rhs,
            RelOp::Ge => lhs >= rhs,
            RelOp::Lt => lhs < rhs,
            RelOp::Gt => lhs > rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityStmt {
    pub lhs: Expr,
    pub op: RelOp,
    pub rhs: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Text(String),
    Ref(PropertyPath),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call {
        namespace: String,
        name: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    /// Every path referenced by this expression, in left-to-right order.
    pub fn refs(&self) -> Vec<&PropertyPath> {
        let mut out = Vec::new();
        self.visit_refs(&mut |p| out.push(p));
        out
    }

    pub fn visit_refs<'a>(&'a self, f: &mut impl FnMut(&'a PropertyPath)) {
        match &self.kind {
            ExprKind::Number(_) | ExprKind::Text(_) => {}
            ExprKind::Ref(p) => f(p),
            ExprKind::Neg(e) => e.visit_refs(f),
            ExprKind::Binary(_, l, r) => {
                l.visit_refs(f);
                r.visit_refs(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.visit_refs(f)),
        }
    }

    pub fn visit_refs_mut(&mut self, f: &mut impl FnMut(&mut PropertyPath)) {
        match &mut self.kind {
            ExprKind::Number(_) | ExprKind::Text(_) => {}
            ExprKind::Ref(p) => f(p),
            ExprKind::Neg(e) => e.visit_refs_mut(f),
            ExprKind::Binary(_, l, r) => {
                l.visit_refs_mut(f);
                r.visit_refs_mut(f);
            }
            ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| a.visit_refs_mut(f)),
        }
    }
}

/// Span-free copies, for structural comparison of two parses.
pub trait StripSpans {
    fn strip_spans(&self) -> Self;
}

impl StripSpans for AstModule {
    fn strip_spans(&self) -> Self {
        AstModule {
            name: self.name.clone(),
            views: self.views.iter().map(StripSpans::strip_spans).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintStmt {
                    target: c.target.strip_spans(),
                    expr: c.expr.strip_spans(),
                    span: SourceSpan::default(),
                })
                .collect(),
            inequalities: self
                .inequalities
                .iter()
                .map(|i| InequalityStmt {
                    lhs: i.lhs.strip_spans(),
                    op: i.op,
                    rhs: i.rhs.strip_spans(),
                    span: SourceSpan::default(),
                })
                .collect(),
            exports: self
                .exports
                .iter()
                .map(|e| Export {
                    name: e.name.clone(),
                    span: SourceSpan::default(),
                })
                .collect(),
            span: SourceSpan::default(),
        }
    }
}

impl StripSpans for ViewDecl {
    fn strip_spans(&self) -> Self {
        ViewDecl {
            name: self.name.clone(),
            imported_module: self.imported_module.clone(),
            children: self.children.iter().map(StripSpans::strip_spans).collect(),
            span: SourceSpan::default(),
        }
    }
}

impl StripSpans for PropertyPath {
    fn strip_spans(&self) -> Self {
        PropertyPath {
            segments: self.segments.clone(),
            span: SourceSpan::default(),
        }
    }
}

impl StripSpans for Expr {
    fn strip_spans(&self) -> Self {
        let kind = match &self.kind {
            ExprKind::Number(n) => ExprKind::Number(*n),
            ExprKind::Text(t) => ExprKind::Text(t.clone()),
            ExprKind::Ref(p) => ExprKind::Ref(p.strip_spans()),
            ExprKind::Neg(e) => ExprKind::Neg(Box::new(e.strip_spans())),
            ExprKind::Binary(op, l, r) => ExprKind::Binary(*op, Box::new(l.strip_spans()), Box::new(r.strip_spans())),
            ExprKind::Call { namespace, name, args } => ExprKind::Call {
                namespace: namespace.clone(),
                name: name.clone(),
                args: args.iter().map(StripSpans::strip_spans).collect(),
            },
        };
        Expr {
            kind,
            span: SourceSpan::default(),
        }
    }
}
