//! Recursive-descent parser for `.cgui` files.
//!
//! Statements end at newlines. On a syntax error the parser records a
//! diagnostic and resynchronizes at the next newline, so every broken line
//! reports independently.

use std::path::Path;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::diagnostic::{Diagnostic, DiagnosticCode, SourceSpan};

/// Function namespaces that cannot start an ordinary property path.
pub const RESERVED_NAMESPACES: [&str; 2] = ["Math", "Str"];

/// Module identifier for a file: its stem (`dir/Clock.cgui` → `Clock`).
pub fn module_name_for(file: &str) -> String {
    Path::new(file)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file.to_string())
}

/// Tokenizes and parses `source` in one step; diagnostics from both stages
/// are returned together.
pub fn parse_source(source: &str, file: &str) -> (AstModule, Vec<Diagnostic>) {
    let (tokens, mut diags) = tokenize(source, file);
    let (module, parse_diags) = parse(&tokens);
    diags.extend(parse_diags);
    (module, diags)
}

/// Parses a token stream ending in `Eof`. Always returns a module; it is only
/// trustworthy when no error diagnostics were produced.
pub fn parse(tokens: &[Token]) -> (AstModule, Vec<Diagnostic>) {
    assert!(
        tokens.last().is_some_and(|t| t.kind == TokenKind::Eof),
        "token stream must end with Eof"
    );
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        diags: Vec::new(),
    };
    let module = p.module();
    (module, p.diags)
}

#[derive(PartialEq, Eq, PartialOrd, Ord, Clone, Copy)]
enum Stage {
    Start,
    Gui,
    Constraints,
    Export,
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> &'t Token {
        let t = self.peek();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_symbol(&self, sym: &str) -> bool {
        self.peek().is_symbol(sym)
    }

    fn at_section_end(&self) -> bool {
        matches!(self.peek().kind, TokenKind::SectionMarker | TokenKind::Eof)
    }

    fn at_line_end(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::Newline | TokenKind::SectionMarker | TokenKind::Eof
        )
    }

    fn skip_newlines(&mut self) {
        while self.peek().kind == TokenKind::Newline {
            self.bump();
        }
    }

    fn sync_line(&mut self) {
        while !self.at_line_end() {
            self.bump();
        }
    }

    fn error(&mut self, code: DiagnosticCode, span: SourceSpan, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn unexpected(&mut self, expected: &str) {
        let t = self.peek();
        let found = describe(t);
        self.error(
            DiagnosticCode::UnexpectedToken,
            t.span.clone(),
            format!("expected {expected}, found {found}"),
        );
    }

    fn module(&mut self) -> AstModule {
        let eof_span = self.toks.last().unwrap().span.clone();
        let name = module_name_for(&eof_span.file);
        let mut module = AstModule {
            name,
            views: Vec::new(),
            constraints: Vec::new(),
            inequalities: Vec::new(),
            exports: Vec::new(),
            span: SourceSpan::new(eof_span.file.clone(), (1, 1), (eof_span.end_line, eof_span.end_col)),
        };

        self.skip_newlines();
        let mut stage = Stage::Start;
        if !(self.peek().kind == TokenKind::SectionMarker && self.peek().text == "@gui") {
            self.error(
                DiagnosticCode::MissingSection,
                self.peek().span.clone(),
                "missing '@gui' section at start of file",
            );
            while !self.at_section_end() {
                self.bump();
            }
        }

        loop {
            self.skip_newlines();
            let t = self.peek();
            match t.kind {
                TokenKind::Eof => break,
                TokenKind::SectionMarker => {
                    let section = match t.text.as_str() {
                        "@gui" => Stage::Gui,
                        "@constraints" => Stage::Constraints,
                        _ => Stage::Export,
                    };
                    if section <= stage {
                        self.error(
                            DiagnosticCode::UnexpectedToken,
                            t.span.clone(),
                            format!(
                                "section '{}' out of order (expected @gui, @constraints, @export)",
                                t.text
                            ),
                        );
                    }
                    stage = stage.max(section);
                    self.bump();
                    match section {
                        Stage::Gui => self.gui_section(&mut module.views),
                        Stage::Constraints => self.constraint_section(&mut module),
                        _ => self.export_section(&mut module.exports),
                    }
                }
                _ => {
                    self.unexpected("a section marker");
                    self.sync_line();
                }
            }
        }
        module
    }

    fn gui_section(&mut self, views: &mut Vec<ViewDecl>) {
        loop {
            self.skip_newlines();
            if self.at_section_end() {
                return;
            }
            let t = self.peek();
            if t.kind == TokenKind::Ident {
                if let Ok(v) = self.view_decl() {
                    views.push(v);
                }
            } else if t.is_symbol("}") {
                self.error(DiagnosticCode::UnbalancedBrace, t.span.clone(), "unmatched '}'");
                self.bump();
            } else {
                self.unexpected("a view name");
                self.sync_line();
            }
        }
    }

    fn view_decl(&mut self) -> PResult<ViewDecl> {
        let name_tok = self.bump();
        let mut span = name_tok.span.clone();
        let mut imported_module = None;
        if self.at_symbol(":") {
            self.bump();
            let t = self.peek();
            if t.kind != TokenKind::Ident {
                self.unexpected("a module name after ':'");
                self.sync_line();
                return Err(());
            }
            self.bump();
            if !t.text.starts_with(|c: char| c.is_ascii_uppercase()) {
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    t.span.clone(),
                    format!("module name '{}' must start with an uppercase letter", t.text),
                );
            }
            span = span.to(&t.span);
            imported_module = Some(t.text.clone());
        }

        let mut children = Vec::new();
        if self.at_symbol("{") {
            let open = self.bump().span.clone();
            loop {
                self.skip_newlines();
                let t = self.peek();
                if t.is_symbol("}") {
                    span = span.to(&t.span);
                    self.bump();
                    break;
                }
                if self.at_section_end() {
                    self.error(DiagnosticCode::UnbalancedBrace, open, "unclosed '{'");
                    break;
                }
                if t.kind == TokenKind::Ident {
                    if let Ok(child) = self.view_decl() {
                        children.push(child);
                    }
                } else {
                    self.unexpected("a view name or '}'");
                    self.bump();
                }
            }
            if imported_module.is_some() {
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    span.clone(),
                    format!("module instance '{}' cannot declare child views", name_tok.text),
                );
                children.clear();
            }
        }

        Ok(ViewDecl {
            name: name_tok.text.clone(),
            imported_module,
            children,
            span,
        })
    }

    fn constraint_section(&mut self, module: &mut AstModule) {
        loop {
            self.skip_newlines();
            if self.at_section_end() {
                return;
            }
            if self.statement(module).is_err() {
                self.sync_line();
            }
        }
    }

    fn statement(&mut self, module: &mut AstModule) -> PResult<()> {
        let lhs = self.expr()?;
        let t = self.peek();
        if t.is_symbol("<<") {
            self.bump();
            let ExprKind::Ref(target) = lhs.kind else {
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    lhs.span,
                    "the target of '<<' must be a property path",
                );
                return Err(());
            };
            if target.segments.len() > 3 {
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    target.span.clone(),
                    format!("target path '{target}' has more than three segments"),
                );
            }
            let expr = self.expr()?;
            self.end_of_statement()?;
            let span = target.span.to(&expr.span);
            module.constraints.push(ConstraintStmt { target, expr, span });
        } else if let Some(op) = (t.kind == TokenKind::Symbol)
            .then(|| RelOp::from_symbol(&t.text))
            .flatten()
        {
            self.bump();
            let rhs = self.expr()?;
            self.end_of_statement()?;
            let span = lhs.span.to(&rhs.span);
            module.inequalities.push(InequalityStmt { lhs, op, rhs, span });
        } else {
            self.unexpected("'<<' or a comparison operator");
            return Err(());
        }
        Ok(())
    }

    fn end_of_statement(&mut self) -> PResult<()> {
        if self.at_line_end() {
            Ok(())
        } else {
            self.unexpected("end of line");
            Err(())
        }
    }

    fn export_section(&mut self, exports: &mut Vec<Export>) {
        loop {
            self.skip_newlines();
            let t = self.peek();
            if t.kind != TokenKind::Ident {
                self.unexpected("an identifier to export");
                self.sync_line();
                return;
            }
            self.bump();
            let mut span = t.span.clone();
            if self.at_symbol(".") {
                while self.at_symbol(".") || self.peek().kind == TokenKind::Ident {
                    span = span.to(&self.bump().span);
                }
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    span,
                    "exports must be plain identifiers (route properties through a variable)",
                );
            } else {
                exports.push(Export {
                    name: t.text.clone(),
                    span,
                });
            }
            if self.at_symbol(",") {
                self.bump();
            } else {
                return;
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.at_symbol("+") {
                BinOp::Add
            } else if self.at_symbol("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.at_symbol("*") {
                BinOp::Mul
            } else if self.at_symbol("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.unary()?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at_symbol("-") {
            let minus = self.bump().span.clone();
            let operand = self.unary()?;
            let span = minus.to(&operand.span);
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(operand)),
                span,
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek();
        match t.kind {
            TokenKind::Number => {
                self.bump();
                // The lexer only emits finite, parseable numbers.
                let n = t.text.parse::<f64>().unwrap_or(f64::NAN);
                Ok(Expr {
                    kind: ExprKind::Number(n),
                    span: t.span.clone(),
                })
            }
            TokenKind::StringLit => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Text(t.string_value()),
                    span: t.span.clone(),
                })
            }
            TokenKind::Ident => self.path_or_call(),
            _ if t.is_symbol("(") => {
                self.bump();
                let inner = self.expr()?;
                if !self.at_symbol(")") {
                    self.unexpected("')'");
                    return Err(());
                }
                self.bump();
                Ok(inner)
            }
            _ => {
                self.unexpected("an expression");
                Err(())
            }
        }
    }

    fn path_or_call(&mut self) -> PResult<Expr> {
        let first = self.bump();
        let mut segments = vec![first.text.clone()];
        let mut span = first.span.clone();
        while self.at_symbol(".") {
            self.bump();
            let t = self.peek();
            if t.kind != TokenKind::Ident {
                self.unexpected("an identifier after '.'");
                return Err(());
            }
            self.bump();
            segments.push(t.text.clone());
            span = span.to(&t.span);
        }

        if self.at_symbol("(") {
            if segments.len() != 2 {
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    span,
                    "function calls take the form Namespace.name(...)",
                );
                return Err(());
            }
            self.bump();
            let mut args = Vec::new();
            if !self.at_symbol(")") {
                loop {
                    args.push(self.expr()?);
                    if self.at_symbol(",") {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            if !self.at_symbol(")") {
                self.unexpected("',' or ')'");
                return Err(());
            }
            span = span.to(&self.bump().span);
            let name = segments.pop().unwrap();
            let namespace = segments.pop().unwrap();
            return Ok(Expr {
                kind: ExprKind::Call { namespace, name, args },
                span,
            });
        }

        if RESERVED_NAMESPACES.contains(&segments[0].as_str()) {
            self.error(
                DiagnosticCode::UnexpectedToken,
                span,
                format!("'{}' is a reserved function namespace", segments[0]),
            );
            return Err(());
        }
        Ok(Expr {
            kind: ExprKind::Ref(PropertyPath {
                segments,
                span: span.clone(),
            }),
            span,
        })
    }
}

fn describe(t: &Token) -> String {
    match t.kind {
        TokenKind::Eof => "end of file".into(),
        TokenKind::Newline => "end of line".into(),
        _ => format!("'{}'", t.text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIALOG: &str = "@gui\n  // GUI structure\n  dialog{ ok cancel }\n@constraints\n  // Property relationships\n  dialog.W << base.W\n  dialog.H << base.H\n";

    fn ok(src: &str) -> AstModule {
        let (m, diags) = parse_source(src, "test.cgui");
        assert!(diags.is_empty(), "{diags:?}");
        m
    }

    fn errs(src: &str) -> Vec<Diagnostic> {
        parse_source(src, "test.cgui").1
    }

    fn path(p: &str) -> Vec<String> {
        p.split('.').map(String::from).collect()
    }

    #[test]
    fn dialog_tree() {
        let m = ok(DIALOG);
        assert_eq!(m.name, "test");
        assert_eq!(m.views.len(), 1);
        let dialog = &m.views[0];
        assert_eq!(dialog.name, "dialog");
        let kids: Vec<_> = dialog.children.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(kids, ["ok", "cancel"]);
        assert_eq!(m.constraints.len(), 2);
        assert_eq!(m.constraints[0].target.segments, path("dialog.W"));
        assert!(matches!(&m.constraints[0].expr.kind, ExprKind::Ref(p) if p.segments == path("base.W")));
        assert_eq!(m.constraints[1].target.segments, path("dialog.H"));
        assert!(m.exports.is_empty());
    }

    #[test]
    fn minimal_module() {
        let m = ok("@gui\n box");
        assert_eq!(m.views.len(), 1);
        assert_eq!(m.views[0].name, "box");
        assert!(m.views[0].children.is_empty());
        assert!(m.constraints.is_empty() && m.inequalities.is_empty() && m.exports.is_empty());
    }

    #[test]
    fn import_and_exports() {
        let m = ok("@gui\n s:RangeSlider\n@export lo, hi");
        assert_eq!(m.views[0].name, "s");
        assert_eq!(m.views[0].imported_module.as_deref(), Some("RangeSlider"));
        let ex: Vec<_> = m.exports.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(ex, ["lo", "hi"]);
    }

    #[test]
    fn multi_line_view_tree() {
        let m = ok("@gui\n a {\n   b { c }\n   d\n }\n e\n");
        assert_eq!(m.views.len(), 2);
        assert_eq!(m.views[0].children.len(), 2);
        assert_eq!(m.views[0].children[0].children[0].name, "c");
    }

    #[test]
    fn precedence() {
        let m = ok("@gui\n v\n@constraints\n x << -a * b + c / (d - 2)\n");
        let e = &m.constraints[0].expr;
        let ExprKind::Binary(BinOp::Add, l, r) = &e.kind else {
            panic!("{e:?}")
        };
        let ExprKind::Binary(BinOp::Mul, neg, _) = &l.kind else {
            panic!()
        };
        assert!(matches!(neg.kind, ExprKind::Neg(_)));
        let ExprKind::Binary(BinOp::Div, _, paren) = &r.kind else {
            panic!()
        };
        assert!(matches!(paren.kind, ExprKind::Binary(BinOp::Sub, _, _)));
    }

    #[test]
    fn calls_and_inequalities() {
        let m = ok("@gui\n v\n@constraints\n v.X << Math.max(0, Math.min(v.W, 3))\n v.X <= 10\n lo < hi\n");
        assert!(matches!(
            &m.constraints[0].expr.kind,
            ExprKind::Call { namespace, name, args } if namespace == "Math" && name == "max" && args.len() == 2
        ));
        assert_eq!(m.inequalities.len(), 2);
        assert_eq!(m.inequalities[0].op, RelOp::Le);
        assert_eq!(m.inequalities[1].op, RelOp::Lt);
    }

    #[test]
    fn missing_gui_section() {
        let d = errs("@constraints\n x << 1\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::MissingSection);
        let d = errs("");
        assert_eq!(d[0].code, DiagnosticCode::MissingSection);
    }

    #[test]
    fn unbalanced_braces() {
        let d = errs("@gui\n a { b\n@constraints\n");
        assert_eq!(d[0].code, DiagnosticCode::UnbalancedBrace);
        let d = errs("@gui\n a }\n");
        assert_eq!(d[0].code, DiagnosticCode::UnbalancedBrace);
    }

    #[test]
    fn instance_with_children_is_an_error() {
        let d = errs("@gui\n s:Slider { x }\n");
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn lowercase_module_name_is_an_error() {
        let d = errs("@gui\n s:slider\n");
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("uppercase"));
    }

    #[test]
    fn dotted_export_is_rejected() {
        let d = errs("@gui\n v\n@export v.X, lo\n");
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn out_of_order_sections() {
        let d = errs("@gui\n v\n@export a\n@constraints\n a << 1\n");
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("out of order"));
    }

    #[test]
    fn reserved_namespace_as_path() {
        let d = errs("@gui\n v\n@constraints\n v.X << Math.pi\n");
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn independent_line_errors_each_report() {
        let src = "@gui\n v\n@constraints\n v.X << 1 +\n v.Y << )\n a b\n v.W << 2\n 3 << v.H\n";
        let d = errs(src);
        assert!(d.len() >= 4, "{d:?}");
        let lines: Vec<_> = d.iter().map(|d| d.span.start_line).collect();
        assert_eq!(lines, [4, 5, 6, 8]);
        // The valid line in between still parses.
        let (m, _) = parse_source(src, "t.cgui");
        assert_eq!(m.constraints.len(), 1);
    }

    #[test]
    fn deterministic() {
        let a = parse_source(DIALOG, "x.cgui");
        let b = parse_source(DIALOG, "x.cgui");
        assert_eq!(a, b);
    }
}
