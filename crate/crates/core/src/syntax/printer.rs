//! Canonical pretty-printer. Output re-parses to a structurally identical AST.

use std::fmt::Write;

use super::ast::*;

pub fn print_module(m: &AstModule) -> String {
    let mut out = String::from("@gui\n");
    for v in &m.views {
        out.push_str("  ");
        print_view(&mut out, v);
        out.push('\n');
    }
    if !m.constraints.is_empty() || !m.inequalities.is_empty() {
        out.push_str("@constraints\n");
        for c in &m.constraints {
            let _ = writeln!(out, "  {} << {}", c.target, print_expr(&c.expr));
        }
        for i in &m.inequalities {
            let _ = writeln!(out, "  {} {} {}", print_expr(&i.lhs), i.op.symbol(), print_expr(&i.rhs));
        }
    }
    if !m.exports.is_empty() {
        let names: Vec<_> = m.exports.iter().map(|e| e.name.as_str()).collect();
        let _ = writeln!(out, "@export {}", names.join(", "));
    }
    out
}

fn print_view(out: &mut String, v: &ViewDecl) {
    out.push_str(&v.name);
    if let Some(m) = &v.imported_module {
        out.push(':');
        out.push_str(m);
    }
    if !v.children.is_empty() {
        out.push_str(" {");
        for c in &v.children {
            out.push(' ');
            print_view(out, c);
        }
        out.push_str(" }");
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

// 3 = atom/unary, 2 = multiplicative, 1 = additive
fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        _ => 3,
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Number(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Text(t) => {
            out.push('"');
            for c in t.chars() {
                if c == '"' || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push('"');
        }
        ExprKind::Ref(p) => out.push_str(&p.dotted()),
        ExprKind::Neg(inner) => {
            out.push('-');
            write_operand(out, inner, precedence(inner) < 3);
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            write_operand(out, l, precedence(l) < p);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, r, precedence(r) <= p);
        }
        ExprKind::Call { namespace, name, args } => {
            let _ = write!(out, "{namespace}.{name}(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

fn write_operand(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}
