//! Source printing. Output parses back to an equal AST.

use std::fmt::Write;

use super::ast::{Expr, LValue, ProgramAst, Stmt};

/// Print an expression with packet fields written as `pkt.name`.
pub fn print_expr(e: &Expr) -> String {
    expr_with("pkt", e)
}

pub(crate) fn expr_with(param: &str, e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, param, e, 0);
    s
}

/// `ctx` is the minimum precedence the surrounding context accepts without
/// parentheses; 0 means anything goes.
fn write_expr(out: &mut String, param: &str, e: &Expr, ctx: u8) {
    match e {
        Expr::Int(v) if *v < 0 => {
            let _ = write!(out, "({v})");
        }
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Field(f, _) => {
            let _ = write!(out, "{param}.{f}");
        }
        Expr::Var(n, _) => out.push_str(n),
        Expr::Index(n, i, _) => {
            out.push_str(n);
            out.push('[');
            write_expr(out, param, i, 0);
            out.push(']');
        }
        Expr::Unary(op, a) => {
            out.push_str(op.symbol());
            let wrap = matches!(**a, Expr::Binary(..) | Expr::Ternary(..) | Expr::Unary(..));
            if wrap {
                out.push('(');
            }
            write_expr(out, param, a, 0);
            if wrap {
                out.push(')');
            }
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let wrap = p < ctx;
            if wrap {
                out.push('(');
            }
            write_expr(out, param, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, param, b, p + 1);
            if wrap {
                out.push(')');
            }
        }
        Expr::Ternary(c, a, b) => {
            let wrap = ctx > 0;
            if wrap {
                out.push('(');
            }
            write_expr(out, param, c, 1);
            out.push_str(" ? ");
            write_expr(out, param, a, 0);
            out.push_str(" : ");
            write_expr(out, param, b, 0);
            if wrap {
                out.push(')');
            }
        }
        Expr::Call(n, args, _) => {
            out.push_str(n);
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_expr(out, param, a, 0);
            }
            out.push(')');
        }
    }
}

fn lvalue(param: &str, l: &LValue) -> String {
    match l {
        LValue::Field(f) => format!("{param}.{f}"),
        LValue::Var(n) => n.clone(),
        LValue::Index(n, i) => format!("{n}[{}]", expr_with(param, i)),
    }
}

fn write_stmts(out: &mut String, param: &str, body: &[Stmt], depth: usize) {
    for s in body {
        write_stmt(out, param, s, depth);
    }
}

fn write_stmt(out: &mut String, param: &str, s: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match s {
        Stmt::Assign { target, value, .. } => {
            let _ = writeln!(out, "{pad}{} = {};", lvalue(param, target), expr_with(param, value));
        }
        Stmt::If { cond, then_branch, else_branch, .. } => {
            let _ = writeln!(out, "{pad}if ({}) {{", expr_with(param, cond));
            write_stmts(out, param, then_branch, depth + 1);
            if else_branch.is_empty() {
                let _ = writeln!(out, "{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}}} else {{");
                write_stmts(out, param, else_branch, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
        }
        Stmt::Block(b) => {
            let _ = writeln!(out, "{pad}{{");
            write_stmts(out, param, b, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// Print a statement list at the given indentation depth.
pub fn print_body(param: &str, body: &[Stmt], depth: usize) -> String {
    let mut s = String::new();
    write_stmts(&mut s, param, body, depth);
    s
}

pub fn print_program(p: &ProgramAst) -> String {
    let mut out = String::new();
    for c in &p.consts {
        let _ = writeln!(out, "const int {} = {};", c.name, c.value);
    }
    if !p.packet_fields.is_empty() {
        out.push_str("struct Packet {\n");
        for f in &p.packet_fields {
            let _ = writeln!(out, "    int {f};");
        }
        out.push_str("};\n");
    }
    for s in &p.states {
        match s.size {
            Some(n) => {
                let _ = writeln!(out, "int {}[{n}] = {{{}}};", s.name, s.init);
            }
            None => {
                let _ = writeln!(out, "int {} = {};", s.name, s.init);
            }
        }
    }
    if let Some(g) = &p.guard {
        let _ = writeln!(out, "guard ({});", expr_with(&p.param, g));
    }
    let _ = writeln!(out, "void {}(struct Packet {}) {{", p.name, p.param);
    write_stmts(&mut out, &p.param, &p.body, 1);
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, parse_expr};

    #[test]
    fn minimal_parentheses() {
        let e = parse_expr("(pkt.a + pkt.b) * pkt.c - (pkt.d - 1)").unwrap();
        assert_eq!(print_expr(&e), "(pkt.a + pkt.b) * pkt.c - (pkt.d - 1)");
        let e = parse_expr("pkt.a - pkt.b - pkt.c").unwrap();
        assert_eq!(print_expr(&e), "pkt.a - pkt.b - pkt.c");
    }

    #[test]
    fn negative_constants_reparse() {
        for src in ["pkt.a - -3", "-(-5)", "~-1", "- -pkt.a", "pkt.a ? -2 : (pkt.b ? 1 : 0)"] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&print_expr(&e)).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn program_round_trip() {
        let src = "#define K 3\nstruct Packet { int a; int b; };\nint s = 1;\nint arr[8] = {2};\n\
                   guard (p.a != 0);\nvoid t(struct Packet p) { if (s > K) { p.a = arr[p.b]; } else if (p.a) s = 0; else { p.b = s; } }";
        let ast = parse(src).unwrap();
        let printed = print_program(&ast);
        assert_eq!(parse(&printed).unwrap(), ast);
        assert_eq!(print_program(&parse(&printed).unwrap()), printed);
    }
}
