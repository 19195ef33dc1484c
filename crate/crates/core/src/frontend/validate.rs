use std::collections::{HashMap, HashSet};
use std::ops::Deref;

use super::ast::{Expr, LValue, ProgramAst, Span, Stmt};
use super::printer::print_expr;
use super::{Diagnostic, DiagnosticKind, FrontendError, Restriction};
use crate::ops::Intrinsic;

/// A program that passed every frontend check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedAst(ProgramAst);

impl ValidatedAst {
    pub fn into_inner(self) -> ProgramAst {
        self.0
    }
}

impl Deref for ValidatedAst {
    type Target = ProgramAst;

    fn deref(&self) -> &ProgramAst {
        &self.0
    }
}

/// Check names, arities, the guard, and array-index rules. All problems are
/// reported together.
pub fn validate(ast: ProgramAst) -> Result<ValidatedAst, FrontendError> {
    let mut v = Validator { ast: &ast, diags: Vec::new(), array_index: HashMap::new(), indexed_fields: HashMap::new() };
    v.declarations();
    if let Some(g) = &ast.guard {
        v.guard(g);
    }
    v.stmts(&ast.body);
    if v.diags.is_empty() {
        Ok(ValidatedAst(ast))
    } else {
        Err(FrontendError(v.diags))
    }
}

struct Validator<'a> {
    ast: &'a ProgramAst,
    diags: Vec<Diagnostic>,
    /// First index expression seen for each array.
    array_index: HashMap<String, Expr>,
    /// Fields feeding an already-accessed array index, with that array.
    indexed_fields: HashMap<String, String>,
}

impl Validator<'_> {
    fn error(&mut self, span: Span, kind: DiagnosticKind, msg: String) {
        self.diags.push(Diagnostic::error(span, kind, msg));
    }

    fn declarations(&mut self) {
        let mut seen = HashSet::new();
        for s in &self.ast.states {
            if !seen.insert(s.name.as_str()) {
                self.error(Span::default(), DiagnosticKind::Redeclaration, format!("state variable `{}` declared twice", s.name));
            }
            if Intrinsic::from_name(&s.name).is_some() {
                self.error(Span::default(), DiagnosticKind::Redeclaration, format!("`{}` shadows a built-in function", s.name));
            }
        }
    }

    fn guard(&mut self, g: &Expr) {
        let mut bad = Vec::new();
        g.visit(&mut |e| match e {
            Expr::Var(n, s) | Expr::Index(n, _, s) => bad.push((*s, format!("the guard may not read state variable `{n}`"))),
            Expr::Call(n, _, s) => bad.push((*s, format!("the guard may not call `{n}`"))),
            _ => {}
        });
        for (s, m) in bad {
            self.error(s, DiagnosticKind::InvalidGuard, m);
        }
        self.fields_exist(g);
    }

    fn fields_exist(&mut self, e: &Expr) {
        let mut missing = Vec::new();
        e.visit(&mut |x| {
            if let Expr::Field(f, s) = x {
                if !self.ast.has_field(f) {
                    missing.push((*s, f.clone()));
                }
            }
        });
        for (s, f) in missing {
            self.error(s, DiagnosticKind::UnknownIdentifier, format!("packet has no field `{f}`"));
        }
    }

    /// Check an expression that is read at this point in program order.
    fn read(&mut self, e: &Expr) {
        self.fields_exist(e);
        let mut nodes = Vec::new();
        e.visit(&mut |x| nodes.push(x.clone()));
        for x in nodes {
            match &x {
                Expr::Var(n, s) => match self.ast.state(n) {
                    None => self.error(*s, DiagnosticKind::UnknownIdentifier, format!("unknown identifier `{n}`")),
                    Some(d) if d.is_array() => {
                        self.error(*s, DiagnosticKind::UnknownIdentifier, format!("array `{n}` used without an index"))
                    }
                    _ => {}
                },
                Expr::Index(n, i, s) => self.array_access(n, i, *s),
                Expr::Call(n, args, s) => match Intrinsic::from_name(n) {
                    None => self.error(*s, DiagnosticKind::UnknownIdentifier, format!("unknown function `{n}`")),
                    Some(f) if f.arity() != args.len() => self.error(
                        *s,
                        DiagnosticKind::IntrinsicArity,
                        format!("`{n}` takes {} arguments, found {}", f.arity(), args.len()),
                    ),
                    _ => {}
                },
                _ => {}
            }
        }
    }

    fn array_access(&mut self, name: &str, index: &Expr, span: Span) {
        match self.ast.state(name) {
            None => {
                self.error(span, DiagnosticKind::UnknownIdentifier, format!("unknown array `{name}`"));
                return;
            }
            Some(d) if !d.is_array() => {
                self.error(span, DiagnosticKind::UnknownIdentifier, format!("`{name}` is not an array"));
                return;
            }
            _ => {}
        }
        if !index.state_refs().is_empty() {
            self.diags.push(Diagnostic::restriction(
                span,
                Restriction::ConstantArrayIndex,
                format!("index of `{name}` reads switch state"),
            ));
            return;
        }
        match self.array_index.get(name) {
            Some(first) if first != index => {
                let msg = format!("`{name}` is indexed by both `{}` and `{}`", print_expr(first), print_expr(index));
                self.diags.push(Diagnostic::restriction(span, Restriction::ConstantArrayIndex, msg));
            }
            Some(_) => {}
            None => {
                self.array_index.insert(name.to_string(), index.clone());
                for f in index.fields() {
                    self.indexed_fields.entry(f.to_string()).or_insert_with(|| name.to_string());
                }
            }
        }
    }

    fn stmts(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Assign { target, value, span } => {
                self.read(value);
                match target {
                    LValue::Field(f) => {
                        if !self.ast.has_field(f) {
                            self.error(*span, DiagnosticKind::UnknownIdentifier, format!("packet has no field `{f}`"));
                        }
                        if let Some(arr) = self.indexed_fields.get(f).cloned() {
                            self.diags.push(Diagnostic::restriction(
                                *span,
                                Restriction::ConstantArrayIndex,
                                format!("`pkt.{f}` is assigned after it was used to index `{arr}`"),
                            ));
                        }
                    }
                    LValue::Var(_) => self.read(&target.to_expr().with_span(*span)),
                    LValue::Index(..) => self.read(&target.to_expr().with_span(*span)),
                }
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                self.read(cond);
                self.stmts(then_branch);
                self.stmts(else_branch);
            }
            Stmt::Block(b) => self.stmts(b),
        }
    }
}

impl Expr {
    fn with_span(self, span: Span) -> Expr {
        match self {
            Expr::Var(n, _) => Expr::Var(n, span),
            Expr::Index(n, i, _) => Expr::Index(n, i, span),
            e => e,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;

    fn kinds(src: &str) -> Vec<DiagnosticKind> {
        load(src).unwrap_err().0.into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn collects_every_problem() {
        let src = "struct Packet { int a; };\nvoid f(struct Packet pkt) {\n pkt.b = 1;\n pkt.a = nope;\n pkt.a = hash2(1);\n}";
        assert_eq!(
            kinds(src),
            vec![DiagnosticKind::UnknownIdentifier, DiagnosticKind::UnknownIdentifier, DiagnosticKind::IntrinsicArity]
        );
    }

    #[test]
    fn index_must_be_uniform() {
        let src = "struct Packet { int a; int b; };\nint r[4];\nvoid f(struct Packet pkt) { r[pkt.a] = 1; pkt.b = r[pkt.b]; }";
        assert_eq!(kinds(src), vec![DiagnosticKind::Restriction(Restriction::ConstantArrayIndex)]);
    }

    #[test]
    fn index_field_frozen_after_access() {
        let src = "struct Packet { int a; };\nint r[4];\nvoid f(struct Packet pkt) { r[pkt.a] = 1; pkt.a = 2; }";
        assert_eq!(kinds(src), vec![DiagnosticKind::Restriction(Restriction::ConstantArrayIndex)]);
        let ok = "struct Packet { int a; };\nint r[4];\nvoid f(struct Packet pkt) { pkt.a = 2; r[pkt.a] = 1; pkt.a = r[pkt.a]; }";
        assert_eq!(kinds(ok), vec![DiagnosticKind::Restriction(Restriction::ConstantArrayIndex)]);
        let ok = "struct Packet { int a; int b; };\nint r[4];\nvoid f(struct Packet pkt) { pkt.a = 2; r[pkt.a] = 1; pkt.b = r[pkt.a]; }";
        assert!(load(ok).is_ok());
    }

    #[test]
    fn index_may_not_read_state() {
        let src = "struct Packet { int a; };\nint s;\nint r[4];\nvoid f(struct Packet pkt) { pkt.a = r[s]; }";
        assert_eq!(kinds(src), vec![DiagnosticKind::Restriction(Restriction::ConstantArrayIndex)]);
    }

    #[test]
    fn guard_reads_fields_only() {
        let src = "struct Packet { int a; };\nint s;\nguard (pkt.a == s);\nvoid f(struct Packet pkt) { }";
        assert_eq!(kinds(src), vec![DiagnosticKind::InvalidGuard]);
    }

    #[test]
    fn diagnostic_renders_with_location() {
        let err = load("struct Packet { int a; };\nvoid f(struct Packet pkt) {\n  pkt.a = zz;\n}").unwrap_err();
        assert_eq!(err.render("x.domino"), "x.domino:3:11: error: unknown identifier `zz`");
    }
}
