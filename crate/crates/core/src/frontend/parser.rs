use std::collections::HashMap;

use super::ast::{ConstDecl, Expr, LValue, ProgramAst, Span, StateDecl, Stmt};
use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, DiagnosticKind, FrontendError, Restriction};
use crate::ops::{BinOp, UnOp};

type PResult<T> = Result<T, Diagnostic>;

/// Parse a complete program.
pub fn parse(source: &str) -> Result<ProgramAst, FrontendError> {
    let tokens = lex(source).map_err(|d| FrontendError(vec![d]))?;
    let mut p = Parser { tokens, pos: 0, consts: HashMap::new(), param: None, guard_prefixes: Vec::new() };
    p.program().map_err(|d| FrontendError(vec![d]))
}

/// Parse a standalone expression; `NAME.field` accepts any prefix.
pub fn parse_expr(source: &str) -> Result<Expr, FrontendError> {
    let tokens = lex(source).map_err(|d| FrontendError(vec![d]))?;
    let mut p = Parser { tokens, pos: 0, consts: HashMap::new(), param: None, guard_prefixes: Vec::new() };
    let e = p.expr().map_err(|d| FrontendError(vec![d]))?;
    p.expect_eof().map_err(|d| FrontendError(vec![d]))?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    consts: HashMap<String, i32>,
    /// Packet parameter name, known once the transaction header is parsed.
    param: Option<String>,
    /// Field-access prefixes seen before the parameter name was known.
    guard_prefixes: Vec<(String, Span)>,
}

fn syntax(span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(span, DiagnosticKind::Syntax, msg)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(syntax(self.span(), format!("expected `{p}`, found {}", describe(self.peek()))))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_ident(kw) {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.span(), format!("expected `{kw}`, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok((s, span))
            }
            other => Err(syntax(span, format!("expected identifier, found {}", describe(&other)))),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => Err(syntax(self.span(), format!("unexpected {} after end of input", describe(other)))),
        }
    }

    fn program(&mut self) -> PResult<ProgramAst> {
        let mut consts = Vec::new();
        let mut packet_fields: Option<Vec<String>> = None;
        let mut states = Vec::new();
        let mut guard = None;
        let mut transaction = None;
        loop {
            let span = self.span();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Define => {
                    self.bump();
                    let (name, _) = self.ident()?;
                    let value = self.const_expr()?;
                    self.define_const(&name, value, span)?;
                    consts.push(ConstDecl { name, value });
                }
                Tok::Ident(kw) if kw == "const" => {
                    self.bump();
                    self.expect_keyword("int")?;
                    let (name, _) = self.ident()?;
                    self.expect_punct("=")?;
                    let value = self.const_expr()?;
                    self.expect_punct(";")?;
                    self.define_const(&name, value, span)?;
                    consts.push(ConstDecl { name, value });
                }
                Tok::Ident(kw) if kw == "struct" => {
                    if packet_fields.is_some() {
                        return Err(Diagnostic::error(span, DiagnosticKind::Redeclaration, "`struct Packet` declared twice"));
                    }
                    packet_fields = Some(self.packet_struct()?);
                }
                Tok::Ident(kw) if kw == "int" => {
                    states.push(self.state_decl()?);
                }
                Tok::Ident(kw) if kw == "guard" => {
                    if transaction.is_some() {
                        return Err(syntax(span, "a guard must precede the transaction"));
                    }
                    if guard.is_some() {
                        return Err(Diagnostic::error(span, DiagnosticKind::Redeclaration, "only one guard is allowed"));
                    }
                    self.bump();
                    self.expect_punct("(")?;
                    guard = Some(self.expr()?);
                    self.expect_punct(")")?;
                    self.eat_punct(";");
                }
                Tok::Ident(kw) if kw == "void" => {
                    if transaction.is_some() {
                        return Err(Diagnostic::error(span, DiagnosticKind::Redeclaration, "only one packet transaction is allowed"));
                    }
                    transaction = Some(self.transaction()?);
                }
                Tok::Ident(kw) if kw == "malloc" || kw == "free" || kw == "new" => {
                    return Err(Diagnostic::restriction(span, Restriction::NoHeap, format!("`{kw}`")));
                }
                other => return Err(syntax(span, format!("expected a declaration, found {}", describe(&other)))),
            }
        }
        let Some((name, param, body)) = transaction else {
            return Err(syntax(self.span(), "missing packet transaction `void NAME(struct Packet pkt) { ... }`"));
        };
        for (prefix, span) in std::mem::take(&mut self.guard_prefixes) {
            if prefix != param {
                return Err(Diagnostic::error(
                    span,
                    DiagnosticKind::UnknownIdentifier,
                    format!("unknown identifier `{prefix}` (the packet parameter is `{param}`)"),
                ));
            }
        }
        Ok(ProgramAst { consts, packet_fields: packet_fields.unwrap_or_default(), states, guard, name, param, body })
    }

    fn define_const(&mut self, name: &str, value: i32, span: Span) -> PResult<()> {
        if self.consts.insert(name.to_string(), value).is_some() {
            return Err(Diagnostic::error(span, DiagnosticKind::Redeclaration, format!("constant `{name}` redefined")));
        }
        Ok(())
    }

    fn const_expr(&mut self) -> PResult<i32> {
        let span = self.span();
        let e = self.ternary()?;
        eval_const(&e).ok_or_else(|| syntax(span, "expected a constant expression"))
    }

    fn packet_struct(&mut self) -> PResult<Vec<String>> {
        self.expect_keyword("struct")?;
        let span = self.span();
        let (name, _) = self.ident()?;
        if name != "Packet" {
            return Err(syntax(span, format!("only `struct Packet` may be declared, found `struct {name}`")));
        }
        self.expect_punct("{")?;
        let mut fields: Vec<String> = Vec::new();
        while !self.eat_punct("}") {
            self.expect_keyword("int")?;
            if self.is_punct("*") {
                return Err(Diagnostic::restriction(self.span(), Restriction::NoPointers, "pointer-typed field"));
            }
            let (f, fspan) = self.ident()?;
            if self.is_punct("[") {
                return Err(Diagnostic::restriction(fspan, Restriction::NoUnparsedData, format!("array field `{f}`")));
            }
            if fields.contains(&f) {
                return Err(Diagnostic::error(fspan, DiagnosticKind::Redeclaration, format!("field `{f}` declared twice")));
            }
            fields.push(f);
            self.expect_punct(";")?;
        }
        self.expect_punct(";")?;
        Ok(fields)
    }

    fn state_decl(&mut self) -> PResult<StateDecl> {
        self.expect_keyword("int")?;
        if self.is_punct("*") {
            return Err(Diagnostic::restriction(self.span(), Restriction::NoPointers, "pointer declaration"));
        }
        let (name, span) = self.ident()?;
        let size = if self.eat_punct("[") {
            let sspan = self.span();
            let n = self.const_expr()?;
            self.expect_punct("]")?;
            if n <= 0 {
                return Err(syntax(sspan, format!("array `{name}` must have a positive size")));
            }
            Some(n as u32)
        } else {
            None
        };
        let mut init = 0;
        if self.eat_punct("=") {
            if size.is_some() {
                self.expect_punct("{")?;
                init = self.const_expr()?;
                self.expect_punct("}")?;
            } else {
                init = self.const_expr()?;
            }
        }
        self.expect_punct(";")?;
        if self.consts.contains_key(&name) {
            return Err(Diagnostic::error(span, DiagnosticKind::Redeclaration, format!("`{name}` is already a constant")));
        }
        Ok(StateDecl { name, size, init })
    }

    fn transaction(&mut self) -> PResult<(String, String, Vec<Stmt>)> {
        self.expect_keyword("void")?;
        let (name, _) = self.ident()?;
        self.expect_punct("(")?;
        self.expect_keyword("struct")?;
        let span = self.span();
        let (ty, _) = self.ident()?;
        if ty != "Packet" {
            return Err(syntax(span, format!("the transaction parameter must have type `struct Packet`, found `struct {ty}`")));
        }
        if self.is_punct("*") {
            return Err(Diagnostic::restriction(self.span(), Restriction::NoPointers, "pointer parameter"));
        }
        let (param, _) = self.ident()?;
        self.expect_punct(")")?;
        self.param = Some(param.clone());
        self.expect_punct("{")?;
        let body = self.stmts_until_brace()?;
        Ok((name, param, body))
    }

    fn stmts_until_brace(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(syntax(self.span(), "unexpected end of input, expected `}`"));
            }
            if let Some(s) = self.stmt()? {
                out.push(s);
            }
        }
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Option<Stmt>> {
        let span = self.span();
        if self.eat_punct(";") {
            return Ok(None);
        }
        if self.eat_punct("{") {
            return Ok(Some(Stmt::Block(self.stmts_until_brace()?)));
        }
        if let Tok::Ident(kw) = self.peek().clone() {
            match kw.as_str() {
                "while" | "for" | "do" => {
                    return Err(Diagnostic::restriction(span, Restriction::NoIteration, format!("`{kw}` loop")));
                }
                "goto" | "break" | "continue" => {
                    return Err(Diagnostic::restriction(span, Restriction::NoJumps, format!("`{kw}`")));
                }
                "return" => return Err(syntax(span, "`return` is not supported in a packet transaction")),
                "int" => {
                    if matches!(self.peek_at(1), Tok::Punct("*")) {
                        return Err(Diagnostic::restriction(span, Restriction::NoPointers, "pointer declaration"));
                    }
                    return Err(syntax(span, "local variables are not supported; use packet fields"));
                }
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let then_branch = self.branch()?;
                    let else_branch = if self.is_ident("else") {
                        self.bump();
                        self.branch()?
                    } else {
                        Vec::new()
                    };
                    return Ok(Some(Stmt::If { cond, then_branch, else_branch, span }));
                }
                _ => {}
            }
        }
        if self.is_punct("*") {
            return Err(Diagnostic::restriction(span, Restriction::NoPointers, "pointer dereference"));
        }
        let target = self.lvalue()?;
        let value = if self.eat_punct("=") {
            self.expr()?
        } else if self.eat_punct("++") {
            Expr::binary(BinOp::Add, target.to_expr(), Expr::Int(1))
        } else if self.eat_punct("--") {
            Expr::binary(BinOp::Sub, target.to_expr(), Expr::Int(1))
        } else {
            let op = match self.peek() {
                Tok::Punct("+=") => BinOp::Add,
                Tok::Punct("-=") => BinOp::Sub,
                Tok::Punct("*=") => BinOp::Mul,
                Tok::Punct("/=") => BinOp::Div,
                Tok::Punct("&=") => BinOp::BitAnd,
                Tok::Punct("|=") => BinOp::BitOr,
                Tok::Punct("^=") => BinOp::BitXor,
                Tok::Punct("<<=") => BinOp::Shl,
                Tok::Punct(">>=") => BinOp::Shr,
                other => return Err(syntax(self.span(), format!("expected assignment, found {}", describe(other)))),
            };
            self.bump();
            let rhs = self.expr()?;
            Expr::binary(op, target.to_expr(), rhs)
        };
        self.expect_punct(";")?;
        Ok(Some(Stmt::Assign { target, value, span }))
    }

    /// A branch body; single statements are wrapped into a list.
    fn branch(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat_punct("{") {
            return self.stmts_until_brace();
        }
        Ok(self.stmt()?.into_iter().collect())
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let span = self.span();
        match self.primary()? {
            Expr::Field(f, _) => Ok(LValue::Field(f)),
            Expr::Var(v, _) => Ok(LValue::Var(v)),
            Expr::Index(a, i, _) => Ok(LValue::Index(a, *i)),
            Expr::Int(_) => Err(syntax(span, "cannot assign to a constant")),
            _ => Err(syntax(span, "invalid assignment target")),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.ternary()
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.eat_punct("?") {
            let a = self.expr()?;
            self.expect_punct(":")?;
            let b = self.ternary()?;
            return Ok(Expr::ternary(cond, a, b));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let Some(op) = self.peek_binop() else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else { return None };
        BinOp::ALL.iter().copied().find(|op| op.symbol() == *p)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("!") => Some(UnOp::Not),
            Tok::Punct("~") => Some(UnOp::BitNot),
            Tok::Punct("+") => {
                self.bump();
                return self.unary();
            }
            Tok::Punct("*") => {
                return Err(Diagnostic::restriction(span, Restriction::NoPointers, "pointer dereference"));
            }
            Tok::Punct("&") => {
                return Err(Diagnostic::restriction(span, Restriction::NoPointers, "address-of operator"));
            }
            _ => None,
        };
        let Some(op) = op else { return self.primary() };
        self.bump();
        let operand = self.unary()?;
        Ok(match (op, operand) {
            // Negative literals are a single integer node.
            (UnOp::Neg, Expr::Int(v)) => Expr::Int(v.wrapping_neg()),
            (op, e) => Expr::Unary(op, Box::new(e)),
        })
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v as u32 as i32))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                match name.as_str() {
                    "true" => {
                        self.bump();
                        return Ok(Expr::Int(1));
                    }
                    "false" => {
                        self.bump();
                        return Ok(Expr::Int(0));
                    }
                    "malloc" | "calloc" | "realloc" | "free" | "new" => {
                        return Err(Diagnostic::restriction(span, Restriction::NoHeap, format!("`{name}`")));
                    }
                    "while" | "for" | "do" => {
                        return Err(Diagnostic::restriction(span, Restriction::NoIteration, format!("`{name}` loop")));
                    }
                    _ => {}
                }
                if is_reserved(&name) {
                    return Err(syntax(span, format!("unexpected keyword `{name}`")));
                }
                self.bump();
                if self.is_punct("->") {
                    return Err(Diagnostic::restriction(self.span(), Restriction::NoPointers, "`->` member access"));
                }
                if self.eat_punct(".") {
                    let (field, fspan) = self.ident()?;
                    match &self.param {
                        Some(p) if *p != name => {
                            return Err(Diagnostic::error(
                                span,
                                DiagnosticKind::UnknownIdentifier,
                                format!("unknown identifier `{name}` (the packet parameter is `{p}`)"),
                            ));
                        }
                        Some(_) => {}
                        None => self.guard_prefixes.push((name, span)),
                    }
                    if self.is_punct("[") {
                        return Err(Diagnostic::restriction(fspan, Restriction::NoUnparsedData, format!("indexing packet field `{field}`")));
                    }
                    return Ok(Expr::Field(field, span));
                }
                if self.eat_punct("[") {
                    let idx = self.expr()?;
                    self.expect_punct("]")?;
                    return Ok(Expr::Index(name, Box::new(idx), span));
                }
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    return Ok(Expr::Call(name, args, span));
                }
                if let Some(&v) = self.consts.get(&name) {
                    return Ok(Expr::Int(v));
                }
                Ok(Expr::Var(name, span))
            }
            other => Err(syntax(span, format!("expected an expression, found {}", describe(&other)))),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "int" | "void" | "struct" | "const" | "if" | "else" | "guard" | "while" | "for" | "do" | "goto" | "break"
            | "continue" | "return" | "true" | "false"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Define => "`#define`".to_string(),
        Tok::Eof => "end of input".to_string(),
    }
}

fn eval_const(e: &Expr) -> Option<i32> {
    Some(match e {
        Expr::Int(v) => *v,
        Expr::Unary(op, a) => op.apply(eval_const(a)?),
        Expr::Binary(op, a, b) => op.apply(eval_const(a)?, eval_const(b)?),
        Expr::Ternary(c, a, b) => {
            if eval_const(c)? != 0 {
                eval_const(a)?
            } else {
                eval_const(b)?
            }
        }
        _ => return None,
    })
}
