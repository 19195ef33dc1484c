use serde::{Deserialize, Serialize};

use crate::ops::{BinOp, UnOp};

/// Source position. Spans never participate in equality, so ASTs that differ
/// only in layout compare equal.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Int(i32),
    /// `pkt.name`
    Field(String, Span),
    /// A bare identifier: a state scalar once validated.
    Var(String, Span),
    /// `array[index]`
    Index(String, Box<Expr>, Span),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>, Span),
}

impl Expr {
    pub fn field(name: impl Into<String>) -> Expr {
        Expr::Field(name.into(), Span::default())
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn ternary(c: Expr, a: Expr, b: Expr) -> Expr {
        Expr::Ternary(Box::new(c), Box::new(a), Box::new(b))
    }

    /// Pre-order walk over every sub-expression.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Int(_) | Expr::Field(..) | Expr::Var(..) => {}
            Expr::Index(_, i, _) => i.visit(f),
            Expr::Unary(_, a) => a.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Ternary(c, a, b) => {
                c.visit(f);
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args, _) => args.iter().for_each(|a| a.visit(f)),
        }
    }

    /// Bottom-up rewrite: `f` sees each node after its children were rewritten.
    pub fn rewrite(self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let e = match self {
            Expr::Index(n, i, s) => Expr::Index(n, Box::new(i.rewrite(f)), s),
            Expr::Unary(op, a) => Expr::Unary(op, Box::new(a.rewrite(f))),
            Expr::Binary(op, a, b) => Expr::Binary(op, Box::new(a.rewrite(f)), Box::new(b.rewrite(f))),
            Expr::Ternary(c, a, b) => {
                Expr::Ternary(Box::new(c.rewrite(f)), Box::new(a.rewrite(f)), Box::new(b.rewrite(f)))
            }
            Expr::Call(n, args, s) => Expr::Call(n, args.into_iter().map(|a| a.rewrite(f)).collect(), s),
            leaf => leaf,
        };
        f(e)
    }

    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Field(n, _) = e {
                out.push(n.as_str());
            }
        });
        out
    }

    /// Names of state variables (scalars or arrays) referenced.
    pub fn state_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            Expr::Var(n, _) | Expr::Index(n, _, _) => out.push(n.as_str()),
            _ => {}
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LValue {
    Field(String),
    Var(String),
    Index(String, Expr),
}

impl LValue {
    pub fn state_name(&self) -> Option<&str> {
        match self {
            LValue::Field(_) => None,
            LValue::Var(n) | LValue::Index(n, _) => Some(n),
        }
    }

    /// The same location read as an expression.
    pub fn to_expr(&self) -> Expr {
        match self {
            LValue::Field(n) => Expr::field(n.clone()),
            LValue::Var(n) => Expr::Var(n.clone(), Span::default()),
            LValue::Index(n, i) => Expr::Index(n.clone(), Box::new(i.clone()), Span::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stmt {
    Assign { target: LValue, value: Expr, span: Span },
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt>, span: Span },
    Block(Vec<Stmt>),
}

impl Stmt {
    pub fn assign(target: LValue, value: Expr) -> Stmt {
        Stmt::Assign { target, value, span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstDecl {
    pub name: String,
    pub value: i32,
}

/// A persistent switch state variable; `size` is `None` for scalars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDecl {
    pub name: String,
    pub size: Option<u32>,
    pub init: i32,
}

impl StateDecl {
    pub fn is_array(&self) -> bool {
        self.size.is_some()
    }

    /// Number of cells backing the variable.
    pub fn cells(&self) -> usize {
        self.size.unwrap_or(1) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramAst {
    pub consts: Vec<ConstDecl>,
    pub packet_fields: Vec<String>,
    pub states: Vec<StateDecl>,
    pub guard: Option<Expr>,
    pub name: String,
    /// Name of the packet parameter (`pkt` in `void f(struct Packet pkt)`).
    pub param: String,
    pub body: Vec<Stmt>,
}

impl ProgramAst {
    pub fn state(&self, name: &str) -> Option<&StateDecl> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn state_scalars(&self) -> impl Iterator<Item = &StateDecl> {
        self.states.iter().filter(|s| !s.is_array())
    }

    pub fn state_arrays(&self) -> impl Iterator<Item = &StateDecl> {
        self.states.iter().filter(|s| s.is_array())
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.packet_fields.iter().any(|f| f == name)
    }
}
