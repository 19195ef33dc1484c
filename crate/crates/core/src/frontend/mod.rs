//! Parsing and validation of packet-transaction source.

pub mod ast;
mod lexer;
mod parser;
pub mod printer;
mod validate;

use std::fmt;

pub use ast::{ConstDecl, Expr, LValue, ProgramAst, Span, StateDecl, Stmt};
pub use parser::{parse, parse_expr};
pub use printer::{print_body, print_expr, print_program};
pub use validate::{validate, ValidatedAst};

/// Language restrictions enforced by the frontend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restriction {
    NoIteration,
    NoJumps,
    NoPointers,
    NoHeap,
    ConstantArrayIndex,
    NoUnparsedData,
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Restriction::NoIteration => "No iteration (while, for, do-while)",
            Restriction::NoJumps => "No goto, break, or continue",
            Restriction::NoPointers => "No pointers",
            Restriction::NoHeap => "No dynamic memory allocation / heap",
            Restriction::ConstantArrayIndex => "Array index is constant for each transaction execution",
            Restriction::NoUnparsedData => "No access to data i.e. unparsed portion of the packet",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Restriction(Restriction),
    UnknownIdentifier,
    Redeclaration,
    IntrinsicArity,
    InvalidGuard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub fn error(span: Span, kind: DiagnosticKind, message: impl Into<String>) -> Diagnostic {
        Diagnostic { span, severity: Severity::Error, kind, message: message.into() }
    }

    pub fn restriction(span: Span, r: Restriction, detail: impl fmt::Display) -> Diagnostic {
        Diagnostic::error(span, DiagnosticKind::Restriction(r), format!("restriction violated: {r}: {detail}"))
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}: {}", self.span.line, self.span.col, self.severity, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.span.line, self.span.col, self.severity, self.message)
    }
}

/// One or more diagnostics from parsing or validation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct FrontendError(pub Vec<Diagnostic>);

impl FrontendError {
    pub fn render(&self, file: &str) -> String {
        self.0.iter().map(|d| d.render(file)).collect::<Vec<_>>().join("\n")
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.0
    }
}

/// Parse and validate in one step.
pub fn load(source: &str) -> Result<ValidatedAst, FrontendError> {
    let ast = parse(source)?;
    validate(ast)
}
