use super::ast::Span;
use super::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    /// Punctuation and operators, longest match first.
    Punct(&'static str),
    /// `#define` at the start of a line.
    Define,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

const PUNCTS: [&str; 40] = [
    "<<=", ">>=", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "->", "&=", "|=",
    "^=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^", "?", ":", ";", ",", ".", "(", ")",
];
const BRACKETS: [&str; 4] = ["{", "}", "[", "]"];

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if bytes[*i] == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < bytes.len() {
        let c = bytes[i];
        let span = Span::new(line, col);
        if c.is_ascii_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
        } else if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
        } else if src[i..].starts_with("/*") {
            let Some(end) = src[i + 2..].find("*/") else {
                return Err(Diagnostic::error(span, DiagnosticKind::Syntax, "unterminated comment"));
            };
            advance(&mut i, &mut line, &mut col, end + 4);
        } else if c == b'#' {
            if src[i..].starts_with("#define") {
                out.push(Token { tok: Tok::Define, span });
                advance(&mut i, &mut line, &mut col, 7);
            } else {
                return Err(Diagnostic::error(
                    span,
                    DiagnosticKind::Syntax,
                    "preprocessor directives other than `#define NAME value` are not supported",
                ));
            }
        } else if c.is_ascii_digit() {
            let start = i;
            let radix = if src[i..].starts_with("0x") || src[i..].starts_with("0X") {
                advance(&mut i, &mut line, &mut col, 2);
                16
            } else {
                10
            };
            let digits = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text = &src[digits..i];
            let value = i64::from_str_radix(text, radix).map_err(|_| {
                Diagnostic::error(span, DiagnosticKind::Syntax, format!("invalid integer literal `{}`", &src[start..i]))
            })?;
            if value > u32::MAX as i64 {
                return Err(Diagnostic::error(
                    span,
                    DiagnosticKind::Syntax,
                    format!("integer literal `{}` does not fit in 32 bits", &src[start..i]),
                ));
            }
            out.push(Token { tok: Tok::Int(value), span });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), span });
        } else if let Some(p) = PUNCTS.iter().chain(BRACKETS.iter()).find(|p| src[i..].starts_with(**p)) {
            out.push(Token { tok: Tok::Punct(p), span });
            advance(&mut i, &mut line, &mut col, p.len());
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(Diagnostic::error(span, DiagnosticKind::Syntax, format!("unexpected character `{ch}`")));
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col) });
    Ok(out)
}
