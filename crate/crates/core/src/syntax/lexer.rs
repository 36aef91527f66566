//! Tokenizer. Line comments start with `--`.

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use super::ast::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Let,
    Val,
    Fun,
    Fn,
    Fix,
    In,
    If,
    Then,
    Else,
    Case,
    Spawn,
    Request,
    Accept,
    Send,
    Recv,
    Select,
    Deleg,
    Resume,
    True,
    False,
    Not,
    Fst,
    Snd,
    Ident(Rc<str>),
    /// Capitalised identifier: a choice label.
    Label(Rc<str>),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Eq,
    EqEq,
    Arrow,
    Plus,
    Minus,
    Star,
    Lt,
    Le,
    Gt,
    Ge,
    Underscore,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Let => "LET",
            Tok::Val => "VAL",
            Tok::Fun => "FUN",
            Tok::Fn => "FN",
            Tok::Fix => "FIX",
            Tok::In => "IN",
            Tok::If => "IF",
            Tok::Then => "THEN",
            Tok::Else => "ELSE",
            Tok::Case => "CASE",
            Tok::Spawn => "SPAWN",
            Tok::Request => "REQUEST",
            Tok::Accept => "ACCEPT",
            Tok::Send => "SEND",
            Tok::Recv => "RECV",
            Tok::Select => "SELECT",
            Tok::Deleg => "DELEG",
            Tok::Resume => "RESUME",
            Tok::True => "TRUE",
            Tok::False => "FALSE",
            Tok::Not => "NOT",
            Tok::Fst => "FST",
            Tok::Snd => "SND",
            Tok::Ident(x) => return write!(f, "IDENT {x}"),
            Tok::Label(x) => return write!(f, "LABEL {x}"),
            Tok::Int(n) => return write!(f, "INT {n}"),
            Tok::LParen => "LPAREN",
            Tok::RParen => "RPAREN",
            Tok::LBrace => "LBRACE",
            Tok::RBrace => "RBRACE",
            Tok::Comma => "COMMA",
            Tok::Semi => "SEMI",
            Tok::Colon => "COLON",
            Tok::Eq => "EQ",
            Tok::EqEq => "EQEQ",
            Tok::Arrow => "ARROW",
            Tok::Plus => "PLUS",
            Tok::Minus => "MINUS",
            Tok::Star => "STAR",
            Tok::Lt => "LT",
            Tok::Le => "LE",
            Tok::Gt => "GT",
            Tok::Ge => "GE",
            Tok::Underscore => "UNDERSCORE",
        };
        f.write_str(s)
    }
}

impl Tok {
    /// Source spelling, used by the pretty-printer and error messages.
    pub fn spelling(&self) -> String {
        match self {
            Tok::Ident(x) | Tok::Label(x) => x.to_string(),
            Tok::Int(n) => n.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Comma => ",".into(),
            Tok::Semi => ";".into(),
            Tok::Colon => ":".into(),
            Tok::Eq => "=".into(),
            Tok::EqEq => "==".into(),
            Tok::Arrow => "=>".into(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Lt => "<".into(),
            Tok::Le => "<=".into(),
            Tok::Gt => ">".into(),
            Tok::Ge => ">=".into(),
            Tok::Underscore => "_".into(),
            other => other.to_string().to_lowercase(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("{span}: illegal character {ch:?}")]
    IllegalChar { ch: char, span: Span },
    #[error("{span}: malformed integer literal {text}")]
    BadInt { text: String, span: Span },
}

impl LexError {
    pub fn span(&self) -> Span {
        match self {
            LexError::IllegalChar { span, .. } | LexError::BadInt { span, .. } => *span,
        }
    }
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "let" => Tok::Let,
        "val" => Tok::Val,
        "fun" => Tok::Fun,
        "fn" => Tok::Fn,
        "fix" => Tok::Fix,
        "in" => Tok::In,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "case" => Tok::Case,
        "spawn" => Tok::Spawn,
        "request" => Tok::Request,
        "accept" => Tok::Accept,
        "send" => Tok::Send,
        "recv" => Tok::Recv,
        "select" => Tok::Select,
        "deleg" => Tok::Deleg,
        "resume" => Tok::Resume,
        "true" => Tok::True,
        "false" => Tok::False,
        "not" => Tok::Not,
        "fst" => Tok::Fst,
        "snd" => Tok::Snd,
        _ => return None,
    })
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let at = |i: usize| bytes.get(i).map(|p| p.1);
    let offset = |i: usize| bytes.get(i).map(|p| p.0).unwrap_or(src.len());
    while i < bytes.len() {
        let c = bytes[i].1;
        let start = Span { start: offset(i), end: offset(i), line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && at(i + 1) == Some('-') {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let mut j = i + 1;
        let tok = if c.is_ascii_digit() {
            while at(j).is_some_and(|d| d.is_ascii_alphanumeric() || d == '_') {
                j += 1;
            }
            let text = &src[offset(i)..offset(j)];
            match text.parse::<i64>() {
                Ok(n) => Tok::Int(n),
                Err(_) => {
                    let span = Span { end: offset(j), ..start };
                    return Err(LexError::BadInt { text: text.to_string(), span });
                }
            }
        } else if c.is_alphabetic() || c == '_' {
            while at(j).is_some_and(|d| d.is_alphanumeric() || d == '_' || d == '\'') {
                j += 1;
            }
            let text = &src[offset(i)..offset(j)];
            if text == "_" {
                Tok::Underscore
            } else if let Some(k) = keyword(text) {
                k
            } else if c.is_uppercase() {
                Tok::Label(Rc::from(text))
            } else {
                Tok::Ident(Rc::from(text))
            }
        } else {
            let next = at(i + 1);
            let (t, len) = match (c, next) {
                ('=', Some('>')) => (Tok::Arrow, 2),
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('=', _) => (Tok::Eq, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                (';', _) => (Tok::Semi, 1),
                (':', _) => (Tok::Colon, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                _ => return Err(LexError::IllegalChar { ch: c, span: start }),
            };
            j = i + len;
            t
        };
        col += (j - i) as u32;
        out.push(Token { tok, span: Span { end: offset(j), ..start } });
        i = j;
    }
    Ok(out)
}
