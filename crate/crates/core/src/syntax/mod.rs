//! Surface language: tokens, trees, labels and printing.

pub mod annotate;
pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use annotate::{annotate, strip};
pub use ast::{Const, EndpointRef, Expr, ExprKind, Name, Prim, Span, E};
pub use lexer::{tokenize, LexError, Tok, Token};
pub use parser::{parse, parse_program, ParseError, SyntaxError};
pub use pretty::pretty;
