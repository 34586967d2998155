//! Lexing, parsing, and printing of `.cgui` source.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{module_name_for, parse, parse_source, RESERVED_NAMESPACES};
pub use printer::{print_expr, print_module};
