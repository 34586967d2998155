use crate::diagnostic::{Diagnostic, DiagnosticCode, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    SectionMarker,
    Ident,
    Number,
    StringLit,
    Symbol,
    Newline,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Verbatim lexeme, including quotes for string literals.
    pub text: String,
    pub span: SourceSpan,
    /// Byte offset of the lexeme in the source.
    pub offset: usize,
}

impl Token {
    pub fn is_symbol(&self, sym: &str) -> bool {
        self.kind == TokenKind::Symbol && self.text == sym
    }

    /// Decoded contents of a string literal (quotes stripped, escapes applied).
    pub fn string_value(&self) -> String {
        let inner = self
            .text
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(&self.text);
        let mut out = String::with_capacity(inner.len());
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                match chars.next() {
                    Some(e @ ('"' | '\\')) => out.push(e),
                    Some(other) => {
                        out.push('\\');
                        out.push(other);
                    }
                    None => out.push('\\'),
                }
            } else {
                out.push(c);
            }
        }
        out
    }
}

pub const SECTION_MARKERS: [&str; 3] = ["@gui", "@constraints", "@export"];

const TWO_CHAR_SYMBOLS: [&str; 3] = ["<<", "<=", ">="];
const ONE_CHAR_SYMBOLS: &str = "{}().,:<>+-*/";

struct Cursor<'a> {
    src: &'a str,
    file: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn span_from(&self, start: (u32, u32)) -> SourceSpan {
        SourceSpan::new(self.file, start, self.here())
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens. Lexing never stops early: bad characters and
/// unterminated strings are reported and skipped, so the returned token list
/// always ends with `Eof`.
pub fn tokenize(source: &str, file: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        src: source,
        file,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let start = cur.here();
        let offset = cur.pos;
        let push = |tokens: &mut Vec<Token>, cur: &Cursor<'_>, kind| {
            tokens.push(Token {
                kind,
                text: cur.src[offset..cur.pos].to_string(),
                span: cur.span_from(start),
                offset,
            })
        };

        match c {
            '\n' => {
                cur.bump();
                push(&mut tokens, &cur, TokenKind::Newline);
            }
            c if c.is_whitespace() => {
                cur.bump();
            }
            '/' if cur.peek_at(1) == Some('/') => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            '@' => {
                cur.bump();
                while cur.peek().is_some_and(is_ident_continue) {
                    cur.bump();
                }
                let text = &cur.src[offset..cur.pos];
                if SECTION_MARKERS.contains(&text) {
                    push(&mut tokens, &cur, TokenKind::SectionMarker);
                } else {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::IllegalCharacter,
                        cur.span_from(start),
                        format!("unknown section marker '{text}'"),
                    ));
                }
            }
            c if is_ident_start(c) => {
                while cur.peek().is_some_and(is_ident_continue) {
                    cur.bump();
                }
                push(&mut tokens, &cur, TokenKind::Ident);
            }
            c if c.is_ascii_digit() => {
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
                if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                        cur.bump();
                    }
                }
                let text = &cur.src[offset..cur.pos];
                if text.parse::<f64>().is_ok_and(f64::is_finite) {
                    push(&mut tokens, &cur, TokenKind::Number);
                } else {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::InvalidNumber,
                        cur.span_from(start),
                        format!("number literal '{text}' is out of range"),
                    ));
                }
            }
            '"' => {
                cur.bump();
                let mut closed = false;
                while let Some(c) = cur.peek() {
                    match c {
                        '\n' => break,
                        '\\' => {
                            cur.bump();
                            if cur.peek().is_some_and(|c| c != '\n') {
                                cur.bump();
                            }
                        }
                        '"' => {
                            cur.bump();
                            closed = true;
                            break;
                        }
                        _ => {
                            cur.bump();
                        }
                    }
                }
                if closed {
                    push(&mut tokens, &cur, TokenKind::StringLit);
                } else {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::UnterminatedString,
                        cur.span_from(start),
                        "unterminated string literal",
                    ));
                }
            }
            _ => {
                let rest = &cur.src[cur.pos..];
                if let Some(sym) = TWO_CHAR_SYMBOLS.iter().find(|s| rest.starts_with(*s)) {
                    cur.bump();
                    cur.bump();
                    debug_assert_eq!(&cur.src[offset..cur.pos], *sym);
                    push(&mut tokens, &cur, TokenKind::Symbol);
                } else if ONE_CHAR_SYMBOLS.contains(c) {
                    cur.bump();
                    push(&mut tokens, &cur, TokenKind::Symbol);
                } else {
                    cur.bump();
                    diags.push(Diagnostic::error(
                        DiagnosticCode::IllegalCharacter,
                        cur.span_from(start),
                        format!("illegal character '{}'", c.escape_default()),
                    ));
                }
            }
        }
    }

    tokens.push(Token {
        kind: TokenKind::Eof,
        text: String::new(),
        span: cur.span_from(cur.here()),
        offset: cur.pos,
    });
    (tokens, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds_and_text(src: &str) -> Vec<(TokenKind, String)> {
        let (toks, diags) = tokenize(src, "t.cgui");
        assert!(diags.is_empty(), "{diags:?}");
        toks.into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn view_tree_line() {
        use TokenKind::*;
        let got = kinds_and_text("dialog{ ok cancel }");
        let want = vec![
            (Ident, "dialog"),
            (Symbol, "{"),
            (Ident, "ok"),
            (Ident, "cancel"),
            (Symbol, "}"),
            (Eof, ""),
        ];
        let want: Vec<_> = want.into_iter().map(|(k, t)| (k, t.to_string())).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_source_is_just_eof() {
        assert_eq!(kinds_and_text(""), vec![(TokenKind::Eof, String::new())]);
    }

    #[test]
    fn comment_is_skipped() {
        assert_eq!(
            kinds_and_text("// Property relationships\n"),
            vec![(TokenKind::Newline, "\n".into()), (TokenKind::Eof, String::new())]
        );
    }

    #[test]
    fn operators_and_literals() {
        let got = kinds_and_text("a.W << -1.5 * \"x\\\"y\" <= >= < >");
        let texts: Vec<_> = got.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(
            texts,
            [
                "a",
                ".",
                "W",
                "<<",
                "-",
                "1.5",
                "*",
                "\"x\\\"y\"",
                "<=",
                ">=",
                "<",
                ">",
                ""
            ]
        );
        let (toks, _) = tokenize("\"x\\\"y\\\\\"", "t");
        assert_eq!(toks[0].string_value(), "x\"y\\");
    }

    #[test]
    fn bad_characters_are_reported_and_skipped() {
        let (toks, diags) = tokenize("a # b\n\"open", "t.cgui");
        assert_eq!(diags.len(), 2);
        assert_eq!(diags[0].code, DiagnosticCode::IllegalCharacter);
        assert_eq!((diags[0].span.start_line, diags[0].span.start_col), (1, 3));
        assert_eq!(diags[1].code, DiagnosticCode::UnterminatedString);
        let idents: Vec<_> = toks
            .iter()
            .filter(|t| t.kind == TokenKind::Ident)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(idents, ["a", "b"]);
    }

    #[test]
    fn section_markers() {
        let (toks, diags) = tokenize("@gui\n@constraints\n@export\n@bogus", "t");
        let markers: Vec<_> = toks
            .iter()
            .filter(|t| t.kind == TokenKind::SectionMarker)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(markers, SECTION_MARKERS);
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn spans_are_one_based() {
        let (toks, _) = tokenize("@gui\n  box", "f.cgui");
        let b = &toks[2];
        assert_eq!(b.text, "box");
        assert_eq!(b.span, SourceSpan::new("f.cgui", (2, 3), (2, 6)));
    }

    proptest! {
        // Whatever sits between tokens must be whitespace or a comment.
        #[test]
        fn lexemes_and_trivia_reconstruct_source(src in "[a-z0-9 .{}()<>=+*/\\-\"@:,\n\t]{0,80}") {
            let (toks, diags) = tokenize(&src, "p");
            let mut pos = 0;
            for t in &toks {
                prop_assert!(t.offset >= pos);
                if diags.is_empty() {
                    let gap = &src[pos..t.offset];
                    let code = gap.find("//").map_or(gap, |i| &gap[..i]);
                    prop_assert!(code.trim().is_empty(), "gap {:?}", gap);
                    prop_assert!(!gap.contains('\n'));
                }
                prop_assert_eq!(&src[t.offset..t.offset + t.text.len()], t.text.as_str());
                pos = t.offset + t.text.len();
            }
            prop_assert_eq!(pos, src.len());
        }

        #[test]
        fn numbers_parse_to_finite_doubles(src in "[0-9]{1,30}(\\.[0-9]{1,20})?") {
            let (toks, diags) = tokenize(&src, "p");
            prop_assert!(diags.is_empty());
            prop_assert_eq!(toks[0].kind, TokenKind::Number);
            prop_assert!(toks[0].text.parse::<f64>().unwrap().is_finite());
        }
    }
}
