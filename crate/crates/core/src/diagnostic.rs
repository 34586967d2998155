//! Source spans, diagnostics, and their textual rendering.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// A 1-based line/column region of a source file. `end` is exclusive.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, start: (u32, u32), end: (u32, u32)) -> Self {
        debug_assert!(start <= end);
        SourceSpan {
            file: file.into(),
            start_line: start.0,
            start_col: start.1,
            end_line: end.0,
            end_col: end.1,
        }
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        let start = (self.start_line, self.start_col).min((other.start_line, other.start_col));
        let end = (self.end_line, self.end_col).max((other.end_line, other.end_col));
        SourceSpan::new(self.file.clone(), start, end)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
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

/// Machine-readable diagnostic category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticCode {
    UnterminatedString,
    IllegalCharacter,
    InvalidNumber,
    UnexpectedToken,
    MissingSection,
    UnbalancedBrace,
    ModuleNotFound,
    ImportCycle,
    DuplicateView,
    NameClash,
    UnknownView,
    UnknownProperty,
    UnknownFunction,
    ArityMismatch,
    ConflictingWriters,
    TypeMismatch,
    WriteToReadOnly,
    ExportUnknownVariable,
    ExportOfViewProperty,
    UnusedVariable,
    ConstraintCycle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub span: SourceSpan,
    /// Secondary locations (e.g. the first writer of a conflicting pair).
    pub notes: Vec<(SourceSpan, String)>,
}

impl Diagnostic {
    pub fn error(code: DiagnosticCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
            notes: Vec::new(),
        }
    }

    pub fn warning(code: DiagnosticCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, span, message)
        }
    }

    pub fn with_note(mut self, span: SourceSpan, note: impl Into<String>) -> Self {
        self.notes.push((span, note.into()));
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// The JSON item shape pushed to preview clients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticItem {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub severity: Severity,
    pub message: String,
}

impl From<&Diagnostic> for DiagnosticItem {
    fn from(d: &Diagnostic) -> Self {
        DiagnosticItem {
            file: d.span.file.clone(),
            line: d.span.start_line,
            col: d.span.start_col,
            severity: d.severity,
            message: d.message.clone(),
        }
    }
}

/// File name → source text, used to print excerpts.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    files: BTreeMap<String, String>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(file: impl Into<String>, source: impl Into<String>) -> Self {
        let mut map = Self::new();
        map.insert(file, source);
        map
    }

    pub fn insert(&mut self, file: impl Into<String>, source: impl Into<String>) {
        self.files.insert(file.into(), source.into());
    }

    pub fn get(&self, file: &str) -> Option<&str> {
        self.files.get(file).map(String::as_str)
    }
}

/// Renders diagnostics as `file:line:col: severity: message` followed by a
/// caret-underlined excerpt of the offending line.
pub fn format_diagnostics(diags: &[Diagnostic], sources: &SourceMap) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.to_string());
        out.push('\n');
        excerpt(&mut out, &d.span, sources);
        for (span, note) in &d.notes {
            out.push_str(&format!("  = note: {span}: {note}\n"));
        }
    }
    out
}

fn excerpt(out: &mut String, span: &SourceSpan, sources: &SourceMap) {
    let Some(line) = sources
        .get(&span.file)
        .and_then(|src| src.lines().nth(span.start_line.saturating_sub(1) as usize))
    else {
        return;
    };
    let start = span.start_col.max(1) as usize;
    let width = if span.end_line == span.start_line && span.end_col as usize > start {
        span.end_col as usize - start
    } else {
        1
    };
    out.push_str("  | ");
    out.push_str(line);
    out.push('\n');
    out.push_str("  | ");
    // Tabs are kept so the caret lines up under the same terminal column.
    for ch in line.chars().take(start - 1) {
        out.push(if ch == '\t' { '\t' } else { ' ' });
    }
    out.push_str(&"^".repeat(width));
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_formats_to_empty_string() {
        assert_eq!(format_diagnostics(&[], &SourceMap::new()), "");
    }

    #[test]
    fn header_and_caret() {
        let src = "@gui\n  box #\n";
        let d = Diagnostic::error(
            DiagnosticCode::IllegalCharacter,
            SourceSpan::new("a.cgui", (2, 7), (2, 8)),
            "illegal character '#'",
        );
        let text = format_diagnostics(&[d], &SourceMap::single("a.cgui", src));
        assert_eq!(
            text,
            "a.cgui:2:7: error: illegal character '#'\n  |   box #\n  |       ^\n"
        );
    }

    #[test]
    fn notes_are_listed() {
        let d = Diagnostic::error(
            DiagnosticCode::ConflictingWriters,
            SourceSpan::new("a.cgui", (5, 3), (5, 11)),
            "variable 'dialog.W' has multiple '<<' writers",
        )
        .with_note(SourceSpan::new("a.cgui", (4, 3), (4, 11)), "first writer");
        let text = format_diagnostics(&[d], &SourceMap::new());
        assert!(text.starts_with("a.cgui:5:3: error: variable 'dialog.W' has multiple '<<' writers\n"));
        assert!(text.contains("note: a.cgui:4:3: first writer"));
    }
}
