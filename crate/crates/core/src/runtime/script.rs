//! Line-oriented conformance scripts:
//!
//! ```text
//! # comment
//! set hours 10
//! pointer down 25 5
//! expect hand_h.Rot 305
//! expect node1.X 12.5 ~0.001
//! expect-reject            # the next set/pointer must be rejected
//! scene clock_101030.svg   # relative to the script's directory
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::instance::{GuiInstance, PointerEvent, PointerKind};
use crate::solver::UpdateResult;
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Set {
        var: String,
        value: String,
    },
    Pointer(PointerEvent),
    Expect {
        var: String,
        value: String,
        tolerance: Option<f64>,
    },
    ExpectReject,
    Scene(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptLine {
    pub line: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptParseError {
    pub line: usize,
    pub message: String,
}

fn parse_number(s: &str, line: usize, what: &str) -> Result<f64, ScriptParseError> {
    s.parse::<f64>().map_err(|_| ScriptParseError {
        line,
        message: format!("{what} must be a number, found '{s}'"),
    })
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptLine>, ScriptParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| ScriptParseError { line, message };
        let (word, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
        let rest = rest.trim();
        let command = match word {
            "set" => {
                let (var, value) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err("usage: set <var> <value>".into()))?;
                Command::Set {
                    var: var.to_string(),
                    value: value.trim().to_string(),
                }
            }
            "pointer" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [kind, x, y] = parts[..] else {
                    return Err(err("usage: pointer down|move|up <x> <y>".into()));
                };
                let kind = match kind {
                    "down" => PointerKind::Down,
                    "move" => PointerKind::Move,
                    "up" => PointerKind::Up,
                    other => return Err(err(format!("unknown pointer event '{other}'"))),
                };
                Command::Pointer(PointerEvent::new(
                    kind,
                    parse_number(x, line, "x")?,
                    parse_number(y, line, "y")?,
                ))
            }
            "expect" => {
                let (var, value) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err("usage: expect <var> <value> [~tolerance]".into()))?;
                let mut value = value.trim();
                let mut tolerance = None;
                if let Some((v, tol)) = value.rsplit_once(" ~") {
                    tolerance = Some(parse_number(tol.trim(), line, "tolerance")?);
                    value = v.trim_end();
                }
                Command::Expect {
                    var: var.to_string(),
                    value: value.to_string(),
                    tolerance,
                }
            }
            "expect-reject" if rest.is_empty() => Command::ExpectReject,
            "scene" if !rest.is_empty() => Command::Scene(PathBuf::from(rest)),
            other => return Err(err(format!("unknown command '{other}'"))),
        };
        out.push(ScriptLine { line, command });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScriptReport {
    pub checks: usize,
    pub failures: Vec<(usize, String)>,
    /// Informational messages, such as unexpected rejections.
    pub notes: Vec<(usize, String)>,
    /// Every transaction outcome in order: (line, accepted).
    pub outcomes: Vec<(usize, bool)>,
}

impl ScriptReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ScriptReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (line, msg) in &self.notes {
            writeln!(f, "note: line {line}: {msg}")?;
        }
        for (line, msg) in &self.failures {
            writeln!(f, "FAIL line {line}: {msg}")?;
        }
        let passed = self.checks.saturating_sub(self.failures.len());
        write!(f, "{passed} of {} checks passed", self.checks)
    }
}

/// Interprets a script or `--set` value for a variable of type `ty`: numbers accept
/// `NaN`/`inf`, text accepts bare or double-quoted strings.
pub fn typed_literal(raw: &str, ty: ValueType) -> Result<Value, String> {
    let v = Value::parse_literal(raw);
    match (ty, v) {
        (ValueType::Number, v @ Value::Number(_)) => Ok(v),
        (ValueType::Number, Value::Text(_)) => Err(format!("'{raw}' is not a number")),
        (ValueType::Text, v @ Value::Text(_)) => Ok(v),
        (ValueType::Text, Value::Number(_)) => Ok(Value::Text(raw.trim().to_string())),
    }
}

fn matches(actual: &Value, expected: &Value, tolerance: Option<f64>) -> bool {
    match (actual, expected, tolerance) {
        (Value::Number(a), Value::Number(e), Some(t)) => (a - e).abs() <= t || (a.is_nan() && e.is_nan()),
        (Value::Number(a), Value::Number(e), None) => a == e || (a.is_nan() && e.is_nan()),
        (a, e, _) => a == e,
    }
}

fn first_difference(actual: &str, expected: &str) -> String {
    for (i, (a, e)) in actual.lines().zip(expected.lines()).enumerate() {
        if a != e {
            return format!("line {}: expected `{e}`, got `{a}`", i + 1);
        }
    }
    format!(
        "expected {} lines, got {}",
        expected.lines().count(),
        actual.lines().count()
    )
}

pub fn run_script(instance: &mut GuiInstance, script: &[ScriptLine], base_dir: &Path) -> ScriptReport {
    let mut report = ScriptReport::default();
    let mut reject_expected: Option<usize> = None;

    let settle = |report: &mut ScriptReport, line: usize, r: &UpdateResult, pending: &mut Option<usize>| {
        report.outcomes.push((line, r.accepted()));
        match (pending.take(), r.accepted()) {
            (Some(_), true) => report
                .failures
                .push((line, "expected the transaction to be rejected".into())),
            (Some(_), false) => {}
            (None, false) => {
                let v: Vec<_> = r.violated.iter().map(|v| v.index().to_string()).collect();
                report
                    .notes
                    .push((line, format!("transaction rejected (guard {})", v.join(", "))));
            }
            (None, true) => {}
        }
    };

    for ScriptLine { line, command } in script {
        let line = *line;
        match command {
            Command::Set { var, value } => {
                let Ok(id) = instance.solver().lookup(var) else {
                    report.checks += 1;
                    report.failures.push((line, format!("unknown variable '{var}'")));
                    continue;
                };
                let ty = instance.module().variable(id).value_type;
                let value = match typed_literal(value, ty) {
                    Ok(v) => v,
                    Err(e) => {
                        report.checks += 1;
                        report.failures.push((line, e));
                        continue;
                    }
                };
                match instance.solver_mut().set(id, value) {
                    Ok(r) => {
                        if reject_expected.is_some() {
                            report.checks += 1;
                        }
                        settle(&mut report, line, &r, &mut reject_expected)
                    }
                    Err(e) => {
                        report.checks += 1;
                        report.failures.push((line, e.to_string()));
                    }
                }
            }
            Command::Pointer(event) => {
                let r = instance.inject_pointer(*event);
                if reject_expected.is_some() {
                    report.checks += 1;
                }
                settle(&mut report, line, &r, &mut reject_expected);
            }
            Command::ExpectReject => reject_expected = Some(line),
            Command::Expect { var, value, tolerance } => {
                report.checks += 1;
                let Ok(actual) = instance.solver().get_by_name(var) else {
                    report.failures.push((line, format!("unknown variable '{var}'")));
                    continue;
                };
                let expected = match typed_literal(value, actual.value_type()) {
                    Ok(v) => v,
                    Err(e) => {
                        report.failures.push((line, e));
                        continue;
                    }
                };
                if !matches(actual, &expected, *tolerance) {
                    let tol = tolerance.map(|t| format!(" (tolerance {t})")).unwrap_or_default();
                    report
                        .failures
                        .push((line, format!("{var}: expected {expected}{tol}, got {actual}")));
                }
            }
            Command::Scene(file) => {
                report.checks += 1;
                let path = base_dir.join(file);
                let actual = instance.render_svg();
                match fs::read_to_string(&path) {
                    Ok(expected) if expected == actual => {}
                    Ok(expected) => report.failures.push((
                        line,
                        format!(
                            "scene differs from {}: {}",
                            path.display(),
                            first_difference(&actual, &expected)
                        ),
                    )),
                    Err(e) => report
                        .failures
                        .push((line, format!("cannot read {}: {e}", path.display()))),
                }
            }
        }
    }
    if let Some(line) = reject_expected {
        report.checks += 1;
        report
            .failures
            .push((line, "expect-reject with no following transaction".into()));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile_str;
    use crate::functions::FunctionRegistry;
    use std::sync::Arc;

    fn instance(src: &str) -> GuiInstance {
        let c = compile_str(src, "t.cgui", &FunctionRegistry::with_builtins());
        assert!(!c.has_errors(), "{:?}", c.diagnostics);
        GuiInstance::instantiate(Arc::new(c.module.unwrap()), 100.0, 100.0).unwrap()
    }

    const SRC: &str =
        "@gui\n v\n@constraints\n v.X << lo\n v.W << hi - lo\n v.Text << Str.num(lo, 1)\n lo <= hi\n@export lo, hi\n";

    fn run(src: &str, script: &str) -> ScriptReport {
        let mut g = instance(src);
        run_script(&mut g, &parse_script(script).unwrap(), Path::new("."))
    }

    #[test]
    fn parses_all_commands() {
        let s = parse_script(
            "# c\n\nset a 1\nset t \"a b\"\npointer move 1.5 2\nexpect a 3 ~0.1\nexpect-reject\nscene x.svg\n",
        )
        .unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s[0].line, 3);
        assert_eq!(
            s[1].command,
            Command::Set {
                var: "t".into(),
                value: "\"a b\"".into()
            }
        );
        assert_eq!(
            s[3].command,
            Command::Expect {
                var: "a".into(),
                value: "3".into(),
                tolerance: Some(0.1)
            }
        );
        assert_eq!(s[5].command, Command::Scene("x.svg".into()));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(parse_script("set a 1\njump 3\n").unwrap_err().line, 2);
        assert!(parse_script("pointer drag 1 2").is_err());
        assert!(parse_script("pointer down x 2").is_err());
        assert!(parse_script("expect a").is_err());
    }

    #[test]
    fn passing_script() {
        let r = run(SRC, "set hi 50\nset lo 10\nexpect v.X 10\nexpect v.W 40\nexpect v.Text \"10.0\"\nexpect-reject\nset lo 60\nexpect lo 10\n");
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks, 5);
        assert_eq!(r.outcomes, [(1, true), (2, true), (7, false)]);
    }

    #[test]
    fn failures_and_notes() {
        let r = run(
            SRC,
            "set lo 60\nexpect lo 1\nexpect nope 1\nexpect-reject\nset lo -1\nset v.X 3\n",
        );
        assert_eq!(r.notes.len(), 1, "{r}");
        let lines: Vec<_> = r.failures.iter().map(|f| f.0).collect();
        assert_eq!(lines, [2, 3, 5, 6], "{r}");
        assert!(r.failures[0].1.contains("expected 1, got 0"), "{}", r.failures[0].1);
    }

    #[test]
    fn tolerance_and_dangling_reject() {
        let r = run(SRC, "set hi 1\nexpect hi 1.05 ~0.1\nexpect-reject\n");
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].0, 3);
    }
}
