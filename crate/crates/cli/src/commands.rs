//! check, build, eval and render. Exit codes: 0 success, 1 diagnostics or
//! failed checks, 2 I/O and usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cgui_core::codegen::{GeneratorError, GeneratorRegistry};
use cgui_core::compile::{compile_file, Compilation};
use cgui_core::diagnostic::format_diagnostics;
use cgui_core::functions::FunctionRegistry;
use cgui_core::runtime::script::{parse_script, run_script, typed_literal};
use cgui_core::runtime::GuiInstance;

use crate::output::{write_atomic, write_generated};

pub const SUCCESS: u8 = 0;
pub const FAILURE: u8 = 1;
pub const IO_ERROR: u8 = 2;

pub fn parse_viewport(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, found '{s}'"))?;
    let dim = |d: &str| match d.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("'{d}' is not a non-negative size")),
    };
    Ok((dim(w)?, dim(h)?))
}

/// Compiles `file`, printing diagnostics (warnings included) to stderr.
fn compile(file: &Path, search: &[PathBuf]) -> Result<Compilation, u8> {
    match compile_file(file, search, &FunctionRegistry::with_builtins()) {
        Ok(c) => {
            eprint!("{}", format_diagnostics(&c.diagnostics, &c.sources));
            Ok(c)
        }
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            Err(IO_ERROR)
        }
    }
}

/// Compiles and, if there are no errors, wraps the module for execution.
fn compile_module(file: &Path, search: &[PathBuf]) -> Result<Arc<cgui_core::analysis::CompiledModule>, u8> {
    let c = compile(file, search)?;
    match c.module {
        Some(m) if !c.has_errors() => Ok(Arc::new(m)),
        _ => Err(FAILURE),
    }
}

fn instantiate(module: Arc<cgui_core::analysis::CompiledModule>, viewport: (f64, f64)) -> Result<GuiInstance, u8> {
    GuiInstance::instantiate(module, viewport.0, viewport.1).map_err(|e| {
        eprintln!("error: cannot instantiate: {e}");
        FAILURE
    })
}

pub fn check(files: &[PathBuf], search: &[PathBuf]) -> u8 {
    let mut code = SUCCESS;
    for f in files {
        let result = match compile(f, search) {
            Ok(c) if c.has_errors() => FAILURE,
            Ok(_) => SUCCESS,
            Err(e) => e,
        };
        code = code.max(result);
    }
    code
}

pub fn build(file: &Path, target: &str, out: &Path, search: &[PathBuf]) -> u8 {
    let generators = GeneratorRegistry::with_builtins();
    if generators.get(target).is_none() {
        let available: Vec<_> = generators.list_targets().iter().map(|d| d.target_id.clone()).collect();
        eprintln!(
            "error: {}",
            GeneratorError::UnknownTarget {
                target: target.into(),
                available
            }
        );
        return FAILURE;
    }
    let module = match compile_module(file, search) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let files = generators.generate(target, &module).expect("target checked above");
    match write_generated(out, &files) {
        Ok(()) => SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            IO_ERROR
        }
    }
}

pub fn eval(file: &Path, script_path: &Path, viewport: (f64, f64), search: &[PathBuf]) -> u8 {
    let text = match fs::read_to_string(script_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", script_path.display());
            return IO_ERROR;
        }
    };
    let script = match parse_script(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}:{}: error: {}", script_path.display(), e.line, e.message);
            return IO_ERROR;
        }
    };
    let module = match compile_module(file, search) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let mut instance = match instantiate(module, viewport) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let base = script_path.parent().unwrap_or(Path::new("."));
    let report = run_script(&mut instance, &script, base);
    println!("{report}");
    if report.passed() {
        SUCCESS
    } else {
        FAILURE
    }
}

pub fn render(file: &Path, sets: &[String], out: &Path, viewport: (f64, f64), search: &[PathBuf]) -> u8 {
    let mut parsed = Vec::with_capacity(sets.len());
    for s in sets {
        let Some((var, value)) = s.split_once('=') else {
            eprintln!("error: --set expects var=value, found '{s}'");
            return IO_ERROR;
        };
        parsed.push((var.trim(), value));
    }
    let module = match compile_module(file, search) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let mut instance = match instantiate(Arc::clone(&module), viewport) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let mut assignments = Vec::with_capacity(parsed.len());
    for (var, raw) in parsed {
        let Some(id) = module.variable_by_name(var) else {
            eprintln!("error: unknown variable '{var}'");
            return FAILURE;
        };
        match typed_literal(raw, module.variable(id).value_type) {
            Ok(v) => assignments.push((id, v)),
            Err(e) => {
                eprintln!("error: {var}: {e}");
                return FAILURE;
            }
        }
    }
    match instance.solver_mut().set_many(&assignments) {
        Ok(r) if r.accepted() => {}
        Ok(r) => {
            let v: Vec<_> = r.violated.iter().map(|v| v.index().to_string()).collect();
            eprintln!("error: the assignments violate guard(s) {}", v.join(", "));
            return FAILURE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return FAILURE;
        }
    }
    match write_atomic(out, instance.render_svg().as_bytes()) {
        Ok(()) => SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            IO_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viewport_syntax() {
        assert_eq!(parse_viewport("400x300"), Ok((400.0, 300.0)));
        assert_eq!(parse_viewport("0X2.5"), Ok((0.0, 2.5)));
        assert!(parse_viewport("400").is_err());
        assert!(parse_viewport("-1x3").is_err());
        assert!(parse_viewport("infx3").is_err());
    }
}
