//! File-system front door: parse a root file, resolve its imports along a
//! search path and analyze the result.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::analysis::{analyze, resolve_imports, CompiledModule, ModuleLoader};
use crate::diagnostic::{has_errors, Diagnostic, SourceMap};
use crate::functions::FunctionRegistry;
use crate::syntax::{parse_source, AstModule};

/// Resolves `ModuleName` to `ModuleName.cgui` in the first search directory
/// that has it, falling back to the lowercased name (`rangeslider.cgui`).
#[derive(Debug, Default)]
pub struct FsLoader {
    pub search_path: Vec<PathBuf>,
    /// Every source read so far, keyed by the file name used in spans.
    pub sources: SourceMap,
}

impl FsLoader {
    pub fn new(search_path: Vec<PathBuf>) -> Self {
        FsLoader {
            search_path,
            sources: SourceMap::new(),
        }
    }

    pub fn find(&self, name: &str) -> Option<PathBuf> {
        let lower = name.to_lowercase();
        for dir in &self.search_path {
            for candidate in [format!("{name}.cgui"), format!("{lower}.cgui")] {
                let p = dir.join(candidate);
                if p.is_file() {
                    return Some(p);
                }
            }
        }
        None
    }

    fn parse_file(&mut self, path: &Path) -> io::Result<(AstModule, Vec<Diagnostic>)> {
        let source = fs::read_to_string(path)?;
        let file = path.display().to_string();
        let parsed = parse_source(&source, &file);
        self.sources.insert(file, source);
        Ok(parsed)
    }
}

impl ModuleLoader for FsLoader {
    fn load(&mut self, name: &str) -> Option<(AstModule, Vec<Diagnostic>)> {
        let path = self.find(name)?;
        let (mut module, diags) = self.parse_file(&path).ok()?;
        // The instance names the module; the file may be the lowercased form.
        module.name = name.to_string();
        Some((module, diags))
    }
}

#[derive(Debug)]
pub struct Compilation {
    pub module: Option<CompiledModule>,
    pub diagnostics: Vec<Diagnostic>,
    pub sources: SourceMap,
}

impl Compilation {
    pub fn has_errors(&self) -> bool {
        has_errors(&self.diagnostics)
    }
}

/// Compiles an in-memory root module, loading imports through `loader`.
pub fn compile_ast(
    root: &AstModule,
    mut diagnostics: Vec<Diagnostic>,
    loader: &mut dyn ModuleLoader,
    registry: &FunctionRegistry,
) -> (Option<CompiledModule>, Vec<Diagnostic>) {
    if has_errors(&diagnostics) {
        return (None, diagnostics);
    }
    match resolve_imports(root, loader) {
        Err(d) => {
            diagnostics.extend(d);
            (None, diagnostics)
        }
        Ok(flat) => {
            let (module, d) = analyze(&flat, registry);
            diagnostics.extend(d);
            (module, diagnostics)
        }
    }
}

/// Compiles `path`. The file's own directory is searched first, then
/// `search_path` in order. Only failing to read the root file is an I/O error.
pub fn compile_file(path: &Path, search_path: &[PathBuf], registry: &FunctionRegistry) -> io::Result<Compilation> {
    let dir = path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .unwrap_or(Path::new("."));
    let mut dirs = vec![dir.to_path_buf()];
    dirs.extend(search_path.iter().cloned());
    let mut loader = FsLoader::new(dirs);
    let (root, parse_diags) = loader.parse_file(path)?;
    let (module, diagnostics) = compile_ast(&root, parse_diags, &mut loader, registry);
    Ok(Compilation {
        module,
        diagnostics,
        sources: loader.sources,
    })
}

/// Compiles a single self-contained source text (imports are errors).
pub fn compile_str(source: &str, file: &str, registry: &FunctionRegistry) -> Compilation {
    let (root, parse_diags) = parse_source(source, file);
    let mut empty = crate::analysis::MapLoader::default();
    let (module, diagnostics) = compile_ast(&root, parse_diags, &mut empty, registry);
    Compilation {
        module,
        diagnostics,
        sources: SourceMap::single(file, source),
    }
}
