//! Code generators. Every target starts from the same canonical IR; the
//! registry maps target ids to generators.

mod ir;
mod web;

use thiserror::Error;

use crate::analysis::CompiledModule;

pub use ir::{emit_ir, load_ir, IrDocument, IrNumber, IrValue, LoadError, IR_VERSION};
pub use web::{
    emit_web_module, preview_page, Binding, BindingManifest, WebOptions, BINDINGS_FILE, DEFAULT_PREVIEW_SCRIPT,
    INDEX_FILE, IR_FILE,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedFile {
    /// Relative to the output location.
    pub path: String,
    pub contents: Vec<u8>,
}

impl GeneratedFile {
    pub fn new(path: impl Into<String>, contents: Vec<u8>) -> Self {
        GeneratedFile {
            path: path.into(),
            contents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorDescriptor {
    pub target_id: String,
    pub description: String,
    /// Extension of the main output file.
    pub file_extension: String,
}

pub trait Generator: Send + Sync {
    fn descriptor(&self) -> &GeneratorDescriptor;
    /// A single file is written to the output path itself; several files
    /// form a bundle directory.
    fn generate(&self, module: &CompiledModule) -> Vec<GeneratedFile>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("unknown target '{target}' (available: {})", .available.join(", "))]
    UnknownTarget { target: String, available: Vec<String> },
    #[error("target '{0}' is already registered")]
    DuplicateTarget(String),
}

struct IrGenerator(GeneratorDescriptor);

impl Generator for IrGenerator {
    fn descriptor(&self) -> &GeneratorDescriptor {
        &self.0
    }

    fn generate(&self, module: &CompiledModule) -> Vec<GeneratedFile> {
        vec![GeneratedFile::new(format!("{}.ir.json", module.name), emit_ir(module))]
    }
}

struct WebGenerator(GeneratorDescriptor, WebOptions);

impl Generator for WebGenerator {
    fn descriptor(&self) -> &GeneratorDescriptor {
        &self.0
    }

    fn generate(&self, module: &CompiledModule) -> Vec<GeneratedFile> {
        emit_web_module(module, &self.1)
    }
}

fn descriptor(id: &str, description: &str, ext: &str) -> GeneratorDescriptor {
    GeneratorDescriptor {
        target_id: id.into(),
        description: description.into(),
        file_extension: ext.into(),
    }
}

/// Targets in registration order.
#[derive(Default)]
pub struct GeneratorRegistry {
    generators: Vec<Box<dyn Generator>>,
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `ir` and `web`.
    pub fn with_builtins() -> Self {
        Self::with_web_options(WebOptions::default())
    }

    pub fn with_web_options(web: WebOptions) -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(IrGenerator(descriptor(
            "ir",
            "portable IR document (JSON)",
            "json",
        ))))
        .expect("fresh registry");
        reg.register(Box::new(WebGenerator(
            descriptor("web", "browser bundle: IR, binding manifest, HTML scaffold", "html"),
            web,
        )))
        .expect("fresh registry");
        reg
    }

    pub fn register(&mut self, generator: Box<dyn Generator>) -> Result<(), GeneratorError> {
        let id = &generator.descriptor().target_id;
        if self.get(id).is_some() {
            return Err(GeneratorError::DuplicateTarget(id.clone()));
        }
        self.generators.push(generator);
        Ok(())
    }

    pub fn get(&self, target: &str) -> Option<&dyn Generator> {
        self.generators
            .iter()
            .find(|g| g.descriptor().target_id == target)
            .map(|g| g.as_ref())
    }

    pub fn list_targets(&self) -> Vec<&GeneratorDescriptor> {
        self.generators.iter().map(|g| g.descriptor()).collect()
    }

    pub fn generate(&self, target: &str, module: &CompiledModule) -> Result<Vec<GeneratedFile>, GeneratorError> {
        let generator = self.get(target).ok_or_else(|| GeneratorError::UnknownTarget {
            target: target.to_string(),
            available: self
                .generators
                .iter()
                .map(|g| g.descriptor().target_id.clone())
                .collect(),
        })?;
        Ok(generator.generate(module))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile_str;
    use crate::functions::FunctionRegistry;

    fn module() -> CompiledModule {
        compile_str("@gui\n v\n", "t.cgui", &FunctionRegistry::with_builtins())
            .module
            .unwrap()
    }

    #[test]
    fn builtin_targets() {
        let reg = GeneratorRegistry::with_builtins();
        let ids: Vec<_> = reg.list_targets().iter().map(|d| d.target_id.as_str()).collect();
        assert_eq!(ids, ["ir", "web"]);
        assert_eq!(reg.generate("ir", &module()).unwrap().len(), 1);
        assert_eq!(reg.generate("web", &module()).unwrap().len(), 3);
    }

    #[test]
    fn unknown_target_lists_the_valid_ones() {
        let err = GeneratorRegistry::with_builtins()
            .generate("bogus", &module())
            .unwrap_err();
        assert_eq!(err.to_string(), "unknown target 'bogus' (available: ir, web)");
    }

    struct Dummy(GeneratorDescriptor);

    impl Generator for Dummy {
        fn descriptor(&self) -> &GeneratorDescriptor {
            &self.0
        }
        fn generate(&self, _: &CompiledModule) -> Vec<GeneratedFile> {
            vec![GeneratedFile::new("x.txt", b"x".to_vec())]
        }
    }

    #[test]
    fn registration_is_unique_and_listed() {
        let mut reg = GeneratorRegistry::with_builtins();
        let dup = reg.register(Box::new(Dummy(descriptor("ir", "", "txt"))));
        assert_eq!(dup, Err(GeneratorError::DuplicateTarget("ir".into())));
        reg.register(Box::new(Dummy(descriptor("txt", "text", "txt")))).unwrap();
        assert_eq!(reg.list_targets().len(), 3);
        assert_eq!(reg.generate("txt", &module()).unwrap()[0].path, "x.txt");
    }
}
