//! The web-target bundle: IR, binding manifest, and an HTML scaffold that
//! loads the preview runtime.

use serde::Serialize;

use super::ir::{emit_ir, IrValue};
use super::GeneratedFile;
use crate::analysis::CompiledModule;
use crate::value::ValueType;

pub const IR_FILE: &str = "module.ir.json";
pub const BINDINGS_FILE: &str = "bindings.json";
pub const INDEX_FILE: &str = "index.html";
pub const DEFAULT_PREVIEW_SCRIPT: &str = "/preview/cgui-preview.js";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WebOptions {
    /// URL of the preview runtime script referenced by `index.html`.
    pub preview_script: String,
}

impl Default for WebOptions {
    fn default() -> Self {
        WebOptions {
            preview_script: DEFAULT_PREVIEW_SCRIPT.to_string(),
        }
    }
}

/// One observable property per export.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Binding {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    pub default: IrValue,
    pub var_id: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct BindingManifest {
    pub module: String,
    pub exports: Vec<Binding>,
}

impl BindingManifest {
    pub fn from_module(m: &CompiledModule) -> BindingManifest {
        let exports = m
            .exports
            .iter()
            .map(|&id| {
                let v = m.variable(id);
                Binding {
                    name: v.name.clone(),
                    value_type: v.value_type,
                    default: IrValue::from_value(&v.default),
                    var_id: id.0,
                }
            })
            .collect();
        BindingManifest {
            module: m.name.clone(),
            exports,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifests always serialize");
        out.push(b'\n');
        out
    }
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// An HTML page hosting the preview runtime. `root_attrs` become `data-*`
/// attributes of the mount element, which is how the runtime learns where its
/// module comes from (bundle files, or a live push channel).
pub fn preview_page(title: &str, root_attrs: &[(&str, &str)], preview_script: &str) -> String {
    let attrs: String = root_attrs
        .iter()
        .map(|(k, v)| format!(" data-{k}=\"{}\"", escape_html(v)))
        .collect();
    format!(
        "<!doctype html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n</head>\n\
         <body>\n<div id=\"cgui-root\"{attrs}></div>\n<script type=\"module\" src=\"{}\"></script>\n</body>\n</html>\n",
        escape_html(title),
        escape_html(preview_script),
    )
}

pub fn emit_web_module(module: &CompiledModule, options: &WebOptions) -> Vec<GeneratedFile> {
    let page = preview_page(
        &module.name,
        &[("ir", IR_FILE), ("bindings", BINDINGS_FILE)],
        &options.preview_script,
    );
    vec![
        GeneratedFile::new(IR_FILE, emit_ir(module)),
        GeneratedFile::new(BINDINGS_FILE, BindingManifest::from_module(module).to_bytes()),
        GeneratedFile::new(INDEX_FILE, page.into_bytes()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile_str;
    use crate::functions::FunctionRegistry;

    fn compile(src: &str) -> CompiledModule {
        let c = compile_str(src, "t.cgui", &FunctionRegistry::with_builtins());
        assert!(!c.has_errors(), "{:?}", c.diagnostics);
        c.module.unwrap()
    }

    fn manifest(src: &str) -> serde_json::Value {
        serde_json::from_slice(&BindingManifest::from_module(&compile(src)).to_bytes()).unwrap()
    }

    #[test]
    fn two_number_exports() {
        let m = manifest("@gui\n v\n@constraints\n v.X << lo\n v.W << hi - lo\n@export lo, hi\n");
        let exports = m["exports"].as_array().unwrap();
        assert_eq!(exports.len(), 2);
        for (e, name) in exports.iter().zip(["lo", "hi"]) {
            assert_eq!(e["name"], name);
            assert_eq!(e["type"], "Number");
            assert_eq!(e["default"], 0.0);
            assert!(e["varId"].is_u64());
        }
    }

    #[test]
    fn text_export_default_is_a_string() {
        let m = manifest("@gui\n v\n@constraints\n label << \"hi\"\n v.Text << label\n@export label\n");
        assert_eq!(m["exports"][0]["type"], "Text");
        assert_eq!(m["exports"][0]["default"], "");
    }

    #[test]
    fn no_exports_still_makes_a_bundle() {
        let files = emit_web_module(&compile("@gui\n v\n"), &WebOptions::default());
        let names: Vec<_> = files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, [IR_FILE, BINDINGS_FILE, INDEX_FILE]);
        let m: serde_json::Value = serde_json::from_slice(&files[1].contents).unwrap();
        assert_eq!(m["exports"], serde_json::json!([]));
        let html = String::from_utf8(files[2].contents.clone()).unwrap();
        assert!(html.contains("src=\"/preview/cgui-preview.js\""));
        assert!(html.contains("data-ir=\"module.ir.json\""));
    }

    #[test]
    fn page_escapes_attributes() {
        let page = preview_page("a<b", &[("x", "\"&")], "/p.js");
        assert!(page.contains("<title>a&lt;b</title>"));
        assert!(page.contains("data-x=\"&quot;&amp;\""));
    }
}
