//! Atomic output: every file is written to a temporary sibling and renamed
//! into place, so readers never observe a partial file.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use cgui_core::codegen::GeneratedFile;

pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One file goes to `out` itself; several go into the directory `out`.
pub fn write_generated(out: &Path, files: &[GeneratedFile]) -> io::Result<()> {
    match files {
        [single] => write_atomic(out, &single.contents),
        many => {
            fs::create_dir_all(out)?;
            for f in many {
                write_atomic(&out.join(&f.path), &f.contents)?;
            }
            Ok(())
        }
    }
}
